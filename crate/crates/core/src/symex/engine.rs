use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::expr::Formula;
use crate::lang::{DistanceMap, LocId, Lts, MutId};
use crate::mutation::MetaMutant;
use crate::solver::{Constraint, Model, SatResult, SolverHandle};

use super::state::*;
use super::*;

/// Outcome of [`apply_precondition`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PreconditionDecision {
    Follow,
    Release,
    Prune,
}

/// Seed-driven precondition: states follow the seeds until the precondition
/// length is reached.
#[derive(Clone, Debug)]
pub struct Precondition {
    pub seeds: Vec<Vec<i64>>,
    pub length: PreconditionLength,
    /// Release depth for the global strategy; `None` when no seed reaches a
    /// targeted mutation point.
    pub release_depth: Option<usize>,
    pub points: BTreeSet<LocId>,
}

impl Precondition {
    /// Returns `None` when there are no seeds (unconstrained exploration).
    pub fn new(meta: &MetaMutant, targets: &BTreeSet<MutId>, seeds: &[Vec<i64>], length: PreconditionLength, step_budget: u64) -> Option<Self> {
        if seeds.is_empty() {
            return None;
        }
        let points: BTreeSet<LocId> =
            meta.points.iter().filter(|(_, ids)| ids.iter().any(|m| targets.contains(m))).map(|(l, _)| *l).collect();
        let release_depth = seeds
            .iter()
            .filter_map(|s| {
                let trace = seed_trace(&meta.lts, s, step_budget);
                trace.iter().position(|loc| points.contains(loc))
            })
            .min();
        Some(Precondition { seeds: seeds.to_vec(), length, release_depth, points })
    }

    /// Seeds (by index, among `candidates`) satisfying `phi`.
    pub fn satisfying(&self, phi: &Constraint, candidates: &[usize]) -> Vec<usize> {
        candidates.iter().copied().filter(|&i| phi.holds(&mut |v| self.seeds[i].get(*v).copied().unwrap_or(0))).collect()
    }
}

fn seed_trace(lts: &Lts, seed: &[i64], budget: u64) -> Vec<LocId> {
    let mut valuation = crate::exec::Valuation::new();
    for (id, v) in lts.inputs() {
        valuation.insert(v.name.clone(), seed[id]);
    }
    crate::exec::run_concrete(lts, 0, &valuation, budget).map(|t| t.locations()).unwrap_or_default()
}

/// Decides whether a seed-following state keeps following, is released to
/// unconstrained exploration, or is pruned. `state.seeds` must already hold
/// the seeds satisfying its path condition.
pub fn apply_precondition(state: &SymbolicState, pre: &Precondition) -> PreconditionDecision {
    if state.seeds.is_empty() {
        return PreconditionDecision::Prune;
    }
    let reached = match pre.length {
        PreconditionLength::Gmd2ms => pre.release_depth.is_some_and(|l| state.depth >= l),
        PreconditionLength::Smd2ms => pre.points.contains(&state.location),
    };
    if reached {
        PreconditionDecision::Release
    } else {
        PreconditionDecision::Follow
    }
}

/// Keep iff the mutant state can differ from the paired original state.
pub fn infection_check(mutant: &SymbolicState, original: &SymbolicState, solver: &SolverHandle) -> Result<(bool, Option<Model>), SymexError> {
    let c = Formula::conj([original.path_condition.clone(), mutant.path_condition.clone(), state_difference(original, mutant)]);
    match solver.check(&c)? {
        SatResult::Sat(m) => Ok((true, Some(m))),
        _ => Ok((false, None)),
    }
}

/// Whether a mutant state at a branching location, having traversed
/// `branches` branching locations since the fork (this one included), sits
/// at a checkpoint.
pub fn is_checkpoint(branches: u32, cw: u32) -> bool {
    branches > 0 && branches.is_multiple_of(cw + 1)
}

/// Number of candidates kept by the propagating proportion.
pub fn keep_count(pp: f64, n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    ((pp * n as f64).floor() as usize).clamp(1, n)
}

/// Splits checkpoint candidates into kept and pruned, both in input order.
pub fn select_branches(
    candidates: Vec<SymbolicState>,
    pp: f64,
    pss: SelectionStrategy,
    dist: &DistanceMap,
    rng: &mut ChaCha8Rng,
) -> (Vec<SymbolicState>, Vec<SymbolicState>) {
    let n = candidates.len();
    let keep = keep_count(pp, n);
    let chosen: BTreeSet<usize> = match pss {
        SelectionStrategy::Rnd => sample(rng, n, keep).into_iter().collect(),
        SelectionStrategy::Mdo => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by_key(|&i| (dist.rank(candidates[i].location), candidates[i].location, i));
            idx.into_iter().take(keep).collect()
        }
    };
    let mut kept = Vec::new();
    let mut pruned = Vec::new();
    for (i, s) in candidates.into_iter().enumerate() {
        if chosen.contains(&i) {
            kept.push(s);
        } else {
            pruned.push(s);
        }
    }
    (kept, pruned)
}

/// `φ_P ∧ φ_M ∧ (σ_P ≠ σ_M)`, without the difference clause under NSD.
pub fn build_partial_kill(original: &SymbolicState, mutant: &SymbolicState, cfg: &Config) -> Result<Constraint, SymexError> {
    if original.depth != mutant.depth {
        return Err(SymexError::DepthMismatch { original: original.depth, mutant: mutant.depth });
    }
    let mut parts = vec![original.path_condition.clone(), mutant.path_condition.clone()];
    if !cfg.nsd {
        parts.push(state_difference(original, mutant));
    }
    Ok(Formula::conj(parts))
}

/// `φ_P ∧ φ_M ∧ (Out_P ≠ Out_M)` for terminated states.
pub fn build_kill(original: &SymbolicState, mutant: &SymbolicState) -> Constraint {
    Formula::conj([original.path_condition.clone(), mutant.path_condition.clone(), output_difference(original, mutant)])
}

/// First original (in the given order) that descends from the mutant's fork
/// origin and whose path condition is compatible with the mutant's.
pub fn pair_states<'a>(
    mutant: &SymbolicState,
    originals: &'a [SymbolicState],
    solver: &SolverHandle,
) -> Result<Option<&'a SymbolicState>, SymexError> {
    for p in originals {
        if p.depth != mutant.depth || !descends(p, mutant) {
            continue;
        }
        let c = Formula::conj([p.path_condition.clone(), mutant.path_condition.clone()]);
        if solver.check(&c)?.is_sat() {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

fn descends(original: &SymbolicState, mutant: &SymbolicState) -> bool {
    match (mutant.fork_origin, mutant.fork_depth) {
        (Some(origin), Some(depth)) => original.trail.passes_through(origin, depth),
        _ => false,
    }
}

struct Engine<'a> {
    meta: &'a MetaMutant,
    lts: &'a Lts,
    targets: &'a BTreeSet<MutId>,
    cfg: &'a Config,
    solver: &'a SolverHandle,
    dist: DistanceMap,
    rng: ChaCha8Rng,
    pre: Option<Precondition>,
    next_id: StateId,
    start: Instant,
    stop: bool,
    stats: ExplorationStats,
    tests: Vec<GeneratedTest>,
    seen_tests: BTreeSet<(MutId, Vec<(String, i64)>)>,
    events: Vec<Event>,
    terminated: Vec<SymbolicState>,
    pending: Vec<SymbolicState>,
}

impl Engine<'_> {
    fn admit(&mut self) -> bool {
        if self.stop {
            return false;
        }
        let over_states = self.cfg.budget.max_states.is_some_and(|m| self.stats.states_created >= m);
        let over_time = self.cfg.budget.wall_clock.is_some_and(|w| self.start.elapsed() >= w);
        if over_states || over_time {
            self.stats.budget_exhausted = true;
            self.stop = true;
            return false;
        }
        self.stats.states_created += 1;
        self.next_id += 1;
        true
    }

    fn solve(&mut self, c: &Constraint) -> Option<Model> {
        if self.stop && self.stats.aborted.is_some() {
            return None;
        }
        self.stats.solver_calls += 1;
        match self.solver.check(c) {
            Ok(SatResult::Sat(m)) => Some(m),
            Ok(SatResult::Unsat) => None,
            Ok(SatResult::Unknown(_)) => {
                self.stats.solver_unknown += 1;
                None
            }
            Err(e) => {
                self.stats.aborted = Some(e.to_string());
                self.stop = true;
                None
            }
        }
    }

    fn capped(&self, m: MutId) -> bool {
        self.stats.tests_per_mutant.get(&m).copied().unwrap_or(0) >= self.cfg.ntpm
    }

    fn record(&mut self, e: Event) {
        if self.cfg.record_events {
            self.events.push(e);
        }
    }

    fn emit_test(&mut self, model: Model, target: MutId, site: Site, k: usize, original: &SymbolicState) {
        let key = (target, model.values.iter().map(|(a, b)| (a.clone(), *b)).collect::<Vec<_>>());
        if !self.seen_tests.insert(key) {
            return;
        }
        *self.stats.tests_per_mutant.entry(target).or_insert(0) += 1;
        self.tests.push(GeneratedTest { input: model.values, target, site, k, original_path: original.trail.locations() });
    }

    /// Feasible child states of `st` under selector `sel` (new mutant states
    /// take `sel` as their identity).
    fn children(&mut self, st: &SymbolicState, sel: MutId, extra: &Constraint) -> Vec<(SymbolicState, Option<usize>)> {
        let succs = successors(self.lts, st, sel);
        let mut out = Vec::new();
        for s in succs {
            // `extra` is already normalized
            let cond = normalize(&s.condition);
            if *extra == Formula::False || cond == Formula::False {
                self.stats.pruned_infeasible += 1;
                continue;
            }
            let added = Formula::conj([extra.clone(), cond]);
            if added == Formula::False {
                self.stats.pruned_infeasible += 1;
                continue;
            }
            let phi = Formula::conj([st.path_condition.clone(), added.clone()]);
            let witness = match &st.witness {
                Some(w) if added.holds(&mut |v| w[*v]) => Some(w.clone()),
                _ => match self.solve(&phi) {
                    Some(m) => Some(m.to_vector(&self.solver.domains)),
                    None => {
                        if !self.stop {
                            self.stats.pruned_infeasible += 1;
                        }
                        continue;
                    }
                },
            };
            let mut child = st.child(&s, self.next_id, sel, phi);
            if child.term_size() > self.cfg.max_term_size {
                self.stats.pruned_term_size += 1;
                continue;
            }
            if !self.admit() {
                return out;
            }
            child.witness = witness;
            let index = if s.status == RunStatus::Error && s.transition.is_none() { None } else { Some(s.index) };
            out.push((child, index));
        }
        out
    }

    fn precondition(&mut self, mut st: SymbolicState) -> Option<SymbolicState> {
        let Some(pre) = &self.pre else { return Some(st) };
        if !st.seed_following {
            return Some(st);
        }
        st.seeds = pre.satisfying(&st.path_condition, &st.seeds);
        let decision = apply_precondition(&st, pre);
        if let Some(s) = st.seeds.first() {
            st.witness = Some(pre.seeds[*s].clone());
        }
        self.record(Event::Precondition {
            depth: st.depth,
            location: st.location,
            decision,
            path_condition: st.path_condition.clone(),
        });
        match decision {
            PreconditionDecision::Prune => {
                self.stats.pruned_by_precondition += 1;
                None
            }
            PreconditionDecision::Release => {
                st.seed_following = false;
                Some(st)
            }
            PreconditionDecision::Follow => Some(st),
        }
    }

    fn expand_original(&mut self, st: SymbolicState, next: &mut Vec<SymbolicState>) {
        let children = self.children(&st, 0, &Formula::True);
        let forks: Vec<MutId> = if self.cfg.mode == Mode::Vanilla || st.seed_following {
            Vec::new()
        } else {
            self.meta.points_at(st.location).iter().copied().filter(|m| self.targets.contains(m) && !self.capped(*m)).collect()
        };
        let mut originals = Vec::new();
        for (mut child, index) in children {
            if let (Some(i), false) = (index, forks.is_empty()) {
                if child.status != RunStatus::Error {
                    let orig_t = self.lts.outgoing_for(st.location, 0).nth(i).unwrap();
                    let mut clean = (*child.clean).clone();
                    for &m in &forks {
                        let mut_t = self.lts.outgoing_for(st.location, m).nth(i).unwrap();
                        let c = non_infection(&st, orig_t, mut_t);
                        let prev = clean.remove(&m).unwrap_or(Formula::True);
                        let c = normalize(&c);
                        let next = if c == Formula::False { c } else { Formula::conj([prev, c]) };
                        clean.insert(m, next);
                    }
                    child.clean = Arc::new(clean);
                }
            }
            originals.push(child);
        }
        for &m in &forks {
            self.fork(&st, m, &originals, next);
        }
        for child in originals {
            if let Some(c) = self.precondition(child) {
                next.push(c);
            }
        }
    }

    fn fork(&mut self, st: &SymbolicState, m: MutId, originals: &[SymbolicState], next: &mut Vec<SymbolicState>) {
        let clean = st.clean.get(&m).cloned().unwrap_or(Formula::True);
        let mut parent = st.clone();
        parent.fork_origin = Some(st.id);
        parent.fork_depth = Some(st.depth);
        parent.checkpoints_passed = 0;
        parent.branches_since_fork = 0;
        parent.seed_following = false;
        let children = self.children(&parent, m, &clean);
        self.stats.forks += 1;
        for (child, _) in children {
            let mut infected = None;
            for p in originals {
                if self.stop {
                    return;
                }
                self.stats.solver_calls += 1;
                match infection_check(&child, p, self.solver) {
                    Ok((true, model)) => {
                        infected = Some((p.clone(), model));
                        break;
                    }
                    Ok((false, _)) => {}
                    Err(e) => {
                        self.stats.aborted = Some(e.to_string());
                        self.stop = true;
                        return;
                    }
                }
            }
            match infected {
                None => self.stats.pruned_noninfected += 1,
                Some((p, model)) => match self.cfg.mode {
                    Mode::InfectionOnly => {
                        if let Some(model) = model {
                            if !self.capped(m) {
                                self.emit_test(model, m, Site::Checkpoint, child.depth, &p);
                            }
                        }
                    }
                    _ => next.push(child),
                },
            }
        }
    }

    fn expand_mutant(&mut self, st: SymbolicState, next: &mut Vec<SymbolicState>, pools: &mut BTreeMap<MutId, Vec<SymbolicState>>) {
        let m = st.mut_id;
        let branching = self.lts.location(st.location).kind.is_branching();
        let mut checkpoint = false;
        let mut count = st.branches_since_fork;
        if branching {
            count += 1;
            checkpoint = is_checkpoint(count, self.cfg.cw);
            self.record(Event::Branch { mutant: m, depth: st.depth, location: st.location, count, checkpoint });
        }
        let children = self.children(&st, m, &Formula::True);
        for (mut child, _) in children {
            child.branches_since_fork = count;
            if checkpoint {
                child.checkpoints_passed += 1;
                pools.entry(m).or_default().push(child);
            } else {
                next.push(child);
            }
        }
    }

    fn select(&mut self, pools: BTreeMap<MutId, Vec<SymbolicState>>, next: &mut Vec<SymbolicState>) {
        for (m, pool) in pools {
            if self.capped(m) {
                continue;
            }
            let n = pool.len();
            let (kept, pruned) = select_branches(pool, self.cfg.pp, self.cfg.pss, &self.dist, &mut self.rng);
            let depth = kept.first().map(|s| s.depth).unwrap_or(0);
            self.record(Event::Selection {
                mutant: m,
                depth,
                candidates: n,
                kept: kept.iter().map(|s| s.location).collect(),
            });
            self.stats.pruned_by_pp += pruned.len() as u64;
            for p in pruned {
                if p.checkpoints_passed >= self.cfg.mpd && !self.capped(m) && !self.stop {
                    self.generate_partial(&p, next);
                }
            }
            next.extend(kept);
        }
    }

    fn generate_partial(&mut self, mutant: &SymbolicState, originals: &[SymbolicState]) {
        let candidates: Vec<SymbolicState> =
            originals.iter().filter(|p| p.is_original() && p.depth == mutant.depth && descends(p, mutant)).cloned().collect();
        for p in candidates {
            let Ok(c) = build_partial_kill(&p, mutant, self.cfg) else { continue };
            if let Some(model) = self.solve(&c) {
                self.emit_test(model, mutant.mut_id, Site::Checkpoint, mutant.depth, &p);
                return;
            }
        }
    }

    fn on_original_terminal(&mut self, p: SymbolicState) {
        if self.cfg.mode == Mode::Vanilla {
            if let Some(model) = self.solve(&p.path_condition.clone()) {
                self.emit_test(model, 0, Site::Terminal, p.depth, &p);
            }
            return;
        }
        let pending = std::mem::take(&mut self.pending);
        for m in pending {
            if self.capped(m.mut_id) {
                continue;
            }
            if descends(&p, &m) {
                if let Some(model) = self.solve(&build_kill(&p, &m)) {
                    self.emit_test(model, m.mut_id, Site::Terminal, m.depth, &p);
                    continue;
                }
            }
            self.pending.push(m);
        }
        self.terminated.push(p);
    }

    fn on_mutant_terminal(&mut self, m: SymbolicState) {
        if self.capped(m.mut_id) {
            return;
        }
        let candidates: Vec<SymbolicState> = self.terminated.iter().filter(|p| descends(p, &m)).cloned().collect();
        for p in candidates {
            if let Some(model) = self.solve(&build_kill(&p, &m)) {
                self.emit_test(model, m.mut_id, Site::Terminal, m.depth, &p);
                return;
            }
        }
        self.pending.push(m);
    }

    fn run(&mut self) {
        if !self.admit() {
            return;
        }
        let mut init = SymbolicState::initial(self.lts, self.next_id);
        init.witness = Some(self.solver.domains.lowest());
        if let Some(pre) = &self.pre {
            init.seed_following = true;
            init.seeds = (0..pre.seeds.len()).collect();
        }
        let mut frontier: Vec<SymbolicState> = self.precondition(init).into_iter().collect();
        let mut first = Vec::new();
        self.settle(std::mem::take(&mut frontier), &mut first);
        frontier = first;
        while !frontier.is_empty() && !self.stop {
            let mut next = Vec::new();
            let mut pools: BTreeMap<MutId, Vec<SymbolicState>> = BTreeMap::new();
            self.stats.max_depth = self.stats.max_depth.max(frontier[0].depth);
            for st in frontier {
                if self.stop {
                    break;
                }
                if st.is_original() {
                    self.expand_original(st, &mut next);
                } else if !self.capped(st.mut_id) {
                    self.expand_mutant(st, &mut next, &mut pools);
                }
            }
            self.select(pools, &mut next);
            let mut live = Vec::new();
            self.settle(next, &mut live);
            frontier = live;
        }
    }

    /// Routes terminated states to kill generation and keeps running ones.
    fn settle(&mut self, states: Vec<SymbolicState>, live: &mut Vec<SymbolicState>) {
        let (done, running): (Vec<_>, Vec<_>) = states.into_iter().partition(|s| s.is_terminated());
        for s in done.iter().filter(|s| s.is_original()).cloned().collect::<Vec<_>>() {
            self.on_original_terminal(s);
        }
        for s in done.into_iter().filter(|s| !s.is_original()) {
            self.on_mutant_terminal(s);
        }
        live.extend(running.into_iter().filter(|s| s.is_original() || !self.capped(s.mut_id)));
    }
}

/// Breadth-first exploration of the meta-mutant, lock-step by depth.
pub fn explore(
    meta: &MetaMutant,
    targets: &BTreeSet<MutId>,
    seeds: &[crate::exec::Valuation],
    cfg: &Config,
    solver: &SolverHandle,
) -> Result<Exploration, SymexError> {
    cfg.validate()?;
    let mut seed_vectors = Vec::new();
    for s in seeds {
        let mut v = solver.domains.lowest();
        let values = crate::exec::initial_values(&meta.lts, s).map_err(|e| SymexError::Seed(e.to_string()))?;
        for (id, _) in meta.lts.inputs() {
            v[id] = values[id];
        }
        seed_vectors.push(v);
    }
    let pre = Precondition::new(meta, targets, &seed_vectors, cfg.pl, cfg.step_budget);
    let mut engine = Engine {
        meta,
        lts: &meta.lts,
        targets,
        cfg,
        solver,
        dist: meta.original.distance_to_output(),
        rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
        pre,
        next_id: 0,
        start: Instant::now(),
        stop: false,
        stats: ExplorationStats::default(),
        tests: Vec::new(),
        seen_tests: BTreeSet::new(),
        events: Vec::new(),
        terminated: Vec::new(),
        pending: Vec::new(),
    };
    engine.run();
    engine.stats.wall_clock = engine.start.elapsed();
    Ok(Exploration { tests: engine.tests, stats: engine.stats, events: engine.events })
}
