use std::collections::BTreeMap;
use std::sync::Arc;

use crate::expr::{CmpOp, Formula, Term};
use crate::lang::{LocId, Lts, MutId, Transition, VarId, VarKind};
use crate::solver::Constraint;

pub type StateId = u64;

/// Persistent list of the states a path went through, newest first.
#[derive(Debug)]
pub struct Trail {
    pub state: StateId,
    pub location: LocId,
    pub depth: usize,
    pub parent: Option<Arc<Trail>>,
}

impl Trail {
    /// Locations from the entry to this point.
    pub fn locations(self: &Arc<Self>) -> Vec<LocId> {
        let mut out = Vec::new();
        let mut cur = Some(self.clone());
        while let Some(t) = cur {
            out.push(t.location);
            cur = t.parent.clone();
        }
        out.reverse();
        out
    }

    /// Whether the state `ancestor` (at `depth`) lies on this trail.
    pub fn passes_through(self: &Arc<Self>, ancestor: StateId, depth: usize) -> bool {
        let mut cur = Some(self.clone());
        while let Some(t) = cur {
            if t.depth < depth {
                return false;
            }
            if t.state == ancestor {
                return true;
            }
            cur = t.parent.clone();
        }
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Running,
    Exited,
    Error,
}

/// Node of the exploration tree.
#[derive(Clone, Debug)]
pub struct SymbolicState {
    pub id: StateId,
    pub path_condition: Constraint,
    /// Symbolic value of every program variable over the input symbols.
    pub store: Vec<Term<VarId>>,
    /// Symbolic values emitted so far.
    pub outputs: Vec<Term<VarId>>,
    pub status: RunStatus,
    pub location: LocId,
    pub mut_id: MutId,
    pub depth: usize,
    pub fork_depth: Option<usize>,
    /// Original state the mutant state was forked from.
    pub fork_origin: Option<StateId>,
    pub checkpoints_passed: u32,
    /// Branching locations traversed since the fork.
    pub branches_since_fork: u32,
    pub seed_following: bool,
    pub trail: Arc<Trail>,
    /// Input vector known to satisfy the path condition, if any.
    pub witness: Option<Vec<i64>>,
    /// Indices of seeds satisfying the path condition while seed-following.
    pub seeds: Vec<usize>,
    /// Per mutant: condition under which every earlier encounter of the
    /// mutated location on this path left the state unchanged.
    pub clean: Arc<BTreeMap<MutId, Constraint>>,
}

impl SymbolicState {
    pub fn initial(lts: &Lts, id: StateId) -> Self {
        let store = lts
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| match v.kind {
                VarKind::Input { .. } => Term::Var(i),
                VarKind::Local => Term::Const(0),
            })
            .collect();
        let status = if lts.is_terminal(lts.entry) { RunStatus::Exited } else { RunStatus::Running };
        SymbolicState {
            id,
            path_condition: Formula::True,
            store,
            outputs: Vec::new(),
            status,
            location: lts.entry,
            mut_id: 0,
            depth: 0,
            fork_depth: None,
            fork_origin: None,
            checkpoints_passed: 0,
            branches_since_fork: 0,
            seed_following: false,
            trail: Arc::new(Trail { state: id, location: lts.entry, depth: 0, parent: None }),
            witness: None,
            seeds: Vec::new(),
            clean: Arc::new(BTreeMap::new()),
        }
    }

    pub fn is_original(&self) -> bool {
        self.mut_id == 0
    }

    pub fn is_terminated(&self) -> bool {
        self.status != RunStatus::Running
    }

    /// State reached through `s`, with selector `mut_id` and path
    /// condition `path_condition` (the parent's conjoined with `s.condition`).
    /// Fork bookkeeping, seeds and clean conditions are inherited.
    pub fn child(&self, s: &Successor, id: StateId, mut_id: MutId, path_condition: Constraint) -> SymbolicState {
        let (store, outputs, location) = match (s.status, s.transition) {
            (RunStatus::Error, _) | (_, None) => (self.store.clone(), self.outputs.clone(), self.location),
            (_, Some(t)) => {
                let (store, outputs) = apply_update(self, t);
                (store, outputs, t.dst)
            }
        };
        SymbolicState {
            id,
            path_condition,
            store,
            outputs,
            status: s.status,
            location,
            mut_id,
            depth: self.depth + 1,
            trail: Arc::new(Trail { state: id, location, depth: self.depth + 1, parent: Some(self.trail.clone()) }),
            witness: None,
            ..self.clone()
        }
    }

    /// Largest term in the store or outputs.
    pub fn term_size(&self) -> usize {
        self.store.iter().chain(&self.outputs).map(Term::size).max().unwrap_or(0)
    }

    /// [`Self::child`] with the path condition extended by `s.condition`.
    pub fn step(&self, s: &Successor, id: StateId, mut_id: MutId) -> SymbolicState {
        let phi = normalize(&Formula::conj([self.path_condition.clone(), s.condition.clone()]));
        self.child(s, id, mut_id, phi)
    }

    pub fn substitute(&self, t: &Term<VarId>) -> Term<VarId> {
        t.substitute(&|v| self.store[*v].clone()).simplify()
    }

    pub fn substitute_formula(&self, f: &Formula<VarId>) -> Constraint {
        normalize(&f.substitute(&|v| self.store[*v].clone()))
    }
}

/// Model-preserving normalization that never hides a division error.
pub fn normalize(f: &Constraint) -> Constraint {
    if f.has_division() {
        f.map_terms(&|t| t.simplify())
    } else {
        f.simplify()
    }
}

fn nonzero(divisors: Vec<Term<VarId>>) -> Constraint {
    let mut parts: Vec<Constraint> = Vec::new();
    for d in divisors {
        let c = Formula::Cmp(CmpOp::Ne, d.simplify(), Term::Const(0));
        if !parts.contains(&c) {
            parts.push(c);
        }
    }
    Formula::conj(parts)
}

/// Successor of a state under one transition (or an error exit).
#[derive(Clone, Debug)]
pub struct Successor<'a> {
    /// Conjunct added to the path condition.
    pub condition: Constraint,
    pub transition: Option<&'a Transition>,
    /// Position of the transition among the enabled ones.
    pub index: usize,
    pub status: RunStatus,
}

/// Successors of `st` for selector value `mut_id`: one per enabled
/// transition, plus error exits when a guard or update divides by a value
/// that may be zero. Evaluation is strict, so every divisor of the guards
/// must be non-zero before a transition is chosen.
pub fn successors<'a>(lts: &'a Lts, st: &SymbolicState, mut_id: MutId) -> Vec<Successor<'a>> {
    let enabled: Vec<&Transition> = lts.outgoing_for(st.location, mut_id).collect();
    let mut guard_divs = Vec::new();
    for t in &enabled {
        t.cmd.guard.substitute(&|v| st.store[*v].clone()).collect_divisors(&mut guard_divs);
    }
    let guards_defined = nonzero(guard_divs);
    let mut out = Vec::new();
    if guards_defined != Formula::True {
        out.push(Successor { condition: normalize(&guards_defined.negate()), transition: None, index: usize::MAX, status: RunStatus::Error });
    }
    for (index, t) in enabled.iter().enumerate() {
        let guard = t.cmd.guard.substitute(&|v| st.store[*v].clone());
        let mut upd_divs = Vec::new();
        for (_, term) in &t.cmd.update.assigns {
            term.substitute(&|v| st.store[*v].clone()).collect_divisors(&mut upd_divs);
        }
        if let Some(e) = &t.cmd.update.emit {
            e.substitute(&|v| st.store[*v].clone()).collect_divisors(&mut upd_divs);
        }
        let update_defined = nonzero(upd_divs);
        let base = Formula::conj([guards_defined.clone(), guard]);
        if update_defined != Formula::True {
            out.push(Successor {
                condition: normalize(&Formula::conj([base.clone(), update_defined.negate()])),
                transition: Some(t),
                index,
                status: RunStatus::Error,
            });
        }
        let status = if lts.is_terminal(t.dst) { RunStatus::Exited } else { RunStatus::Running };
        out.push(Successor { condition: normalize(&Formula::conj([base, update_defined])), transition: Some(t), index, status });
    }
    out
}

/// Store and outputs after firing `t` from `st` (only for non-error successors).
pub fn apply_update(st: &SymbolicState, t: &Transition) -> (Vec<Term<VarId>>, Vec<Term<VarId>>) {
    let mut store = st.store.clone();
    for (v, term) in &t.cmd.update.assigns {
        store[*v] = st.substitute(term);
    }
    let mut outputs = st.outputs.clone();
    if let Some(e) = &t.cmd.update.emit {
        outputs.push(st.substitute(e));
    }
    (store, outputs)
}

/// Disjunction of differences between two states: location, status,
/// emitted outputs, and per-variable values.
pub fn state_difference(a: &SymbolicState, b: &SymbolicState) -> Constraint {
    if a.location != b.location || a.status != b.status || a.outputs.len() != b.outputs.len() {
        return Formula::True;
    }
    let pairs = a
        .outputs
        .iter()
        .cloned()
        .zip(b.outputs.iter().cloned())
        .chain(a.store.iter().cloned().zip(b.store.iter().cloned()));
    Formula::tuple_ne(pairs)
}

/// Observable difference of two terminated states: status or emitted values.
pub fn output_difference(a: &SymbolicState, b: &SymbolicState) -> Constraint {
    if a.status != b.status || a.outputs.len() != b.outputs.len() {
        return Formula::True;
    }
    Formula::tuple_ne(a.outputs.iter().cloned().zip(b.outputs.iter().cloned()))
}

/// Condition under which the mutant's transition at position `index` behaves
/// exactly like the original's transition at that position.
pub fn non_infection(st: &SymbolicState, original: &Transition, mutant: &Transition) -> Constraint {
    let mut parts = Vec::new();
    let mut divs = Vec::new();
    let guard = mutant.cmd.guard.substitute(&|v| st.store[*v].clone());
    guard.collect_divisors(&mut divs);
    parts.push(guard);
    if original.dst != mutant.dst {
        return Formula::False;
    }
    let mut targets: Vec<VarId> = original.cmd.update.assigns.iter().chain(&mutant.cmd.update.assigns).map(|(v, _)| *v).collect();
    targets.sort_unstable();
    targets.dedup();
    let value = |t: &Transition, v: VarId| -> Term<VarId> {
        match t.cmd.update.assigns.iter().find(|(x, _)| *x == v) {
            Some((_, term)) => term.substitute(&|x| st.store[*x].clone()),
            None => st.store[v].clone(),
        }
    };
    for v in targets {
        let m = value(mutant, v);
        m.collect_divisors(&mut divs);
        parts.push(Formula::Cmp(CmpOp::Eq, value(original, v), m));
    }
    match (&original.cmd.update.emit, &mutant.cmd.update.emit) {
        (None, None) => {}
        (Some(a), Some(b)) => {
            let b = b.substitute(&|x| st.store[*x].clone());
            b.collect_divisors(&mut divs);
            parts.push(Formula::Cmp(CmpOp::Eq, a.substitute(&|x| st.store[*x].clone()), b));
        }
        _ => return Formula::False,
    }
    parts.push(nonzero(divs));
    normalize(&Formula::conj(parts))
}
