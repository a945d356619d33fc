use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use super::ast::Span;
use super::LangError;
use crate::expr::{Formula, Term};

/// Control location identifier, 1-based and dense.
pub type LocId = usize;
/// Index into [`Lts::variables`].
pub type VarId = usize;
/// Mutant identifier; 0 is the original program.
pub type MutId = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarKind {
    Input { lo: i64, hi: i64 },
    Local,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LocKind {
    Assign,
    Call,
    Output,
    If,
    While,
    Exit,
}

impl LocKind {
    pub fn is_branching(self) -> bool {
        matches!(self, LocKind::If | LocKind::While)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub id: LocId,
    pub kind: LocKind,
    pub span: Span,
    /// Source text of the statement, e.g. `n = x` or `if (x >= 0)`.
    pub text: String,
}

/// Simultaneous assignment plus an optional emitted output value. Variables
/// not listed keep their value.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Update {
    pub assigns: Vec<(VarId, Term<VarId>)>,
    pub emit: Option<Term<VarId>>,
}

impl Update {
    pub fn identity() -> Self {
        Update::default()
    }

    pub fn is_identity(&self) -> bool {
        self.emit.is_none() && self.assigns.iter().all(|(v, t)| *t == Term::Var(*v))
    }
}

/// `[guard] update`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GuardedCommand {
    pub guard: Formula<VarId>,
    pub update: Update,
}

/// Which values of the mutant selector a transition is enabled for.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Selector {
    Any,
    /// Original behavior, disabled for the listed mutants.
    Except(Vec<MutId>),
    Only(MutId),
}

impl Selector {
    pub fn admits(&self, mut_id: MutId) -> bool {
        match self {
            Selector::Any => true,
            Selector::Except(ids) => !ids.contains(&mut_id),
            Selector::Only(m) => *m == mut_id,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub src: LocId,
    pub dst: LocId,
    pub cmd: GuardedCommand,
    pub selector: Selector,
}

/// Program as a labeled transition system over guarded commands.
#[derive(Clone, Debug)]
pub struct Lts {
    pub locations: Vec<Location>,
    pub entry: LocId,
    pub terminals: Vec<LocId>,
    pub variables: Vec<Variable>,
    pub transitions: Vec<Transition>,
    outgoing: Vec<Vec<usize>>,
}

/// Shortest distance (in transitions) from each location to a terminal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMap {
    dist: Vec<Option<u32>>,
}

impl DistanceMap {
    /// `None` when the location cannot reach a terminal.
    pub fn get(&self, loc: LocId) -> Option<u32> {
        self.dist.get(loc.wrapping_sub(1)).copied().flatten()
    }

    /// Distance with unreachable locations mapped to `u32::MAX`, for sorting.
    pub fn rank(&self, loc: LocId) -> u32 {
        self.get(loc).unwrap_or(u32::MAX)
    }
}

impl Lts {
    pub fn new(
        locations: Vec<Location>,
        entry: LocId,
        terminals: Vec<LocId>,
        variables: Vec<Variable>,
        transitions: Vec<Transition>,
    ) -> Self {
        let mut lts = Lts { locations, entry, terminals, variables, transitions, outgoing: Vec::new() };
        lts.reindex();
        lts
    }

    /// Rebuilds the per-location transition index after `transitions` changed.
    pub fn reindex(&mut self) {
        let mut outgoing = vec![Vec::new(); self.locations.len()];
        for (i, t) in self.transitions.iter().enumerate() {
            if let Some(slot) = outgoing.get_mut(t.src.wrapping_sub(1)) {
                slot.push(i);
            }
        }
        self.outgoing = outgoing;
    }

    pub fn location(&self, id: LocId) -> &Location {
        &self.locations[id - 1]
    }

    pub fn num_locations(&self) -> usize {
        self.locations.len()
    }

    pub fn is_terminal(&self, id: LocId) -> bool {
        self.terminals.contains(&id)
    }

    /// All transitions leaving `loc`, regardless of selector.
    pub fn outgoing(&self, loc: LocId) -> impl Iterator<Item = &Transition> + '_ {
        self.outgoing.get(loc.wrapping_sub(1)).into_iter().flatten().map(move |&i| &self.transitions[i])
    }

    /// Transitions leaving `loc` that are enabled when the selector equals `mut_id`.
    pub fn outgoing_for(&self, loc: LocId, mut_id: MutId) -> impl Iterator<Item = &Transition> + '_ {
        self.outgoing(loc).filter(move |t| t.selector.admits(mut_id))
    }

    pub fn inputs(&self) -> impl Iterator<Item = (VarId, &Variable)> + '_ {
        self.variables.iter().enumerate().filter(|(_, v)| matches!(v.kind, VarKind::Input { .. }))
    }

    /// Input domains in declaration order.
    pub fn input_domains(&self) -> Vec<(String, i64, i64)> {
        self.inputs()
            .map(|(_, v)| match v.kind {
                VarKind::Input { lo, hi } => (v.name.clone(), lo, hi),
                VarKind::Local => unreachable!(),
            })
            .collect()
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.variables[v].name
    }

    /// Number of joint input valuations, saturating.
    pub fn domain_size(&self) -> u128 {
        self.input_domains().iter().fold(1u128, |acc, (_, lo, hi)| acc.saturating_mul((hi - lo + 1) as u128))
    }

    pub fn render_term(&self, t: &Term<VarId>) -> String {
        t.render(&|v| self.var_name(*v).to_string())
    }

    pub fn render_formula(&self, f: &Formula<VarId>) -> String {
        f.render(&|v| self.var_name(*v).to_string())
    }

    pub fn render_update(&self, u: &Update) -> String {
        let mut parts: Vec<String> =
            u.assigns.iter().map(|(v, t)| format!("{} = {}", self.var_name(*v), self.render_term(t))).collect();
        if let Some(e) = &u.emit {
            parts.push(format!("output {}", self.render_term(e)));
        }
        if parts.is_empty() {
            "skip".to_string()
        } else {
            parts.join(", ")
        }
    }

    pub fn render_command(&self, cmd: &GuardedCommand) -> String {
        match (&cmd.guard, cmd.update.assigns.is_empty() && cmd.update.emit.is_none()) {
            (Formula::True, _) => self.render_update(&cmd.update),
            (g, true) => format!("[{}]", self.render_formula(g)),
            (g, false) => format!("[{}] {}", self.render_formula(g), self.render_update(&cmd.update)),
        }
    }

    /// Checks the structural invariants: entry exists, every location is
    /// reachable, terminals have no successors, at most two transitions leave
    /// any location for a given selector value, and two-way branches carry
    /// complementary guards. Selector views are checked for every mutant ID
    /// mentioned by a transition.
    pub fn validate(&self) -> Result<(), LangError> {
        let invalid = |message: String| Err(LangError::InvalidLts(message));
        let n = self.locations.len();
        if self.entry == 0 || self.entry > n {
            return invalid(format!("entry location {} does not exist", self.entry));
        }
        for (i, loc) in self.locations.iter().enumerate() {
            if loc.id != i + 1 {
                return invalid(format!("location ids are not dense at index {i}"));
            }
        }
        for t in &self.transitions {
            if t.src == 0 || t.src > n || t.dst == 0 || t.dst > n {
                return invalid(format!("transition {} -> {} leaves the location set", t.src, t.dst));
            }
            let mut vars = t.cmd.guard.vars();
            for (v, term) in &t.cmd.update.assigns {
                vars.insert(*v);
                term.collect_vars(&mut vars);
            }
            if let Some(e) = &t.cmd.update.emit {
                e.collect_vars(&mut vars);
            }
            if vars.iter().any(|v| *v >= self.variables.len()) {
                return invalid(format!("transition {} -> {} mentions an unknown variable", t.src, t.dst));
            }
            let targets: BTreeSet<_> = t.cmd.update.assigns.iter().map(|(v, _)| *v).collect();
            if targets.len() != t.cmd.update.assigns.len() {
                return invalid(format!("transition {} -> {} assigns a variable twice", t.src, t.dst));
            }
        }
        for &term in &self.terminals {
            if term == 0 || term > n {
                return invalid(format!("terminal {term} does not exist"));
            }
            if self.outgoing(term).next().is_some() {
                return invalid(format!("terminal {term} has outgoing transitions"));
            }
        }
        let mut views: BTreeSet<MutId> = BTreeSet::from([0]);
        for t in &self.transitions {
            match &t.selector {
                Selector::Any => {}
                Selector::Except(ids) => views.extend(ids.iter().copied()),
                Selector::Only(m) => {
                    views.insert(*m);
                }
            }
        }
        for loc in 1..=n {
            for &m in &views {
                let out: Vec<_> = self.outgoing_for(loc, m).collect();
                match out.len() {
                    0 if !self.is_terminal(loc) => {
                        return invalid(format!("non-terminal location {loc} has no successor for selector {m}"));
                    }
                    0 | 1 => {}
                    2 => {
                        let complement = out[0].cmd.guard.negate();
                        if complement != out[1].cmd.guard && complement.simplify() != out[1].cmd.guard.simplify() {
                            return invalid(format!("branch guards at location {loc} are not complementary"));
                        }
                    }
                    k => return invalid(format!("{k} transitions leave location {loc} for selector {m}")),
                }
                if out.len() == 1 && out[0].cmd.guard != Formula::True {
                    return invalid(format!("single transition at location {loc} is guarded"));
                }
            }
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([self.entry]);
        seen[self.entry - 1] = true;
        while let Some(loc) = queue.pop_front() {
            for t in self.outgoing(loc) {
                if !seen[t.dst - 1] {
                    seen[t.dst - 1] = true;
                    queue.push_back(t.dst);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return invalid(format!("location {} is unreachable", i + 1));
        }
        Ok(())
    }

    /// Shortest transition count to a terminal, by reverse breadth-first search.
    pub fn distance_to_output(&self) -> DistanceMap {
        let n = self.locations.len();
        let mut preds = vec![Vec::new(); n];
        for t in &self.transitions {
            preds[t.dst - 1].push(t.src);
        }
        let mut dist = vec![None; n];
        let mut queue = VecDeque::new();
        for &t in &self.terminals {
            dist[t - 1] = Some(0);
            queue.push_back(t);
        }
        while let Some(loc) = queue.pop_front() {
            let d = dist[loc - 1].unwrap();
            for &p in &preds[loc - 1] {
                if dist[p - 1].is_none() {
                    dist[p - 1] = Some(d + 1);
                    queue.push_back(p);
                }
            }
        }
        DistanceMap { dist }
    }
}

impl fmt::Display for Lts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for loc in &self.locations {
            writeln!(f, "{:>3}: {}", loc.id, loc.text)?;
            for t in self.outgoing(loc.id) {
                let sel = match &t.selector {
                    Selector::Any => String::new(),
                    Selector::Except(ids) => format!(" {{mutId not in {ids:?}}}"),
                    Selector::Only(m) => format!(" {{mutId = {m}}}"),
                };
                writeln!(f, "       -> {} {}{}", t.dst, self.render_command(&t.cmd), sel)?;
            }
        }
        Ok(())
    }
}
