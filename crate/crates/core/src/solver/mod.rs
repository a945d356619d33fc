//! Constraint solving over bounded integer inputs.
//!
//! The bounded backend enumerates input valuations in a fixed order
//! (symbols sorted by name, ascending values) and returns the first model,
//! which makes every query deterministic and complete. The external backend
//! pipes an SMT-LIB script to a solver process.

mod smtlib;

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::expr::Formula;
use crate::lang::{Lts, VarId};

pub use smtlib::{emit_smtlib, parse_solver_output};

/// Constraint over input symbols, identified by their program variable IDs.
pub type Constraint = Formula<VarId>;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);
/// Evaluation budget of a single bounded query before it gives up.
pub const DEFAULT_EVAL_CAP: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("symbol {0} has no declared domain")]
    UnknownSymbol(VarId),
    #[error("external solver failed: {0}")]
    ExternalProcessFailure(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainEntry {
    pub var: VarId,
    pub name: String,
    pub lo: i64,
    pub hi: i64,
}

/// Declared inclusive input domains, kept sorted by symbol name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Domains {
    entries: Vec<DomainEntry>,
}

impl Domains {
    pub fn new(mut entries: Vec<DomainEntry>) -> Self {
        entries.sort_by(|a, b| a.name.cmp(&b.name));
        Domains { entries }
    }

    pub fn from_lts(lts: &Lts) -> Self {
        let entries = lts
            .input_domains()
            .into_iter()
            .map(|(name, lo, hi)| DomainEntry { var: lts.var_id(&name).unwrap(), name, lo, hi })
            .collect();
        Domains::new(entries)
    }

    pub fn entries(&self) -> &[DomainEntry] {
        &self.entries
    }

    pub fn get(&self, var: VarId) -> Option<&DomainEntry> {
        self.entries.iter().find(|e| e.var == var)
    }

    pub fn by_name(&self, name: &str) -> Option<&DomainEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Joint number of valuations, saturating.
    pub fn size(&self) -> u128 {
        self.entries.iter().fold(1u128, |acc, e| acc.saturating_mul((e.hi - e.lo + 1) as u128))
    }

    fn slots(&self) -> usize {
        self.entries.iter().map(|e| e.var + 1).max().unwrap_or(0)
    }

    /// Valuation vector indexed by variable ID, every input at its lower bound.
    pub fn lowest(&self) -> Vec<i64> {
        let mut values = vec![0; self.slots()];
        for e in &self.entries {
            values[e.var] = e.lo;
        }
        values
    }

    /// Calls `f` on every joint valuation, in enumeration order, until it
    /// returns false.
    pub fn for_each_valuation(&self, mut f: impl FnMut(&[i64]) -> bool) {
        let mut values = self.lowest();
        if self.entries.iter().any(|e| e.lo > e.hi) {
            return;
        }
        loop {
            if !f(&values) {
                return;
            }
            // odometer with the last symbol varying fastest
            let mut i = self.entries.len();
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                let e = &self.entries[i];
                if values[e.var] < e.hi {
                    values[e.var] += 1;
                    break;
                }
                values[e.var] = e.lo;
            }
        }
    }
}

/// Satisfying valuation of the input symbols.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Model {
    pub values: BTreeMap<String, i64>,
}

impl Model {
    pub fn from_vector(domains: &Domains, values: &[i64]) -> Self {
        Model { values: domains.entries.iter().map(|e| (e.name.clone(), values[e.var])).collect() }
    }

    pub fn get(&self, name: &str) -> Option<i64> {
        self.values.get(name).copied()
    }

    /// Valuation vector indexed by variable ID; missing symbols take their lower bound.
    pub fn to_vector(&self, domains: &Domains) -> Vec<i64> {
        let mut values = domains.lowest();
        for e in &domains.entries {
            if let Some(v) = self.values.get(&e.name) {
                values[e.var] = *v;
            }
        }
        values
    }

    pub fn satisfies(&self, c: &Constraint, domains: &Domains) -> bool {
        let values = self.to_vector(domains);
        c.holds(&mut |v| values.get(*v).copied().unwrap_or(0))
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Model),
    Unsat,
    Unknown(String),
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }

    pub fn model(self) -> Option<Model> {
        match self {
            SatResult::Sat(m) => Some(m),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Backend {
    Bounded,
    /// Program and arguments of an SMT-LIB solver reading the script on stdin.
    External(Vec<String>),
}

#[derive(Clone, Debug)]
pub struct SolverHandle {
    pub backend: Backend,
    pub timeout: Duration,
    pub eval_cap: u64,
    pub domains: Domains,
}

impl SolverHandle {
    pub fn bounded(domains: Domains) -> Self {
        SolverHandle { backend: Backend::Bounded, timeout: DEFAULT_TIMEOUT, eval_cap: DEFAULT_EVAL_CAP, domains }
    }

    pub fn external(domains: Domains, command: Vec<String>) -> Self {
        SolverHandle { backend: Backend::External(command), ..SolverHandle::bounded(domains) }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn check(&self, c: &Constraint) -> Result<SatResult, SolverError> {
        is_satisfiable(c, self)
    }
}

/// Decides `c` over the handle's domains.
pub fn is_satisfiable(c: &Constraint, h: &SolverHandle) -> Result<SatResult, SolverError> {
    for v in c.vars() {
        if h.domains.get(v).is_none() {
            return Err(SolverError::UnknownSymbol(v));
        }
    }
    match &h.backend {
        Backend::Bounded => Ok(solve_bounded(c, &h.domains, h.timeout, h.eval_cap)),
        Backend::External(cmd) => smtlib::solve_external(c, &h.domains, cmd, h.timeout),
    }
}

/// Equisatisfiable, model-preserving simplification.
pub fn simplify(c: &Constraint) -> Constraint {
    c.simplify()
}

struct Search<'a> {
    domains: &'a Domains,
    order: Vec<usize>,
    // conjuncts checked once the symbol at that position in `order` is fixed
    checks: Vec<Vec<Constraint>>,
    values: Vec<i64>,
    evals: u64,
    ticks: u64,
    cap: u64,
    deadline: Instant,
    gave_up: Option<String>,
}

impl Search<'_> {
    // A failing conjunct moves to the front, since it tends to fail again.
    fn passes(&mut self, level: usize) -> bool {
        let values = &self.values;
        let checks = &mut self.checks[level];
        match checks.iter().position(|f| !f.holds(&mut |v| values[*v])) {
            Some(i) => {
                self.evals += i as u64 + 1;
                checks[..=i].rotate_right(1);
                false
            }
            None => {
                self.evals += checks.len() as u64;
                true
            }
        }
    }

    fn budget_left(&mut self) -> bool {
        if self.gave_up.is_some() {
            return false;
        }
        if self.evals > self.cap {
            self.gave_up = Some(format!("evaluation cap {} reached", self.cap));
            return false;
        }
        self.ticks += 1;
        if self.ticks.is_multiple_of(1024) && Instant::now() > self.deadline {
            self.gave_up = Some("timeout".to_string());
            return false;
        }
        true
    }

    // Depth-first enumeration; `level` counts fixed symbols in `order`.
    fn dfs(&mut self, level: usize, visit: &mut dyn FnMut(&[i64]) -> bool) -> bool {
        if level == self.order.len() {
            return visit(&self.values);
        }
        let e = &self.domains.entries[self.order[level]];
        let (var, lo, hi) = (e.var, e.lo, e.hi);
        for value in lo..=hi {
            if !self.budget_left() {
                return false;
            }
            self.values[var] = value;
            if self.passes(level + 1) && !self.dfs(level + 1, visit) {
                return false;
            }
        }
        self.values[var] = lo;
        true
    }
}

fn conjuncts(c: &Constraint) -> Vec<Constraint> {
    match c {
        Formula::And(parts) => parts.iter().flat_map(conjuncts).collect(),
        Formula::True => Vec::new(),
        other => vec![other.clone()],
    }
}

/// Enumerates the models of `c` in the deterministic order, calling `visit`
/// with each full valuation vector until it returns false. Symbols that `c`
/// does not mention stay at their lower bound and are not enumerated.
/// Returns an explanation when the budget ran out.
pub fn enumerate_models(
    c: &Constraint,
    domains: &Domains,
    timeout: Duration,
    cap: u64,
    visit: &mut dyn FnMut(&[i64]) -> bool,
) -> Option<String> {
    let simplified = c.simplify();
    let mentioned = simplified.vars();
    let order: Vec<usize> = (0..domains.entries.len()).filter(|&i| mentioned.contains(&domains.entries[i].var)).collect();
    let mut checks = vec![Vec::new(); order.len() + 1];
    for conj in conjuncts(&simplified).into_iter().rev() {
        let vars = conj.vars();
        let level = order.iter().rposition(|&i| vars.contains(&domains.entries[i].var)).map(|p| p + 1).unwrap_or(0);
        checks[level].push(conj);
    }
    let mut search = Search {
        domains,
        order,
        checks,
        values: domains.lowest(),
        evals: 0,
        ticks: 0,
        cap,
        deadline: Instant::now() + timeout,
        gave_up: None,
    };
    if domains.entries.iter().any(|e| e.lo > e.hi) || !search.passes(0) {
        return None;
    }
    search.dfs(0, visit);
    search.gave_up
}

fn solve_bounded(c: &Constraint, domains: &Domains, timeout: Duration, cap: u64) -> SatResult {
    let mut found = None;
    let gave_up = enumerate_models(c, domains, timeout, cap, &mut |values| {
        found = Some(values.to_vec());
        false
    });
    match (found, gave_up) {
        (Some(values), _) => {
            let model = Model::from_vector(domains, &values);
            debug_assert!(model.satisfies(c, domains));
            SatResult::Sat(model)
        }
        (None, Some(reason)) => SatResult::Unknown(reason),
        (None, None) => SatResult::Unsat,
    }
}
