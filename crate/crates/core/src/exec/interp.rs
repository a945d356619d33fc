use std::collections::BTreeMap;
use std::fmt;

use crate::expr::ArithError;
use crate::lang::{LocId, Lts, MutId, Transition, VarKind};

use super::ExecError;

/// Input valuation keyed by input name.
pub type Valuation = BTreeMap<String, i64>;

pub const DEFAULT_STEP_BUDGET: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    /// Reached a terminal location.
    Normal,
    /// Division by zero or overflow; the run stops with the error token.
    Error,
    /// Step budget exhausted.
    Timeout,
}

/// Observable result of a run: emitted values plus how the run ended.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Outcome {
    pub outputs: Vec<i64>,
    pub status: Status,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let outs: Vec<String> = self.outputs.iter().map(i64::to_string).collect();
        write!(f, "[{}]", outs.join(", "))?;
        match self.status {
            Status::Normal => Ok(()),
            Status::Error => write!(f, " error"),
            Status::Timeout => write!(f, " timeout"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub location: LocId,
    /// Values of all program variables, indexed by variable ID.
    pub values: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<Step>,
    pub outcome: Outcome,
    pub error: Option<ArithError>,
}

impl Trace {
    pub fn locations(&self) -> Vec<LocId> {
        self.steps.iter().map(|s| s.location).collect()
    }

    /// Number of transitions executed.
    pub fn len(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One `(location, var=value, ...)` line per step.
    pub fn dump(&self, lts: &Lts) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let vars: Vec<String> = lts.variables.iter().zip(&s.values).map(|(v, x)| format!("{}={x}", v.name)).collect();
            out.push_str(&format!("({}, {})\n", s.location, vars.join(", ")));
        }
        out.push_str(&format!("outcome {}\n", self.outcome));
        out
    }
}

/// Initial valuation vector, checking the test against the declared domains.
pub fn initial_values(lts: &Lts, test: &Valuation) -> Result<Vec<i64>, ExecError> {
    for name in test.keys() {
        let known = lts.inputs().any(|(_, v)| &v.name == name);
        if !known {
            return Err(ExecError::UnknownInput(name.clone()));
        }
    }
    let mut values = vec![0; lts.variables.len()];
    for (id, var) in lts.inputs() {
        let VarKind::Input { lo, hi } = var.kind else { unreachable!() };
        let value = *test.get(&var.name).ok_or_else(|| ExecError::MissingInput(var.name.clone()))?;
        if value < lo || value > hi {
            return Err(ExecError::DomainViolation { name: var.name.clone(), value, lo, hi });
        }
        values[id] = value;
    }
    Ok(values)
}

enum Next<'a> {
    Take(&'a Transition),
    Stuck,
    Fail(ArithError),
}

fn choose<'a>(lts: &'a Lts, loc: LocId, mut_id: MutId, values: &[i64]) -> Next<'a> {
    for t in lts.outgoing_for(loc, mut_id) {
        match t.cmd.guard.eval(&mut |v| values[*v]) {
            Ok(true) => return Next::Take(t),
            Ok(false) => {}
            Err(e) => return Next::Fail(e),
        }
    }
    Next::Stuck
}

/// Applies a transition's update in place; returns the emitted value.
fn fire(t: &Transition, values: &mut [i64]) -> Result<Option<i64>, ArithError> {
    let u = &t.cmd.update;
    let mut new_values = Vec::with_capacity(u.assigns.len());
    for (v, term) in &u.assigns {
        new_values.push((*v, term.eval(&mut |x| values[*x])?));
    }
    let emitted = match &u.emit {
        Some(e) => Some(e.eval(&mut |x| values[*x])?),
        None => None,
    };
    for (v, x) in new_values {
        values[v] = x;
    }
    Ok(emitted)
}

fn run(lts: &Lts, mut_id: MutId, mut values: Vec<i64>, budget: u64, mut record: Option<&mut Vec<Step>>) -> (Outcome, Option<ArithError>) {
    let mut loc = lts.entry;
    let mut outputs = Vec::new();
    let mut steps = 0u64;
    if let Some(r) = record.as_deref_mut() {
        r.push(Step { location: loc, values: values.clone() });
    }
    loop {
        if lts.is_terminal(loc) {
            return (Outcome { outputs, status: Status::Normal }, None);
        }
        if steps >= budget {
            return (Outcome { outputs, status: Status::Timeout }, None);
        }
        let t = match choose(lts, loc, mut_id, &values) {
            Next::Take(t) => t,
            Next::Fail(e) => return (Outcome { outputs, status: Status::Error }, Some(e)),
            // a validated program always enables one transition
            Next::Stuck => return (Outcome { outputs, status: Status::Error }, None),
        };
        match fire(t, &mut values) {
            Ok(Some(x)) => outputs.push(x),
            Ok(None) => {}
            Err(e) => return (Outcome { outputs, status: Status::Error }, Some(e)),
        }
        loc = t.dst;
        steps += 1;
        if let Some(r) = record.as_deref_mut() {
            r.push(Step { location: loc, values: values.clone() });
        }
    }
}

/// Runs `lts` with selector value `mut_id`, recording every step.
pub fn run_concrete(lts: &Lts, mut_id: MutId, test: &Valuation, step_budget: u64) -> Result<Trace, ExecError> {
    let values = initial_values(lts, test)?;
    let mut steps = Vec::new();
    let (outcome, error) = run(lts, mut_id, values, step_budget, Some(&mut steps));
    Ok(Trace { steps, outcome, error })
}

/// Runs without recording the trace.
pub fn run_outcome(lts: &Lts, mut_id: MutId, test: &Valuation, step_budget: u64) -> Result<Outcome, ExecError> {
    let values = initial_values(lts, test)?;
    Ok(run(lts, mut_id, values, step_budget, None).0)
}

/// Same as [`run_outcome`] from an already checked vector of input values
/// indexed by variable ID.
pub fn run_vector(lts: &Lts, mut_id: MutId, inputs: &[i64], step_budget: u64) -> Outcome {
    let mut values = vec![0; lts.variables.len()];
    for (id, _) in lts.inputs() {
        values[id] = inputs[id];
    }
    run(lts, mut_id, values, step_budget, None).0
}

/// Checks that consecutive steps are linked by an enabled transition whose
/// guard holds and whose update produces the next valuation.
pub fn check_trace(lts: &Lts, mut_id: MutId, trace: &Trace) -> Result<(), String> {
    let Some(first) = trace.steps.first() else {
        return Err("empty trace".into());
    };
    if first.location != lts.entry {
        return Err(format!("trace starts at {} instead of the entry", first.location));
    }
    for pair in trace.steps.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let linked = lts.outgoing_for(a.location, mut_id).any(|t| {
            t.dst == b.location
                && t.cmd.guard.eval(&mut |v| a.values[*v]) == Ok(true)
                && {
                    let mut vals = a.values.clone();
                    fire(t, &mut vals).is_ok() && vals == b.values
                }
        });
        if !linked {
            return Err(format!("no transition links {} to {}", a.location, b.location));
        }
    }
    let last = trace.steps.last().unwrap();
    match trace.outcome.status {
        Status::Normal if !lts.is_terminal(last.location) => Err("normal end outside a terminal".into()),
        _ => Ok(()),
    }
}
