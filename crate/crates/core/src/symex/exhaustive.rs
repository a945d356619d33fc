//! Path-pair kill analysis: enumerates the syntactic paths of the original
//! and of one mutant through the mutated location and solves the kill
//! formula for every pair.

use std::collections::BTreeSet;

use crate::expr::{CmpOp, Formula, Term};
use crate::lang::{LocId, Lts, MutId, VarId, VarKind};
use crate::mutation::MetaMutant;
use crate::solver::{Constraint, SatResult, SolverHandle};

use super::{normalize, SymexError};

#[derive(Clone, Debug, PartialEq)]
pub struct PathSummary {
    pub locations: Vec<LocId>,
    /// Path condition, including non-zero divisor conditions.
    pub condition: Constraint,
    pub outputs: Vec<Term<VarId>>,
}

#[derive(Clone, Debug)]
pub struct KillCase {
    /// Index into the original paths.
    pub original: usize,
    /// Index into the mutant paths.
    pub mutant: usize,
    pub formula: Constraint,
    pub result: SatResult,
}

#[derive(Clone, Debug)]
pub struct PathPairAnalysis {
    pub original_paths: Vec<PathSummary>,
    pub mutant_paths: Vec<PathSummary>,
    pub cases: Vec<KillCase>,
}

impl PathPairAnalysis {
    pub fn killable(&self) -> bool {
        self.cases.iter().any(|c| c.result.is_sat())
    }
}

fn can_reach(lts: &Lts, target: LocId) -> BTreeSet<LocId> {
    let mut seen = BTreeSet::from([target]);
    let mut changed = true;
    while changed {
        changed = false;
        for t in &lts.transitions {
            if seen.contains(&t.dst) && seen.insert(t.src) {
                changed = true;
            }
        }
    }
    seen
}

/// Complete paths of at most `max_len` transitions under selector `mut_id`
/// that pass through `through`, in transition order. Paths are syntactic:
/// infeasible ones are kept with an unsatisfiable condition.
pub fn enumerate_paths(lts: &Lts, mut_id: MutId, through: LocId, max_len: usize) -> Vec<PathSummary> {
    let reach = can_reach(lts, through);
    let store: Vec<Term<VarId>> = lts
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| match v.kind {
            VarKind::Input { .. } => Term::Var(i),
            VarKind::Local => Term::Const(0),
        })
        .collect();
    let mut out = Vec::new();
    let mut stack = vec![(vec![lts.entry], Vec::<Constraint>::new(), store, Vec::new(), lts.entry == through)];
    while let Some((locs, conds, store, outputs, passed)) = stack.pop() {
        let loc = *locs.last().unwrap();
        if lts.is_terminal(loc) {
            if passed {
                out.push(PathSummary { locations: locs, condition: normalize(&Formula::conj(conds)), outputs });
            }
            continue;
        }
        if locs.len() > max_len {
            continue;
        }
        let mut children = Vec::new();
        for t in lts.outgoing_for(loc, mut_id) {
            let now_passed = passed || t.dst == through;
            if !now_passed && !reach.contains(&t.dst) {
                continue;
            }
            let sub = |v: &VarId| store[*v].clone();
            let guard = t.cmd.guard.substitute(&sub);
            let mut divs = Vec::new();
            guard.collect_divisors(&mut divs);
            let mut new_store = store.clone();
            for (v, term) in &t.cmd.update.assigns {
                let s = term.substitute(&sub);
                s.collect_divisors(&mut divs);
                new_store[*v] = s.simplify();
            }
            let mut new_outputs = outputs.clone();
            if let Some(e) = &t.cmd.update.emit {
                let s = e.substitute(&sub);
                s.collect_divisors(&mut divs);
                new_outputs.push(s.simplify());
            }
            let mut new_conds = conds.clone();
            new_conds.extend(divs.into_iter().map(|d| Formula::Cmp(CmpOp::Ne, d, Term::Const(0))));
            new_conds.push(guard);
            let mut new_locs = locs.clone();
            new_locs.push(t.dst);
            children.push((new_locs, new_conds, new_store, new_outputs, now_passed));
        }
        // reversed so the first transition is explored first
        stack.extend(children.into_iter().rev());
    }
    out
}

/// Solves `φ_P ∧ φ_M ∧ Out_P ≠ Out_M` for every pair of original and mutant
/// paths through the location of mutant `m`.
pub fn analyze_mutant(meta: &MetaMutant, m: MutId, max_len: usize, solver: &SolverHandle) -> Result<PathPairAnalysis, SymexError> {
    let mutant = meta.mutant(m).ok_or_else(|| SymexError::InvalidConfig(format!("unknown mutant {m}")))?;
    let original_paths = enumerate_paths(&meta.lts, 0, mutant.location, max_len);
    let mutant_paths = enumerate_paths(&meta.lts, m, mutant.location, max_len);
    let mut cases = Vec::new();
    for (i, p) in original_paths.iter().enumerate() {
        for (j, q) in mutant_paths.iter().enumerate() {
            let diff = if p.outputs.len() != q.outputs.len() {
                Formula::True
            } else {
                Formula::tuple_ne(p.outputs.iter().cloned().zip(q.outputs.iter().cloned()))
            };
            let formula = Formula::conj([p.condition.clone(), q.condition.clone(), diff]);
            let result = solver.check(&formula)?;
            cases.push(KillCase { original: i, mutant: j, formula, result });
        }
    }
    Ok(PathPairAnalysis { original_paths, mutant_paths, cases })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::compile_str;
    use crate::mutation::{build_meta_mutant, generate_mutants, Operator};
    use crate::solver::Domains;

    #[test]
    fn two_paths_through_branch() {
        let lts = compile_str("input x: int in [-4, 4]; fn main(){ var y = x; if (y < 0) { y = 0; } output y; }").unwrap();
        let paths = enumerate_paths(&lts, 0, 1, 20);
        assert_eq!(paths.len(), 2);
        // unreachable location yields nothing
        assert!(enumerate_paths(&lts, 0, 3, 1).is_empty());
    }

    #[test]
    fn mutant_pairs_are_solved() {
        let lts = compile_str("input x: int in [-4, 4]; fn main(){ var y = x; if (y < 0) { y = 0; } output y; }").unwrap();
        let ms = generate_mutants(&lts, &[Operator::Ror].into()).unwrap();
        let meta = build_meta_mutant(&lts, &ms).unwrap();
        let solver = SolverHandle::bounded(Domains::from_lts(&lts));
        let le = ms.iter().find(|m| m.label == "ROR:<→<=").unwrap().id;
        let a = analyze_mutant(&meta, le, 20, &solver).unwrap();
        assert_eq!(a.cases.len(), 4);
        // y < 0 vs y <= 0 only differs at 0, where both print 0
        assert!(!a.killable());
        let gt = ms.iter().find(|m| m.label == "ROR:<→>").unwrap().id;
        assert!(analyze_mutant(&meta, gt, 20, &solver).unwrap().killable());
    }
}
