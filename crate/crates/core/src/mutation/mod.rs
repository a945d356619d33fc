//! Mutant generation as transition replacement, static equivalence and
//! duplicate filtering, and the meta-mutant that embeds all mutants behind a
//! selector.

mod meta;
mod operators;
mod tce;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::lang::{GuardedCommand, LocId, LocKind, Lts, MutId, Span, Transition, Update};

pub use meta::{build_meta_mutant, MetaMutant};
pub use tce::{normal_form, tce_filter, DuplicateGroup, TceReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MutationError {
    #[error("unknown mutation operator `{0}`")]
    UnknownOperator(String),
    #[error("empty mutation operator set")]
    EmptyOperatorSet,
    #[error("mutant id {0} is assigned twice")]
    IdCollision(MutId),
    #[error("invalid mutant {id}: {reason}")]
    InvalidMutant { id: MutId, reason: String },
}

/// Mutation operators, declared in name order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operator {
    /// Arithmetic operator replacement.
    Aor,
    /// Constant replacement.
    Crp,
    /// Logical connector replacement.
    Lcr,
    /// Right-hand side perturbation by one.
    Rhs,
    /// Relational operator replacement.
    Ror,
    /// Statement deletion.
    Sdl,
}

impl Operator {
    pub const ALL: [Operator; 6] = [Operator::Aor, Operator::Crp, Operator::Lcr, Operator::Rhs, Operator::Ror, Operator::Sdl];

    pub fn name(self) -> &'static str {
        match self {
            Operator::Aor => "AOR",
            Operator::Crp => "CRP",
            Operator::Lcr => "LCR",
            Operator::Rhs => "RHS",
            Operator::Ror => "ROR",
            Operator::Sdl => "SDL",
        }
    }

    pub fn all() -> BTreeSet<Operator> {
        Operator::ALL.into_iter().collect()
    }

    /// Parses a comma-separated operator list.
    pub fn parse_set(text: &str) -> Result<BTreeSet<Operator>, MutationError> {
        let set = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<BTreeSet<_>, _>>()?;
        if set.is_empty() {
            return Err(MutationError::EmptyOperatorSet);
        }
        Ok(set)
    }
}

impl FromStr for Operator {
    type Err = MutationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Operator::ALL
            .into_iter()
            .find(|o| o.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| MutationError::UnknownOperator(s.to_string()))
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A mutant: the transitions `removed` leaving `location` are replaced,
/// position by position, with `replacements`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mutant {
    pub id: MutId,
    pub location: LocId,
    pub operator: Operator,
    /// Operator plus variant, e.g. `ROR:<→<=` or `RHS:+1`.
    pub label: String,
    pub span: Span,
    pub removed: Vec<Transition>,
    pub replacements: Vec<Transition>,
    pub original_fragment: String,
    pub mutated_fragment: String,
}

impl Mutant {
    pub fn with_id(mut self, id: MutId) -> Self {
        self.id = id;
        self
    }

    /// Checks the transition-replacement shape against the original program.
    pub fn validate(&self, lts: &Lts) -> Result<(), MutationError> {
        let bad = |reason: &str| Err(MutationError::InvalidMutant { id: self.id, reason: reason.to_string() });
        if self.id == 0 {
            return bad("id 0 is reserved for the original program");
        }
        if self.removed.is_empty() {
            return bad("no transition is replaced");
        }
        if self.removed.len() != self.replacements.len() {
            return bad("replacement count differs from removed count");
        }
        for (old, new) in self.removed.iter().zip(&self.replacements) {
            if old.src != self.location || new.src != self.location {
                return bad("transition does not leave the mutated location");
            }
            if !lts.outgoing(self.location).any(|t| t.dst == old.dst && t.cmd == old.cmd) {
                return bad("removed transition is not part of the program");
            }
            if old.cmd == new.cmd && old.dst == new.dst {
                return bad("replacement equals the removed transition");
            }
        }
        Ok(())
    }

    /// Outgoing transitions of the mutated location in the mutant program.
    pub fn view(&self, lts: &Lts) -> Vec<Transition> {
        lts.outgoing(self.location)
            .map(|t| match self.removed.iter().position(|r| r.dst == t.dst && r.cmd == t.cmd) {
                Some(i) => Transition { selector: t.selector.clone(), ..self.replacements[i].clone() },
                None => t.clone(),
            })
            .collect()
    }
}

/// Standalone program of a mutant.
pub fn apply(lts: &Lts, m: &Mutant) -> Lts {
    let mut out = lts.clone();
    let view = m.view(lts);
    let mut transitions: Vec<Transition> = Vec::new();
    let mut placed = false;
    for t in &lts.transitions {
        if t.src == m.location {
            if !placed {
                transitions.extend(view.iter().cloned());
                placed = true;
            }
        } else {
            transitions.push(t.clone());
        }
    }
    out.transitions = transitions;
    out.reindex();
    out
}

fn fragment(lts: &Lts, kind: LocKind, cmds: &[&GuardedCommand]) -> String {
    if kind.is_branching() {
        lts.render_formula(&cmds[0].guard)
    } else {
        lts.render_update(&cmds[0].update)
    }
}

/// Enumerates mutants by location, then operator, then variant. IDs are
/// assigned densely from 1 in that order.
pub fn generate_mutants(lts: &Lts, operators: &BTreeSet<Operator>) -> Result<Vec<Mutant>, MutationError> {
    if operators.is_empty() {
        return Err(MutationError::EmptyOperatorSet);
    }
    let mut out = Vec::new();
    for loc in &lts.locations {
        let outgoing: Vec<&Transition> = lts.outgoing(loc.id).collect();
        if outgoing.is_empty() {
            continue;
        }
        let original_cmds: Vec<&GuardedCommand> = outgoing.iter().map(|t| &t.cmd).collect();
        let original_fragment = fragment(lts, loc.kind, &original_cmds);
        for &op in operators {
            let variants: Vec<(Vec<GuardedCommand>, String)> = if outgoing.len() == 2 {
                operators::guard_variants(op, &outgoing[0].cmd.guard)
                    .into_iter()
                    .map(|(g, label)| {
                        let neg = g.negate();
                        let cmds = vec![
                            GuardedCommand { guard: g, update: outgoing[0].cmd.update.clone() },
                            GuardedCommand { guard: neg, update: outgoing[1].cmd.update.clone() },
                        ];
                        (cmds, label)
                    })
                    .collect()
            } else {
                update_variants(op, &outgoing[0].cmd.update)
                    .into_iter()
                    .map(|(u, label)| (vec![GuardedCommand { guard: outgoing[0].cmd.guard.clone(), update: u }], label))
                    .collect()
            };
            for (cmds, label) in variants {
                let replacements: Vec<Transition> = outgoing
                    .iter()
                    .zip(&cmds)
                    .map(|(t, c)| Transition { src: t.src, dst: t.dst, cmd: c.clone(), selector: t.selector.clone() })
                    .collect();
                let label = if label.is_empty() { op.name().to_string() } else { format!("{}:{label}", op.name()) };
                let mutated_fragment = fragment(lts, loc.kind, &cmds.iter().collect::<Vec<_>>());
                out.push(Mutant {
                    id: out.len() as MutId + 1,
                    location: loc.id,
                    operator: op,
                    label,
                    span: loc.span,
                    removed: outgoing.iter().map(|t| (*t).clone()).collect(),
                    replacements,
                    original_fragment: original_fragment.clone(),
                    mutated_fragment,
                });
            }
        }
    }
    Ok(out)
}

fn update_variants(op: Operator, u: &Update) -> Vec<(Update, String)> {
    match op {
        Operator::Sdl => {
            if u.is_identity() {
                Vec::new()
            } else {
                vec![(Update::identity(), String::new())]
            }
        }
        Operator::Ror | Operator::Lcr => Vec::new(),
        Operator::Rhs if u.assigns.len() + usize::from(u.emit.is_some()) != 1 => Vec::new(),
        _ => {
            let mut out = Vec::new();
            for (i, (_, t)) in u.assigns.iter().enumerate() {
                for (t2, label) in operators::term_variants_for(op, t) {
                    let mut u2 = u.clone();
                    u2.assigns[i].1 = t2;
                    out.push((u2, label));
                }
            }
            if let Some(e) = &u.emit {
                for (e2, label) in operators::term_variants_for(op, e) {
                    out.push((Update { assigns: u.assigns.clone(), emit: Some(e2) }, label));
                }
            }
            out
        }
    }
}

/// Tab-separated inventory: id, operator, line, column, original, mutated.
pub fn mutants_tsv(mutants: &[Mutant]) -> String {
    let mut out = String::from("id\toperator\tline\tcolumn\toriginal\tmutated\n");
    for m in mutants {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            m.id, m.label, m.span.line, m.span.col, m.original_fragment, m.mutated_fragment
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::compile_str;

    #[test]
    fn operator_names_round_trip() {
        for op in Operator::ALL {
            assert_eq!(op.name().parse::<Operator>().unwrap(), op);
        }
        assert!(matches!("XYZ".parse::<Operator>(), Err(MutationError::UnknownOperator(_))));
        assert_eq!(Operator::parse_set(" , "), Err(MutationError::EmptyOperatorSet));
    }

    #[test]
    fn empty_operator_set_is_rejected() {
        let lts = compile_str("input x: int; fn main(){ output x; }").unwrap();
        assert_eq!(generate_mutants(&lts, &BTreeSet::new()), Err(MutationError::EmptyOperatorSet));
    }

    #[test]
    fn rhs_and_crp_labels() {
        let lts = compile_str("input x: int; fn main(){ var n = x; x = x - 1; output n; }").unwrap();
        let ms = generate_mutants(&lts, &Operator::all()).unwrap();
        let rhs = ms.iter().find(|m| m.location == 1 && m.label == "RHS:+1").unwrap();
        assert_eq!(rhs.mutated_fragment, "n = x + 1");
        let crp = ms.iter().find(|m| m.location == 2 && m.label == "CRP:1→2").unwrap();
        assert_eq!(crp.mutated_fragment, "x = x - 2");
        for m in &ms {
            m.validate(&lts).unwrap();
            apply(&lts, m).validate().unwrap();
        }
        let ids: Vec<MutId> = ms.iter().map(|m| m.id).collect();
        assert_eq!(ids, (1..=ms.len() as MutId).collect::<Vec<_>>());
    }

    #[test]
    fn branch_mutants_replace_both_transitions() {
        let lts = compile_str("input x: int; fn main(){ if (x < 0) { output 1; } }").unwrap();
        let ms = generate_mutants(&lts, &BTreeSet::from([Operator::Ror])).unwrap();
        assert_eq!(ms.len(), 5);
        for m in &ms {
            assert_eq!(m.replacements.len(), 2);
            assert_eq!(m.replacements[1].cmd.guard, m.replacements[0].cmd.guard.negate());
        }
        assert_eq!(ms[0].label, "ROR:<→<=");
    }

    #[test]
    fn sdl_skips_branches_and_identity() {
        let lts = compile_str("input x: int; fn main(){ if (x < 0) { x = x; } output x; }").unwrap();
        let ms = generate_mutants(&lts, &BTreeSet::from([Operator::Sdl])).unwrap();
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].location, 3);
    }
}
