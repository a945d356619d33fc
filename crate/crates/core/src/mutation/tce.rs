use std::collections::BTreeMap;

use crate::expr::Formula;
use crate::lang::{LocId, Lts, MutId, Transition, Update, VarId};

use super::{apply, Mutant};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DuplicateGroup {
    pub representative: MutId,
    /// All members in ascending order, representative included.
    pub members: Vec<MutId>,
}

/// Static classification of mutants. `equivalent`, `duplicates()` and
/// `surviving` partition the mutant IDs; group representatives survive.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TceReport {
    pub equivalent: Vec<MutId>,
    pub duplicate_groups: Vec<DuplicateGroup>,
    pub surviving: Vec<MutId>,
}

impl TceReport {
    /// Non-representative members of duplicate groups.
    pub fn duplicates(&self) -> Vec<MutId> {
        let mut out: Vec<MutId> =
            self.duplicate_groups.iter().flat_map(|g| g.members.iter().copied().filter(|m| *m != g.representative)).collect();
        out.sort_unstable();
        out
    }

    pub fn class_of(&self, id: MutId) -> String {
        if self.equivalent.contains(&id) {
            return "equivalent".into();
        }
        for g in &self.duplicate_groups {
            if g.members.contains(&id) && g.representative != id {
                return format!("duplicate-of-{}", g.representative);
            }
        }
        "surviving".into()
    }

    /// Mutant inventory columns plus the class column.
    pub fn to_tsv(&self, mutants: &[Mutant]) -> String {
        let mut out = String::from("id\toperator\tline\tcolumn\toriginal\tmutated\tclass\n");
        for m in mutants {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                m.id,
                m.label,
                m.span.line,
                m.span.col,
                m.original_fragment,
                m.mutated_fragment,
                self.class_of(m.id)
            ));
        }
        out
    }
}

fn normalize_guard(g: &Formula<VarId>) -> Formula<VarId> {
    if g.has_division() {
        // connective-level rewrites could drop a division error; only terms
        g.map_terms(&|t| t.simplify())
    } else {
        g.simplify()
    }
}

fn normalize_update(u: &Update) -> Update {
    let mut assigns: Vec<_> = u
        .assigns
        .iter()
        .map(|(v, t)| (*v, t.simplify()))
        .filter(|(v, t)| *t != crate::expr::Term::Var(*v))
        .collect();
    assigns.sort();
    Update { assigns, emit: u.emit.as_ref().map(|e| e.simplify()) }
}

/// Serialized normal form of a program: every transition with simplified
/// guard and update, identity assignments removed, in sorted order.
pub fn normal_form(lts: &Lts) -> String {
    let mut rows: Vec<String> = lts.transitions.iter().map(transition_nf).collect();
    rows.sort();
    rows.join("\n")
}

fn transition_nf(t: &Transition) -> String {
    format!("{}->{} [{:?}] {:?}", t.src, t.dst, normalize_guard(&t.cmd.guard), normalize_update(&t.cmd.update))
}

fn location_nf(lts: &Lts, loc: LocId) -> String {
    let mut rows: Vec<String> = lts.outgoing(loc).map(transition_nf).collect();
    rows.sort();
    format!("@{loc}\n{}", rows.join("\n"))
}

/// Classifies mutants by comparing normal forms. A mutant only differs from
/// the original at its own location, so comparing the normal form of that
/// location's outgoing transitions decides equality of the full normal forms.
pub fn tce_filter(lts: &Lts, mutants: &[Mutant]) -> TceReport {
    let mut report = TceReport::default();
    let mut by_form: BTreeMap<String, Vec<MutId>> = BTreeMap::new();
    let mut order = Vec::new();
    for m in mutants {
        let mutant_lts = apply(lts, m);
        if location_nf(&mutant_lts, m.location) == location_nf(lts, m.location) {
            report.equivalent.push(m.id);
            continue;
        }
        let key = location_nf(&mutant_lts, m.location);
        if !by_form.contains_key(&key) {
            order.push(key.clone());
        }
        by_form.entry(key).or_default().push(m.id);
    }
    for key in order {
        let mut ids = by_form.remove(&key).unwrap();
        ids.sort_unstable();
        report.surviving.push(ids[0]);
        if ids.len() > 1 {
            report.duplicate_groups.push(DuplicateGroup { representative: ids[0], members: ids });
        }
    }
    report.equivalent.sort_unstable();
    report.surviving.sort_unstable();
    report.duplicate_groups.sort_by_key(|g| g.representative);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::compile_str;
    use crate::mutation::{generate_mutants, Operator};
    use std::collections::BTreeSet;

    #[test]
    fn plus_zero_to_minus_zero_is_equivalent() {
        let lts = compile_str("input x: int; fn main(){ var y = x + 0; output y; }").unwrap();
        let ms = generate_mutants(&lts, &BTreeSet::from([Operator::Aor])).unwrap();
        let minus = ms.iter().find(|m| m.label == "AOR:+→-").unwrap();
        let report = tce_filter(&lts, &ms);
        assert!(report.equivalent.contains(&minus.id));
    }

    #[test]
    fn times_zero_and_zero_are_duplicates() {
        let lts = compile_str("input x: int; fn main(){ var y = x * 2; output y; }").unwrap();
        let ms = generate_mutants(&lts, &BTreeSet::from([Operator::Crp])).unwrap();
        let times_zero = ms.iter().find(|m| m.label == "CRP:2→0").unwrap().clone();
        let mut zero = times_zero.clone().with_id(100);
        zero.replacements[0].cmd.update.assigns[0].1 = crate::expr::Term::Const(0);
        let report = tce_filter(&lts, &[times_zero.clone(), zero]);
        assert_eq!(report.duplicate_groups, vec![DuplicateGroup { representative: times_zero.id, members: vec![times_zero.id, 100] }]);
        assert_eq!(report.surviving, vec![times_zero.id]);
        assert_eq!(report.duplicates(), vec![100]);
    }

    #[test]
    fn identical_normal_forms_group() {
        let lts = compile_str("input x: int; fn main(){ var y = x - 1; output y; }").unwrap();
        let ms = generate_mutants(&lts, &Operator::all()).unwrap();
        let report = tce_filter(&lts, &ms);
        // `x - 0`, `x * 1` and `x / 1` all normalize to `y = x`
        let a = ms.iter().find(|m| m.location == 1 && m.label == "CRP:1→0").unwrap().id;
        let b = ms.iter().find(|m| m.location == 1 && m.label == "AOR:-→*").unwrap().id;
        let c = ms.iter().find(|m| m.location == 1 && m.label == "AOR:-→/").unwrap().id;
        let g = report.duplicate_groups.iter().find(|g| g.members.contains(&a)).unwrap();
        assert!(g.members.contains(&b) && g.members.contains(&c));
        assert_eq!(g.representative, *g.members.iter().min().unwrap());
        assert!(report.surviving.contains(&g.representative));
    }
}
