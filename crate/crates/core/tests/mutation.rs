mod common;

use std::collections::BTreeSet;

use common::*;
use mutsym::exec::{run_outcome, Valuation};
use mutsym::mutation::*;

const STEPS: u64 = 10_000;

/// A sample of at most `n` inputs spread over the domain.
fn sample(f: &Fixture, n: usize) -> Vec<Valuation> {
    let all = all_inputs(&f.lts);
    let step = (all.len() / n).max(1);
    all.into_iter().step_by(step).collect()
}

#[test]
fn running_example_mutants() {
    let f = fixture("running_example");
    let m1 = f.find(8, "CRP:1→2");
    let m2 = f.find(9, "RHS:+1");
    assert_eq!(f.meta.mutant(m1).unwrap().operator, Operator::Crp);
    assert_eq!(f.meta.mutant(m1).unwrap().mutated_fragment, "x = x - 2");
    assert_eq!(f.meta.mutant(m2).unwrap().mutated_fragment, "n = x + 1");
    assert!(f.meta.points_at(8).contains(&m1));
    assert!(f.meta.points_at(9).contains(&m2));
    assert!(f.meta.points_at(13).is_empty());
    let only = fixture_from(&corpus_source("running_example"), &BTreeSet::from([Operator::Crp]));
    assert!(only.mutants.iter().all(|m| m.operator == Operator::Crp));
    assert_eq!(only.meta.points_at(9), &[] as &[u32]);
}

#[test]
fn generation_is_deterministic_with_dense_ids() {
    for name in corpus_names() {
        let f = fixture(&name);
        let again = fixture(&name);
        assert_eq!(f.mutants, again.mutants, "{name}");
        let ids: Vec<u32> = f.mutants.iter().map(|m| m.id).collect();
        assert_eq!(ids, (1..=f.mutants.len() as u32).collect::<Vec<_>>(), "{name}");
        let locs: Vec<usize> = f.mutants.iter().map(|m| m.location).collect();
        assert!(locs.windows(2).all(|w| w[0] <= w[1]), "{name}: ids not ordered by location");
        for m in &f.mutants {
            m.validate(&f.lts).unwrap();
            assert!(f.meta.points_at(m.location).contains(&m.id));
        }
    }
}

#[test]
fn meta_mutant_behaves_like_each_standalone_mutant() {
    for name in ["running_example", "triangle", "sign", "weighted_sum", "abs_diff"] {
        let f = fixture(name);
        let inputs = sample(&f, 30);
        for id in std::iter::once(0).chain(f.meta.ids()) {
            let alone = f.meta.standalone(id).unwrap();
            alone.validate().unwrap();
            for input in &inputs {
                assert_eq!(
                    run_outcome(&f.meta.lts, id, input, STEPS).unwrap(),
                    run_outcome(&alone, 0, input, STEPS).unwrap(),
                    "{name} mutant {id} on {input:?}"
                );
            }
        }
    }
}

#[test]
fn tce_partitions_mutants() {
    for name in corpus_names() {
        let f = fixture(&name);
        let r = tce_filter(&f.lts, &f.mutants);
        let mut all: Vec<u32> = r.equivalent.iter().chain(&r.surviving).copied().chain(r.duplicates()).collect();
        all.sort_unstable();
        assert_eq!(all, f.meta.ids(), "{name}");
        for g in &r.duplicate_groups {
            assert_eq!(g.representative, g.members[0]);
            assert!(r.surviving.contains(&g.representative));
        }
    }
}

#[test]
fn tce_classes_agree_with_exhaustive_behaviour() {
    for name in corpus_names() {
        let f = fixture(&name);
        let r = tce_filter(&f.lts, &f.mutants);
        let inputs = sample(&f, 200);
        let out = |id, v: &Valuation| run_outcome(&f.meta.lts, id, v, STEPS).unwrap();
        for id in &r.equivalent {
            for v in &inputs {
                assert_eq!(out(*id, v), out(0, v), "{name}: equivalent mutant {id} differs on {v:?}");
            }
        }
        for g in &r.duplicate_groups {
            for m in &g.members[1..] {
                for v in &inputs {
                    assert_eq!(out(*m, v), out(g.representative, v), "{name}: duplicate {m} differs on {v:?}");
                }
            }
        }
    }
}

#[test]
fn running_example_targets_survive_filtering_and_are_killable() {
    let f = fixture("running_example");
    let m1 = f.find(8, "CRP:1→2");
    let m2 = f.find(9, "RHS:+1");
    let r = tce_filter(&f.lts, &f.mutants);
    assert!(r.surviving.contains(&m1) && r.surviving.contains(&m2));
    let killers = |m| -> Vec<i64> {
        (-128..=127)
            .filter(|x| {
                let v = val(&[("x", *x)]);
                run_outcome(&f.meta.lts, 0, &v, STEPS).unwrap() != run_outcome(&f.meta.lts, m, &v, STEPS).unwrap()
            })
            .collect()
    };
    assert!(killers(m1).contains(&2));
    let k2 = killers(m2);
    assert!(!k2.is_empty() && k2.iter().all(|x| *x <= -2));
}

#[test]
fn weighted_sum_has_a_trivially_equivalent_mutant() {
    let f = fixture("weighted_sum");
    let r = tce_filter(&f.lts, &f.mutants);
    let eq: Vec<&Mutant> = f.mutants.iter().filter(|m| r.equivalent.contains(&m.id)).collect();
    assert!(eq.iter().any(|m| m.label == "AOR:*→/" && m.mutated_fragment.contains("b / 1")), "{eq:?}");
}

#[test]
fn operator_sets() {
    assert_eq!(Operator::parse_set("aor, SDL").unwrap(), BTreeSet::from([Operator::Aor, Operator::Sdl]));
    assert_eq!(Operator::parse_set(" , "), Err(MutationError::EmptyOperatorSet));
    assert_eq!(Operator::parse_set("AOR,XYZ"), Err(MutationError::UnknownOperator("XYZ".into())));
    assert_eq!(Operator::ALL.map(|o| o.to_string()).join(","), "AOR,CRP,LCR,RHS,ROR,SDL");
}

#[test]
fn duplicate_ids_are_rejected() {
    let f = fixture("sign");
    let mut twice = f.mutants.clone();
    twice.push(f.mutants[0].clone());
    assert_eq!(build_meta_mutant(&f.lts, &twice).unwrap_err(), MutationError::IdCollision(f.mutants[0].id));
}

#[test]
fn inventory_listing() {
    let f = fixture("running_example");
    let tsv = mutants_tsv(&f.mutants);
    let mut lines = tsv.lines();
    assert_eq!(lines.next(), Some("id\toperator\tline\tcolumn\toriginal\tmutated"));
    assert_eq!(lines.count(), f.mutants.len());
}
