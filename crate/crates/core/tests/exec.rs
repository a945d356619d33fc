mod common;

use std::collections::BTreeSet;

use common::*;
use mutsym::exec::*;
use proptest::prelude::*;

const STEPS: u64 = 10_000;

fn cases(inputs: &[Valuation]) -> Vec<TestCase> {
    inputs.iter().enumerate().map(|(i, v)| TestCase { label: format!("t{}", i + 1), input: v.clone() }).collect()
}

#[test]
fn running_example_kill_matrix() {
    let f = fixture("running_example");
    let m1 = f.find(8, "CRP:1→2");
    let m2 = f.find(9, "RHS:+1");
    let km = compute_kill_matrix(&f.meta.lts, &[m1, m2], &cases(&[val(&[("x", 2)]), val(&[("x", -1)])]), STEPS).unwrap();
    assert_eq!(km.cells, vec![vec![Cell::Killed, Cell::Survived], vec![Cell::Survived, Cell::Survived]]);
    assert_eq!(km.killed_mutants(), BTreeSet::from([m1]));
    assert_eq!(surviving_mutants(&km), BTreeSet::from([m2]));
}

#[test]
fn running_example_outputs() {
    let f = fixture("running_example");
    let m1 = f.find(8, "CRP:1→2");
    let out = |m, x| run_outcome(&f.meta.lts, m, &val(&[("x", x)]), STEPS).unwrap();
    assert_eq!(out(0, 2), Outcome { outputs: vec![2], status: Status::Normal });
    assert_eq!(out(m1, 2).outputs, vec![0]);
    assert_eq!(out(0, -1), out(f.find(9, "RHS:+1"), -1));
}

#[test]
fn zero_step_budget_times_out() {
    let f = fixture("running_example");
    let o = run_outcome(&f.lts, 0, &val(&[("x", 2)]), 0).unwrap();
    assert_eq!(o.status, Status::Timeout);
    assert!(o.outputs.is_empty());
}

#[test]
fn input_errors() {
    let f = fixture("running_example");
    assert!(matches!(run_outcome(&f.lts, 0, &val(&[("x", 1000)]), STEPS), Err(ExecError::DomainViolation { .. })));
    assert_eq!(run_outcome(&f.lts, 0, &val(&[]), STEPS), Err(ExecError::MissingInput("x".into())));
    assert_eq!(run_outcome(&f.lts, 0, &val(&[("x", 0), ("q", 1)]), STEPS), Err(ExecError::UnknownInput("q".into())));
}

#[test]
fn timeout_comparison() {
    let done = Outcome { outputs: vec![1, 2], status: Status::Normal };
    let stuck_same = Outcome { outputs: vec![1], status: Status::Timeout };
    let stuck_diff = Outcome { outputs: vec![3], status: Status::Timeout };
    assert_eq!(compare_outcomes(&done, &stuck_same), Cell::Timeout);
    assert_eq!(compare_outcomes(&done, &stuck_diff), Cell::Killed);
    assert_eq!(compare_outcomes(&done, &done), Cell::Survived);
    let err = Outcome { outputs: vec![1, 2], status: Status::Error };
    assert_eq!(compare_outcomes(&done, &err), Cell::Killed);
}

#[test]
fn corpus_traces_are_valid() {
    for name in corpus_names() {
        let f = fixture(&name);
        let inputs = all_inputs(&f.lts);
        let step = (inputs.len() / 40).max(1);
        for input in inputs.iter().step_by(step) {
            for m in std::iter::once(0).chain(f.meta.ids().into_iter().step_by(7)) {
                let trace = run_concrete(&f.meta.lts, m, input, STEPS).unwrap();
                check_trace(&f.meta.lts, m, &trace).unwrap_or_else(|e| panic!("{name} mutant {m} on {input:?}: {e}"));
                assert_eq!(trace.outcome, run_outcome(&f.meta.lts, m, input, STEPS).unwrap());
            }
        }
    }
}

#[test]
fn tampered_trace_is_rejected() {
    let f = fixture("running_example");
    let mut trace = run_concrete(&f.lts, 0, &val(&[("x", 2)]), STEPS).unwrap();
    trace.steps[1].location = 12;
    assert!(check_trace(&f.lts, 0, &trace).is_err());
}

#[test]
fn kill_matrix_csv_round_trip() {
    let f = fixture("triangle");
    let ids = f.meta.ids();
    let inputs: Vec<Valuation> = all_inputs(&f.lts).into_iter().step_by(37).collect();
    let km = compute_kill_matrix(&f.meta.lts, &ids, &cases(&inputs), STEPS).unwrap();
    assert_eq!(KillMatrix::from_csv(&km.to_csv()).unwrap(), km);
    assert!(matches!(KillMatrix::from_csv("test,1\nt1,Q\n"), Err(ExecError::MalformedMatrix(_))));
}

#[test]
fn subsuming_groups_example() {
    let cell = |c| if c == 'K' { Cell::Killed } else { Cell::Survived };
    // mutant 1 killed by {0}, 2 by {0,1}, 3 by {1}, 4 by {0}
    let km = KillMatrix {
        tests: vec!["a".into(), "b".into()],
        mutants: vec![1, 2, 3, 4],
        cells: ["KKSK", "SKKS"].iter().map(|r| r.chars().map(cell).collect()).collect(),
    };
    let groups = subsuming_groups(&km);
    let reps: Vec<_> = groups.iter().map(|g| (g.representative, g.members.clone())).collect();
    assert_eq!(reps, vec![(1, vec![1, 4]), (3, vec![3])]);
}

fn matrix() -> impl Strategy<Value = KillMatrix> {
    (1usize..8, 1usize..10).prop_flat_map(|(t, m)| {
        prop::collection::vec(prop::collection::vec(prop::sample::select(vec![Cell::Killed, Cell::Survived, Cell::Timeout]), m), t)
            .prop_map(move |cells| KillMatrix {
                tests: (0..t).map(|i| format!("t{i}")).collect(),
                mutants: (1..=m as u32).collect(),
                cells,
            })
    })
}

proptest! {
    #[test]
    fn greedy_cover_kills_everything_killable(km in matrix()) {
        let chosen = greedy_minimize(&km);
        prop_assert_eq!(km.killed_by(&chosen), km.killed_mutants());
        let distinct: BTreeSet<usize> = chosen.iter().copied().collect();
        prop_assert_eq!(distinct.len(), chosen.len());
        // every pick adds at least one new kill
        for i in 0..chosen.len() {
            prop_assert!(km.killed_by(&chosen[..i + 1]).len() > km.killed_by(&chosen[..i]).len());
        }
    }

    #[test]
    fn subsuming_groups_partition_minimal_kill_sets(km in matrix()) {
        let groups = subsuming_groups(&km);
        let killed = km.killed_mutants();
        for g in &groups {
            prop_assert!(!g.kill_set.is_empty());
            for m in &g.members {
                let col = km.mutants.iter().position(|x| x == m).unwrap();
                prop_assert_eq!(&km.kill_set(col), &g.kill_set);
            }
        }
        // every killed mutant's kill set contains some group's kill set
        for (col, m) in km.mutants.iter().enumerate() {
            if killed.contains(m) {
                let ks = km.kill_set(col);
                prop_assert!(groups.iter().any(|g| g.kill_set.is_subset(&ks)));
            }
        }
    }

    #[test]
    fn running_example_agrees_with_direct_semantics(x in -128i64..=127) {
        let f = fixture("running_example");
        let o = run_outcome(&f.lts, 0, &val(&[("x", x)]), STEPS).unwrap();
        prop_assert_eq!(o.status, Status::Normal);
        // 2 per odd number in 1..=x for x >= 0, x + 1 otherwise
        let expected = if x >= 0 { 2 * ((x + 1) / 2) } else { x + 1 };
        prop_assert_eq!(o.outputs, vec![expected]);
        let trace = run_concrete(&f.lts, 0, &val(&[("x", x)]), STEPS).unwrap();
        prop_assert!(check_trace(&f.lts, 0, &trace).is_ok());
    }
}
