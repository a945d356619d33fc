mod common;

use std::collections::BTreeSet;

use common::*;
use mutsym::exec::run_outcome;
use mutsym::expr::Formula;
use mutsym::lang::LocId;
use mutsym::mutation::Operator;
use mutsym::solver::Domains;
use mutsym::symex::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const STEPS: u64 = 10_000;

const SQUARE: &str = "input x: int in [-4, 3];
fn main() {
    var y = 0;
    if (x == 1) { y = x * x; }
    y = y + 0;
    output y;
}";

fn mutant_at(f: &Fixture, location: LocId, label: &str) -> u32 {
    f.find(location, label)
}

fn bounded(max_states: u64) -> Budget {
    Budget { max_states: Some(max_states), wall_clock: None }
}

fn kills(f: &Fixture, m: u32, input: &mutsym::exec::Valuation) -> bool {
    run_outcome(&f.meta.lts, 0, input, STEPS).unwrap() != run_outcome(&f.meta.lts, m, input, STEPS).unwrap()
}

#[test]
fn zero_budget_gives_nothing() {
    let f = fixture("running_example");
    let targets: BTreeSet<u32> = f.meta.ids().into_iter().collect();
    let cfg = Config { budget: bounded(0), ..Config::default() };
    let r = explore(&f.meta, &targets, &[], &cfg, &f.solver).unwrap();
    assert!(r.tests.is_empty());
    assert_eq!(r.stats.solver_calls, 0);
    assert!(r.stats.budget_exhausted);
}

#[test]
fn running_example_m2_is_killed_by_a_negative_input() {
    let f = fixture("running_example");
    let m2 = f.find(9, "RHS:+1");
    let cfg = Config { pp: 1.0, budget: bounded(20_000), ..Config::default() };
    let r = explore(&f.meta, &BTreeSet::from([m2]), &[], &cfg, &f.solver).unwrap();
    let killing: Vec<i64> =
        r.tests.iter().filter(|t| t.target == m2 && kills(&f, m2, &t.input)).map(|t| t.input["x"]).collect();
    assert!(!killing.is_empty(), "no killing test among {:?}", r.tests);
    assert!(killing.iter().all(|x| *x <= -2));
}

#[test]
fn infection_at_the_mutated_output_statement() {
    let f = fixture("running_example");
    let m2 = f.find(9, "RHS:+1");
    let original = walk(&f.meta.lts, 0, &[1, 2, 9, 10]);
    let mutant = walk(&f.meta.lts, m2, &[1, 2, 9, 10]);
    let (keep, model) = infection_check(&mutant, &original, &f.solver).unwrap();
    assert!(keep);
    assert!(model.unwrap().get("x").unwrap() < 0);
}

#[test]
fn no_op_deletion_never_infects() {
    let f = fixture_from(SQUARE, &Operator::all());
    let sdl = mutant_at(&f, 4, "SDL");
    let original = walk(&f.meta.lts, 0, &[1, 2, 4, 5]);
    let mutant = walk(&f.meta.lts, sdl, &[1, 2, 4, 5]);
    assert_eq!(infection_check(&mutant, &original, &f.solver).unwrap(), (false, None));
}

#[test]
fn square_versus_quotient_agree_when_x_is_one() {
    let f = fixture_from(SQUARE, &Operator::all());
    let path = [1, 2, 3, 4];
    let original = walk(&f.meta.lts, 0, &path);
    let quotient = walk(&f.meta.lts, mutant_at(&f, 3, "AOR:*→/"), &path);
    let sum = walk(&f.meta.lts, mutant_at(&f, 3, "AOR:*→+"), &path);
    // oracle: the only input on this path is x=1, where x*x = x/x = 1 and x+x = 2
    let x = f.lts.var_id("x").unwrap();
    let on_path: Vec<i64> = (-4..=3).filter(|v| original.path_condition.holds(&mut |s| if *s == x { *v } else { 0 })).collect();
    assert_eq!(on_path, [1]);
    assert!(!infection_check(&quotient, &original, &f.solver).unwrap().0);
    assert!(infection_check(&sum, &original, &f.solver).unwrap().0);
}

#[test]
fn checkpoint_window_examples() {
    assert!((1..20).all(|b| is_checkpoint(b, 0)));
    let cw2: Vec<u32> = (1..=9).filter(|b| is_checkpoint(*b, 2)).collect();
    assert_eq!(cw2, [3, 6, 9]);
    assert!(!is_checkpoint(0, 0));
}

#[test]
fn keep_count_examples() {
    assert_eq!(keep_count(0.5, 4), 2);
    assert_eq!(keep_count(0.0, 7), 1);
    assert_eq!(keep_count(0.25, 2), 1);
    assert_eq!(keep_count(1.0, 3), 3);
    assert_eq!(keep_count(0.3, 0), 0);
}

#[test]
fn mdo_keeps_the_state_closest_to_output() {
    let f = fixture("running_example");
    let dist = f.lts.distance_to_output();
    // location 5 (loop head) is further from the exit than location 12 (output)
    let far = walk(&f.lts, 0, &[1, 2, 3, 4, 5]);
    let near = walk(&f.lts, 0, &[1, 2, 9, 10, 12]);
    assert!(dist.rank(far.location) > dist.rank(near.location));
    let (kept, pruned) =
        select_branches(vec![far, near], 0.5, SelectionStrategy::Mdo, &dist, &mut ChaCha8Rng::seed_from_u64(0));
    assert_eq!(kept.len(), 1);
    assert_eq!(kept[0].location, 12);
    assert_eq!(pruned[0].location, 5);
}

#[test]
fn random_selection_is_seed_deterministic() {
    let f = fixture("running_example");
    let dist = f.lts.distance_to_output();
    let states: Vec<SymbolicState> = (0..6)
        .map(|i| {
            let mut s = walk(&f.lts, 0, &[1, 2, 9]);
            s.id = i;
            s
        })
        .collect();
    let pick = |seed| {
        let (kept, _) = select_branches(states.clone(), 0.5, SelectionStrategy::Rnd, &dist, &mut ChaCha8Rng::seed_from_u64(seed));
        kept.iter().map(|s| s.id).collect::<Vec<_>>()
    };
    assert_eq!(pick(3), pick(3));
    assert_eq!(pick(3).len(), 3);
}

fn forked(f: &Fixture, m: u32, path: &[LocId], fork_depth: usize) -> SymbolicState {
    let mut s = walk(&f.meta.lts, m, path);
    // walk numbers states by depth, so the fork origin's id equals its depth
    s.fork_origin = Some(fork_depth as u64);
    s.fork_depth = Some(fork_depth);
    s
}

#[test]
fn pairing_picks_the_first_compatible_descendant() {
    let f = fixture("running_example");
    let m2 = f.find(9, "RHS:+1");
    let mutant = forked(&f, m2, &[1, 2, 9, 10], 2);
    let original = walk(&f.meta.lts, 0, &[1, 2, 9, 10]);
    let originals = vec![original.clone(), original];
    let p = pair_states(&mutant, &originals, &f.solver).unwrap().unwrap();
    assert!(std::ptr::eq(p, &originals[0]));
}

#[test]
fn pairing_requires_shared_prefix_and_compatible_condition() {
    let f = fixture("running_example");
    let m2 = f.find(9, "RHS:+1");
    let mutant = forked(&f, m2, &[1, 2, 9, 10], 2);
    // the x >= 0 branch shares no prefix state with the fork at location 9
    let other = walk(&f.meta.lts, 0, &[1, 2, 3, 4]);
    assert!(pair_states(&mutant, &[other], &f.solver).unwrap().is_none());
    let mut unrelated = forked(&f, m2, &[1, 2, 9, 10], 2);
    unrelated.fork_origin = Some(99);
    let original = walk(&f.meta.lts, 0, &[1, 2, 9, 10]);
    assert!(pair_states(&unrelated, &[original], &f.solver).unwrap().is_none());
}

#[test]
fn partial_kill_rejects_unequal_depths() {
    let f = fixture("running_example");
    let a = walk(&f.lts, 0, &[1, 2, 9]);
    let b = walk(&f.lts, 0, &[1, 2, 9, 10]);
    assert_eq!(build_partial_kill(&a, &b, &Config::default()), Err(SymexError::DepthMismatch { original: 2, mutant: 3 }));
}

fn seed_vector(f: &Fixture, x: i64) -> Vec<i64> {
    let mut v = Domains::from_lts(&f.lts).lowest();
    v[f.lts.var_id("x").unwrap()] = x;
    v
}

#[test]
fn precondition_follow_prune_release() {
    let f = fixture("running_example");
    let m2 = f.find(9, "RHS:+1");
    let targets = BTreeSet::from([m2]);
    let pre = Precondition::new(&f.meta, &targets, &[seed_vector(&f, -2)], PreconditionLength::Gmd2ms, STEPS).unwrap();
    // the seed reaches location 9 after two transitions
    assert_eq!(pre.release_depth, Some(2));
    let decide = |path: &[LocId]| {
        let mut s = walk(&f.meta.lts, 0, path);
        s.seed_following = true;
        s.seeds = pre.satisfying(&s.path_condition, &[0]);
        apply_precondition(&s, &pre)
    };
    assert_eq!(decide(&[1, 2]), PreconditionDecision::Follow);
    assert_eq!(decide(&[1, 2, 9]), PreconditionDecision::Release);
    assert_eq!(decide(&[1, 2, 3]), PreconditionDecision::Prune);

    let smd = Precondition { length: PreconditionLength::Smd2ms, ..pre.clone() };
    let mut at_point = walk(&f.meta.lts, 0, &[1, 2, 9]);
    at_point.seeds = vec![0];
    assert_eq!(apply_precondition(&at_point, &smd), PreconditionDecision::Release);
    let mut before = walk(&f.meta.lts, 0, &[1, 2]);
    before.seeds = vec![0];
    assert_eq!(apply_precondition(&before, &smd), PreconditionDecision::Follow);
}

#[test]
fn no_seeds_means_no_precondition() {
    let f = fixture("running_example");
    assert!(Precondition::new(&f.meta, &BTreeSet::new(), &[], PreconditionLength::Gmd2ms, STEPS).is_none());
}

#[test]
fn seed_that_misses_every_target_never_releases() {
    let f = fixture("running_example");
    let m2 = f.find(9, "RHS:+1");
    let pre = Precondition::new(&f.meta, &BTreeSet::from([m2]), &[seed_vector(&f, 5)], PreconditionLength::Gmd2ms, STEPS).unwrap();
    assert_eq!(pre.release_depth, None);
}

#[test]
fn invalid_configuration_is_rejected() {
    let f = fixture("abs_diff");
    let targets: BTreeSet<u32> = f.meta.ids().into_iter().collect();
    for cfg in [Config { pp: 1.5, ..Config::default() }, Config { ntpm: 0, ..Config::default() }] {
        assert!(matches!(explore(&f.meta, &targets, &[], &cfg, &f.solver), Err(SymexError::InvalidConfig(_))));
    }
}

#[test]
fn infection_only_tests_sit_at_the_mutation_point() {
    let f = fixture("running_example");
    let m2 = f.find(9, "RHS:+1");
    let cfg = Config { mode: Mode::InfectionOnly, budget: bounded(2000), ..Config::default() };
    let r = explore(&f.meta, &BTreeSet::from([m2]), &[], &cfg, &f.solver).unwrap();
    assert!(!r.tests.is_empty());
    for t in &r.tests {
        assert_eq!(t.site, Site::Checkpoint);
        assert_eq!(t.k, 3);
        assert!(t.input["x"] < 0);
    }
}

#[test]
fn vanilla_gives_one_untargeted_test_per_path() {
    let f = fixture("abs_diff");
    let cfg = Config { mode: Mode::Vanilla, budget: Budget::unbounded(), ..Config::default() };
    let r = explore(&f.meta, &BTreeSet::new(), &[], &cfg, &f.solver).unwrap();
    assert!(r.tests.iter().all(|t| t.target == 0 && t.site == Site::Terminal));
    // oracle: distinct concrete paths over the whole domain
    let paths: BTreeSet<Vec<LocId>> = all_inputs(&f.lts)
        .iter()
        .map(|v| mutsym::exec::run_concrete(&f.lts, 0, v, STEPS).unwrap().locations())
        .collect();
    assert_eq!(r.tests.len(), paths.len());
}

#[test]
fn replayed_tests_follow_their_prefix() {
    for name in ["running_example", "triangle", "gcd", "sign"] {
        let f = fixture(name);
        let targets: BTreeSet<u32> = f.meta.ids().into_iter().collect();
        for mode in [Mode::Semu, Mode::InfectionOnly, Mode::Vanilla] {
            let cfg = Config { mode, budget: bounded(1500), ..Config::default() };
            let r = explore(&f.meta, &targets, &[], &cfg, &f.solver).unwrap();
            for t in &r.tests {
                let trace = mutsym::exec::run_concrete(&f.lts, 0, &t.input, STEPS).unwrap().locations();
                let prefix = &t.original_path[..t.original_path.len().min(trace.len())];
                assert_eq!(&trace[..prefix.len()], prefix, "{name} {mode}: {:?} leaves its path", t.input);
            }
        }
    }
}

#[test]
fn exploration_is_reproducible() {
    let f = fixture("bounce");
    let targets: BTreeSet<u32> = f.meta.ids().into_iter().collect();
    let seeds = vec![val(&[("start", 3), ("target", -2)])];
    let cfg = Config { budget: bounded(800), rng_seed: 11, ..Config::default() };
    let a = explore(&f.meta, &targets, &seeds, &cfg, &f.solver).unwrap();
    let b = explore(&f.meta, &targets, &seeds, &cfg, &f.solver).unwrap();
    assert_eq!(a.tests, b.tests);
    assert_eq!(a.stats.to_text(false), b.stats.to_text(false));
}

#[test]
fn oversized_terms_are_dropped() {
    let f = fixture("gcd");
    let targets: BTreeSet<u32> = f.meta.ids().into_iter().collect();
    let cfg = Config { budget: bounded(3000), max_term_size: 64, ..Config::default() };
    let r = explore(&f.meta, &targets, &[], &cfg, &f.solver).unwrap();
    assert!(r.stats.pruned_term_size > 0);
}

#[test]
fn generated_test_file_round_trip() {
    let f = fixture("triangle");
    let targets: BTreeSet<u32> = f.meta.ids().into_iter().collect();
    let cfg = Config { budget: bounded(500), ..Config::default() };
    let r = explore(&f.meta, &targets, &[], &cfg, &f.solver).unwrap();
    let back = io::parse_tests(&io::format_tests(&r.tests)).unwrap();
    assert_eq!(back.len(), r.tests.len());
    for (a, b) in back.iter().zip(&r.tests) {
        assert_eq!((&a.input, a.target, a.site, a.k), (&b.input, b.target, b.site, b.k));
    }
}

#[test]
fn state_difference_is_true_for_diverging_locations() {
    let f = fixture("running_example");
    let a = walk(&f.lts, 0, &[1, 2, 3]);
    let b = walk(&f.lts, 0, &[1, 2, 9]);
    assert_eq!(normalize(&state_difference(&a, &b)), Formula::True);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ntpm_caps_tests_per_mutant(ntpm in 1usize..6, prog in 0usize..4, seed in 0u64..50) {
        let name = ["triangle", "max3", "leap", "sign"][prog];
        let f = fixture(name);
        let targets: BTreeSet<u32> = f.meta.ids().into_iter().collect();
        let cfg = Config { ntpm, pp: 1.0, mpd: 0, rng_seed: seed, budget: bounded(1500), ..Config::default() };
        let r = explore(&f.meta, &targets, &[], &cfg, &f.solver).unwrap();
        let mut per = std::collections::BTreeMap::new();
        for t in &r.tests {
            *per.entry(t.target).or_insert(0usize) += 1;
        }
        prop_assert!(per.values().all(|n| *n <= ntpm));
        prop_assert_eq!(per, r.stats.tests_per_mutant.clone());
    }

    #[test]
    fn selection_partitions_candidates(n in 1usize..12, pp in 0.0f64..=1.0, seed in any::<u64>(), mdo in any::<bool>()) {
        let f = fixture("running_example");
        let dist = f.lts.distance_to_output();
        let paths: [&[LocId]; 3] = [&[1, 2, 9], &[1, 2, 3, 4, 5], &[1, 2, 9, 10, 12]];
        let states: Vec<SymbolicState> = (0..n)
            .map(|i| {
                let mut s = walk(&f.lts, 0, paths[i % 3]);
                s.id = i as u64;
                s
            })
            .collect();
        let pss = if mdo { SelectionStrategy::Mdo } else { SelectionStrategy::Rnd };
        let (kept, pruned) = select_branches(states, pp, pss, &dist, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(kept.len(), keep_count(pp, n));
        prop_assert_eq!(kept.len() + pruned.len(), n);
        let mut ids: Vec<u64> = kept.iter().chain(&pruned).map(|s| s.id).collect();
        ids.sort();
        prop_assert_eq!(ids, (0..n as u64).collect::<Vec<_>>());
        if mdo {
            let worst_kept = kept.iter().map(|s| dist.rank(s.location)).max().unwrap();
            prop_assert!(pruned.iter().all(|s| dist.rank(s.location) >= worst_kept));
        }
    }
}
