#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use mutsym::exec::Valuation;
use mutsym::lang::{compile_str, LocId, Lts, MutId};
use mutsym::mutation::{build_meta_mutant, generate_mutants, MetaMutant, Mutant, Operator};
use mutsym::solver::{Domains, SolverHandle};
use mutsym::symex::{successors, RunStatus, SymbolicState};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus_source(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(format!("{name}.mimp"))).unwrap()
}

/// Names of all corpus programs, sorted.
pub fn corpus_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "mimp").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names
}

pub struct Fixture {
    pub lts: Lts,
    pub mutants: Vec<Mutant>,
    pub meta: MetaMutant,
    pub solver: SolverHandle,
}

pub fn fixture_from(src: &str, ops: &BTreeSet<Operator>) -> Fixture {
    let lts = compile_str(src).unwrap();
    let mutants = generate_mutants(&lts, ops).unwrap();
    let meta = build_meta_mutant(&lts, &mutants).unwrap();
    let solver = SolverHandle::bounded(Domains::from_lts(&lts));
    Fixture { lts, mutants, meta, solver }
}

pub fn fixture(name: &str) -> Fixture {
    fixture_from(&corpus_source(name), &Operator::all())
}

impl Fixture {
    pub fn find(&self, location: usize, label: &str) -> MutId {
        self.mutants
            .iter()
            .find(|m| m.location == location && m.label == label)
            .unwrap_or_else(|| panic!("no mutant {label} at {location}"))
            .id
    }
}

pub fn val(pairs: &[(&str, i64)]) -> Valuation {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Every valuation of the declared input domains.
pub fn all_inputs(lts: &Lts) -> Vec<Valuation> {
    let domains = Domains::from_lts(lts);
    let mut out = Vec::new();
    domains.for_each_valuation(|v| {
        out.push(domains.entries().iter().map(|e| (e.name.clone(), v[e.var])).collect());
        true
    });
    out
}

/// Walks the path through `locations` under selector `sel`, taking the
/// non-error successor leading to each next location.
pub fn walk(lts: &Lts, sel: MutId, locations: &[LocId]) -> SymbolicState {
    let mut st = SymbolicState::initial(lts, 0);
    assert_eq!(st.location, locations[0]);
    for (i, next) in locations[1..].iter().enumerate() {
        let succ = successors(lts, &st, sel);
        let s = succ
            .iter()
            .find(|s| s.status != RunStatus::Error && s.transition.is_some_and(|t| t.dst == *next))
            .unwrap_or_else(|| panic!("no transition {} -> {next}", st.location));
        st = st.step(s, i as u64 + 1, sel);
    }
    st
}
