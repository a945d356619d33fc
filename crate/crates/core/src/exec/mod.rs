//! Concrete execution and kill analyses.

mod interp;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::lang::{Lts, MutId};

pub use interp::{
    check_trace, initial_values, run_concrete, run_outcome, run_vector, Outcome, Status, Step, Trace, Valuation,
    DEFAULT_STEP_BUDGET,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("input {name}={value} lies outside [{lo}, {hi}]")]
    DomainViolation { name: String, value: i64, lo: i64, hi: i64 },
    #[error("test does not set input `{0}`")]
    MissingInput(String),
    #[error("`{0}` is not a declared input")]
    UnknownInput(String),
    #[error("malformed kill matrix: {0}")]
    MalformedMatrix(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    Killed,
    Survived,
    Timeout,
}

impl Cell {
    pub fn symbol(self) -> char {
        match self {
            Cell::Killed => 'K',
            Cell::Survived => 'S',
            Cell::Timeout => 'T',
        }
    }

    pub fn is_killed(self) -> bool {
        self == Cell::Killed
    }
}

/// Compares a mutant outcome with the original one. A timed-out run only
/// counts as killed when the outputs both runs produced already differ.
pub fn compare_outcomes(original: &Outcome, mutant: &Outcome) -> Cell {
    if original.status == Status::Timeout || mutant.status == Status::Timeout {
        let diverged = original.outputs.iter().zip(&mutant.outputs).any(|(a, b)| a != b);
        return if diverged { Cell::Killed } else { Cell::Timeout };
    }
    if original == mutant {
        Cell::Survived
    } else {
        Cell::Killed
    }
}

/// A labeled test input, e.g. `seed:1` or `gen:3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestCase {
    pub label: String,
    pub input: Valuation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KillMatrix {
    pub tests: Vec<String>,
    pub mutants: Vec<MutId>,
    /// `cells[test][mutant]`.
    pub cells: Vec<Vec<Cell>>,
}

impl KillMatrix {
    pub fn killed(&self, test: usize, mutant: usize) -> bool {
        self.cells[test][mutant].is_killed()
    }

    /// Test indices killing the mutant at column `col`.
    pub fn kill_set(&self, col: usize) -> BTreeSet<usize> {
        (0..self.tests.len()).filter(|&t| self.killed(t, col)).collect()
    }

    /// Mutant IDs killed by at least one of the given test rows.
    pub fn killed_by(&self, rows: &[usize]) -> BTreeSet<MutId> {
        (0..self.mutants.len()).filter(|&c| rows.iter().any(|&r| self.killed(r, c))).map(|c| self.mutants[c]).collect()
    }

    pub fn killed_mutants(&self) -> BTreeSet<MutId> {
        self.killed_by(&(0..self.tests.len()).collect::<Vec<_>>())
    }

    pub fn timeouts(&self) -> usize {
        self.cells.iter().flatten().filter(|c| **c == Cell::Timeout).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("test");
        for m in &self.mutants {
            out.push_str(&format!(",{m}"));
        }
        out.push('\n');
        for (label, row) in self.tests.iter().zip(&self.cells) {
            out.push_str(label);
            for c in row {
                out.push(',');
                out.push(c.symbol());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, ExecError> {
        let bad = |m: String| ExecError::MalformedMatrix(m);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("missing header".into()))?;
        let mut cols = header.split(',');
        if cols.next().map(str::trim) != Some("test") {
            return Err(bad("header must start with `test`".into()));
        }
        let mutants = cols.map(|c| c.trim().parse::<MutId>().map_err(|_| bad(format!("bad mutant id `{c}`")))).collect::<Result<Vec<_>, _>>()?;
        let mut tests = Vec::new();
        let mut cells = Vec::new();
        for line in lines {
            let mut parts = line.split(',');
            tests.push(parts.next().unwrap().trim().to_string());
            let row = parts
                .map(|c| match c.trim() {
                    "K" => Ok(Cell::Killed),
                    "S" => Ok(Cell::Survived),
                    "T" => Ok(Cell::Timeout),
                    other => Err(bad(format!("bad cell `{other}`"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != mutants.len() {
                return Err(bad(format!("row `{}` has {} cells for {} mutants", tests.last().unwrap(), row.len(), mutants.len())));
            }
            cells.push(row);
        }
        Ok(KillMatrix { tests, mutants, cells })
    }
}

/// Runs every test on the original and on every listed mutant. Rows are
/// computed in parallel and assembled in test order.
pub fn compute_kill_matrix(meta: &Lts, mutants: &[MutId], tests: &[TestCase], step_budget: u64) -> Result<KillMatrix, ExecError> {
    let cells = tests
        .par_iter()
        .map(|t| {
            let original = run_outcome(meta, 0, &t.input, step_budget)?;
            Ok(mutants.iter().map(|&m| compare_outcomes(&original, &run_outcome(meta, m, &t.input, step_budget).unwrap())).collect())
        })
        .collect::<Result<Vec<Vec<Cell>>, ExecError>>()?;
    Ok(KillMatrix { tests: tests.iter().map(|t| t.label.clone()).collect(), mutants: mutants.to_vec(), cells })
}

/// Mutants whose column holds no kill.
pub fn surviving_mutants(km: &KillMatrix) -> BTreeSet<MutId> {
    (0..km.mutants.len()).filter(|&c| km.kill_set(c).is_empty()).map(|c| km.mutants[c]).collect()
}

/// Greedy set cover over killed mutants: repeatedly picks the test killing
/// the most not-yet-killed mutants, earlier tests winning ties. Returns
/// test indices in selection order.
pub fn greedy_minimize(km: &KillMatrix) -> Vec<usize> {
    let mut remaining: BTreeSet<usize> = (0..km.mutants.len()).filter(|&c| !km.kill_set(c).is_empty()).collect();
    let mut chosen = Vec::new();
    while !remaining.is_empty() {
        let mut best: Option<(usize, usize)> = None;
        for t in 0..km.tests.len() {
            let gain = remaining.iter().filter(|&&c| km.killed(t, c)).count();
            if gain > 0 && best.is_none_or(|(_, g)| gain > g) {
                best = Some((t, gain));
            }
        }
        let Some((t, _)) = best else { break };
        remaining.retain(|&c| !km.killed(t, c));
        chosen.push(t);
    }
    chosen
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsumingGroup {
    pub representative: MutId,
    pub members: Vec<MutId>,
    /// Test indices killing every member.
    pub kill_set: BTreeSet<usize>,
}

/// Groups killed mutants by identical kill sets and keeps the groups whose
/// kill set has no strict subset among the other groups.
pub fn subsuming_groups(km: &KillMatrix) -> Vec<SubsumingGroup> {
    let mut groups: BTreeMap<BTreeSet<usize>, Vec<MutId>> = BTreeMap::new();
    for c in 0..km.mutants.len() {
        let ks = km.kill_set(c);
        if !ks.is_empty() {
            groups.entry(ks).or_default().push(km.mutants[c]);
        }
    }
    let sets: Vec<&BTreeSet<usize>> = groups.keys().collect();
    let mut out: Vec<SubsumingGroup> = groups
        .iter()
        .filter(|(ks, _)| !sets.iter().any(|other| other.len() < ks.len() && other.is_subset(ks)))
        .map(|(ks, members)| {
            let mut members = members.clone();
            members.sort_unstable();
            SubsumingGroup { representative: members[0], members, kill_set: ks.clone() }
        })
        .collect();
    out.sort_by_key(|g| g.representative);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&str]) -> KillMatrix {
        let n = rows[0].len();
        KillMatrix {
            tests: (0..rows.len()).map(|i| format!("t{i}")).collect(),
            mutants: (1..=n as MutId).collect(),
            cells: rows.iter().map(|r| r.chars().map(|c| if c == 'K' { Cell::Killed } else { Cell::Survived }).collect()).collect(),
        }
    }

    #[test]
    fn greedy_skips_redundant_test() {
        // A kills {1,2}, B kills {2}, C kills {3}
        let km = matrix(&["KKS", "SKS", "SSK"]);
        assert_eq!(greedy_minimize(&km), vec![0, 2]);
        assert_eq!(greedy_minimize(&matrix(&["KKK", "KSS"])), vec![0]);
        assert!(greedy_minimize(&matrix(&["SS", "SS"])).is_empty());
    }

    #[test]
    fn greedy_ties_go_to_earlier_test() {
        let km = matrix(&["KS", "KS", "SK"]);
        assert_eq!(greedy_minimize(&km), vec![0, 2]);
    }

    #[test]
    fn surviving() {
        let km = matrix(&["KS", "SS"]);
        assert_eq!(surviving_mutants(&km), BTreeSet::from([2]));
        let empty = KillMatrix { tests: vec![], mutants: vec![1, 2], cells: vec![] };
        assert_eq!(surviving_mutants(&empty), BTreeSet::from([1, 2]));
    }

    #[test]
    fn subsumption_rules() {
        // identical kill sets
        let g = subsuming_groups(&matrix(&["KK"]));
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].members, vec![1, 2]);
        // {t0} vs {t0,t1}
        let g = subsuming_groups(&matrix(&["KK", "SK"]));
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].members, vec![1]);
        // disjoint
        assert_eq!(subsuming_groups(&matrix(&["KS", "SK"])).len(), 2);
    }

    #[test]
    fn csv_round_trip() {
        let mut km = matrix(&["KS", "SK"]);
        km.cells[1][0] = Cell::Timeout;
        let text = km.to_csv();
        assert!(text.starts_with("test,1,2\n"));
        assert_eq!(KillMatrix::from_csv(&text).unwrap(), km);
    }

    #[test]
    fn timeout_comparisons() {
        let normal = Outcome { outputs: vec![1, 2], status: Status::Normal };
        let slow_same = Outcome { outputs: vec![1], status: Status::Timeout };
        let slow_diff = Outcome { outputs: vec![3], status: Status::Timeout };
        assert_eq!(compare_outcomes(&normal, &slow_same), Cell::Timeout);
        assert_eq!(compare_outcomes(&normal, &slow_diff), Cell::Killed);
        assert_eq!(compare_outcomes(&slow_same, &slow_same), Cell::Timeout);
        let err = Outcome { outputs: vec![1, 2], status: Status::Error };
        assert_eq!(compare_outcomes(&normal, &err), Cell::Killed);
    }
}
