//! Breadth-first symbolic exploration of a meta-mutant.

mod engine;
pub mod exhaustive;
pub mod io;
mod state;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::exec::{Valuation, DEFAULT_STEP_BUDGET};
use crate::lang::{LocId, MutId};
use crate::solver::{Constraint, SolverError};

pub use engine::{
    apply_precondition, build_kill, build_partial_kill, explore, infection_check, is_checkpoint, keep_count, pair_states,
    select_branches, Precondition, PreconditionDecision,
};
pub use state::{
    non_infection, normalize, output_difference, state_difference, successors, RunStatus, StateId, Successor, SymbolicState,
    Trail,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymexError {
    #[error("prefix depths differ (original {original}, mutant {mutant})")]
    DepthMismatch { original: usize, mutant: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("bad seed: {0}")]
    Seed(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PreconditionLength {
    Gmd2ms,
    Smd2ms,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectionStrategy {
    Rnd,
    Mdo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Semu,
    InfectionOnly,
    Vanilla,
}

macro_rules! keyword_enum {
    ($ty:ty, $($name:literal => $v:expr),+) => {
        impl FromStr for $ty {
            type Err = SymexError;
            fn from_str(s: &str) -> Result<Self, SymexError> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($name => Ok($v),)+
                    other => Err(SymexError::InvalidConfig(format!("unknown value `{other}`"))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $v { return f.write_str(&$name.to_ascii_uppercase()); })+
                unreachable!()
            }
        }
    };
}

keyword_enum!(PreconditionLength, "gmd2ms" => PreconditionLength::Gmd2ms, "smd2ms" => PreconditionLength::Smd2ms);
keyword_enum!(SelectionStrategy, "rnd" => SelectionStrategy::Rnd, "mdo" => SelectionStrategy::Mdo);

impl FromStr for Mode {
    type Err = SymexError;
    fn from_str(s: &str) -> Result<Self, SymexError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "semu" => Ok(Mode::Semu),
            "infection-only" => Ok(Mode::InfectionOnly),
            "vanilla" => Ok(Mode::Vanilla),
            other => Err(SymexError::InvalidConfig(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Semu => "semu",
            Mode::InfectionOnly => "infection-only",
            Mode::Vanilla => "vanilla",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Budget {
    pub max_states: Option<u64>,
    pub wall_clock: Option<Duration>,
}

impl Budget {
    pub fn unbounded() -> Self {
        Budget::default()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub pl: PreconditionLength,
    pub cw: u32,
    pub pp: f64,
    pub pss: SelectionStrategy,
    pub mpd: u32,
    pub nsd: bool,
    pub ntpm: usize,
    pub mode: Mode,
    pub budget: Budget,
    pub rng_seed: u64,
    pub step_budget: u64,
    /// States whose store or outputs hold a term larger than this are dropped.
    pub max_term_size: usize,
    pub record_events: bool,
}

pub const DEFAULT_MAX_TERM_SIZE: usize = 4096;

pub const DEFAULT_WALL_CLOCK: Duration = Duration::from_secs(60);

impl Default for Config {
    fn default() -> Self {
        Config {
            pl: PreconditionLength::Gmd2ms,
            cw: 0,
            pp: 0.25,
            pss: SelectionStrategy::Rnd,
            mpd: 2,
            nsd: false,
            ntpm: 5,
            mode: Mode::Semu,
            budget: Budget { max_states: None, wall_clock: Some(DEFAULT_WALL_CLOCK) },
            rng_seed: 0,
            step_budget: DEFAULT_STEP_BUDGET,
            max_term_size: DEFAULT_MAX_TERM_SIZE,
            record_events: false,
        }
    }
}

impl Config {
    /// Settings under which exploration is exhaustive.
    pub fn exhaustive() -> Self {
        Config { pp: 1.0, mpd: 0, cw: 0, nsd: false, budget: Budget::unbounded(), ..Config::default() }
    }

    pub fn validate(&self) -> Result<(), SymexError> {
        if !(0.0..=1.0).contains(&self.pp) || self.pp.is_nan() {
            return Err(SymexError::InvalidConfig(format!("PP={} outside [0,1]", self.pp)));
        }
        if self.max_term_size == 0 {
            return Err(SymexError::InvalidConfig("max_term_size must be positive".into()));
        }
        if self.ntpm == 0 {
            return Err(SymexError::InvalidConfig("NTPM must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Site {
    Checkpoint,
    Terminal,
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Site::Checkpoint => "checkpoint",
            Site::Terminal => "terminal",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratedTest {
    pub input: Valuation,
    /// Targeted mutant; 0 for untargeted (vanilla) tests.
    pub target: MutId,
    pub site: Site,
    /// Prefix length at generation.
    pub k: usize,
    /// Locations of the original path the test was generated from.
    pub original_path: Vec<LocId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExplorationStats {
    pub states_created: u64,
    pub pruned_infeasible: u64,
    pub pruned_noninfected: u64,
    pub pruned_by_pp: u64,
    pub pruned_by_precondition: u64,
    pub pruned_term_size: u64,
    pub forks: u64,
    pub solver_calls: u64,
    pub solver_unknown: u64,
    pub max_depth: usize,
    pub tests_per_mutant: BTreeMap<MutId, usize>,
    pub budget_exhausted: bool,
    pub aborted: Option<String>,
    pub wall_clock: Duration,
}

impl ExplorationStats {
    pub fn tests_generated(&self) -> usize {
        self.tests_per_mutant.values().sum()
    }

    /// `key=value` lines. Wall clock is left out unless `with_time`, so that
    /// equal runs print equal blocks.
    pub fn to_text(&self, with_time: bool) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k}={v}\n"));
        kv("states_created", self.states_created.to_string());
        kv("pruned_infeasible", self.pruned_infeasible.to_string());
        kv("pruned_noninfected", self.pruned_noninfected.to_string());
        kv("pruned_by_pp", self.pruned_by_pp.to_string());
        kv("pruned_by_precondition", self.pruned_by_precondition.to_string());
        kv("pruned_term_size", self.pruned_term_size.to_string());
        kv("forks", self.forks.to_string());
        kv("solver_calls", self.solver_calls.to_string());
        kv("solver_unknown", self.solver_unknown.to_string());
        kv("max_depth", self.max_depth.to_string());
        kv("tests_generated", self.tests_generated().to_string());
        for (m, n) in &self.tests_per_mutant {
            kv(&format!("tests_mutant_{m}"), n.to_string());
        }
        kv("budget_exhausted", self.budget_exhausted.to_string());
        if let Some(a) = &self.aborted {
            kv("aborted", a.replace('\n', " "));
        }
        if with_time {
            kv("wall_clock_ms", self.wall_clock.as_millis().to_string());
        }
        out
    }
}

/// Exploration trace entries, recorded when `Config::record_events` is set.
#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    /// A mutant state reached a branching location.
    Branch { mutant: MutId, depth: usize, location: LocId, count: u32, checkpoint: bool },
    /// Checkpoint selection; `kept` lists locations of the kept states.
    Selection { mutant: MutId, depth: usize, candidates: usize, kept: Vec<LocId> },
    Precondition { depth: usize, location: LocId, decision: PreconditionDecision, path_condition: Constraint },
}

#[derive(Clone, Debug)]
pub struct Exploration {
    pub tests: Vec<GeneratedTest>,
    pub stats: ExplorationStats,
    pub events: Vec<Event>,
}
