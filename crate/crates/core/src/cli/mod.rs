//! Batch pipeline: parse, mutate, filter, seed-run, generate, evaluate, report.

mod args;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use thiserror::Error;

use crate::exec::{compute_kill_matrix, greedy_minimize, subsuming_groups, KillMatrix, TestCase, Valuation};
use crate::lang::{compile, LowerOptions, Lts, MutId, SourceProgram};
use crate::mutation::{build_meta_mutant, generate_mutants, mutants_tsv, tce_filter, Mutant, Operator, TceReport};
use crate::solver::{Domains, SolverHandle, DEFAULT_TIMEOUT};
use crate::symex::{explore, io, Budget, Config, ExplorationStats, GeneratedTest, Mode};

pub use args::{run_cli, Cli, Command};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("[{stage}] {message}")]
    Stage { stage: &'static str, message: String },
}

fn stage<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Stage { stage, message: e.to_string() }
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverChoice {
    Bounded,
    External(Vec<String>),
}

pub const DEFAULT_EXTERNAL_SOLVER: &str = "z3 -in";

#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub program: Option<PathBuf>,
    pub seeds: Option<PathBuf>,
    pub operators: BTreeSet<Operator>,
    pub out: PathBuf,
    pub config: Config,
    pub solver: SolverChoice,
    pub solver_timeout: Duration,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            program: None,
            seeds: None,
            operators: Operator::all(),
            out: PathBuf::from("mutsym-out"),
            config: Config::default(),
            solver: SolverChoice::Bounded,
            solver_timeout: DEFAULT_TIMEOUT,
        }
    }
}

impl RunManifest {
    pub fn solver_handle(&self, lts: &Lts) -> SolverHandle {
        let domains = Domains::from_lts(lts);
        let h = match &self.solver {
            SolverChoice::Bounded => SolverHandle::bounded(domains),
            SolverChoice::External(cmd) => SolverHandle::external(domains, cmd.clone()),
        };
        h.with_timeout(self.solver_timeout)
    }

    /// Checks that referenced files exist and that the configuration is valid.
    pub fn validate(&self) -> Result<(), CliError> {
        let program = self.program.as_ref().ok_or(CliError::Config { line: 0, message: "no program given".into() })?;
        for p in std::iter::once(program).chain(&self.seeds) {
            if !p.is_file() {
                return Err(CliError::Io { path: p.clone(), source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found") });
            }
        }
        self.config.validate().map_err(|e| CliError::Config { line: 0, message: e.to_string() })
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

/// Applies one `key=value` setting.
pub fn apply_setting(m: &mut RunManifest, key: &str, value: &str) -> Result<(), String> {
    fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
        v.parse().map_err(|_| format!("`{v}` is not a valid number"))
    }
    let c = &mut m.config;
    match key.to_ascii_lowercase().as_str() {
        "program" => m.program = Some(PathBuf::from(value)),
        "seeds" => m.seeds = Some(PathBuf::from(value)),
        "out" => m.out = PathBuf::from(value),
        "operators" => m.operators = Operator::parse_set(value).map_err(|e| e.to_string())?,
        "mode" => c.mode = value.parse().map_err(|e: crate::symex::SymexError| e.to_string())?,
        "pl" => c.pl = value.parse().map_err(|e: crate::symex::SymexError| e.to_string())?,
        "pss" => c.pss = value.parse().map_err(|e: crate::symex::SymexError| e.to_string())?,
        "cw" => c.cw = num(value)?,
        "pp" => {
            let pp: f64 = num(value)?;
            if !(0.0..=1.0).contains(&pp) {
                return Err(format!("PP={value} outside [0,1]"));
            }
            c.pp = pp;
        }
        "mpd" => c.mpd = num(value)?,
        "nsd" => c.nsd = parse_bool(value).ok_or_else(|| format!("`{value}` is not a boolean"))?,
        "ntpm" => {
            c.ntpm = num(value)?;
            if c.ntpm == 0 {
                return Err("NTPM must be positive".into());
            }
        }
        "budget_seconds" => {
            let s: f64 = num(value)?;
            c.budget.wall_clock = if s > 0.0 { Some(Duration::from_secs_f64(s)) } else { None };
        }
        "max_states" => c.budget.max_states = Some(num(value)?),
        "rng_seed" => c.rng_seed = num(value)?,
        "step_budget" => c.step_budget = num(value)?,
        "max_term_size" => c.max_term_size = num(value)?,
        "solver" => {
            m.solver = match value {
                "bounded" => SolverChoice::Bounded,
                "external" => match &m.solver {
                    SolverChoice::External(cmd) => SolverChoice::External(cmd.clone()),
                    SolverChoice::Bounded => SolverChoice::External(split_command(DEFAULT_EXTERNAL_SOLVER)),
                },
                other => return Err(format!("unknown solver `{other}`")),
            }
        }
        "external_solver_cmd" => m.solver = SolverChoice::External(split_command(value)),
        "solver_timeout_seconds" => m.solver_timeout = Duration::from_secs_f64(num(value)?),
        other => return Err(format!("unknown key `{other}`")),
    }
    Ok(())
}

pub fn split_command(cmd: &str) -> Vec<String> {
    cmd.split_whitespace().map(String::from).collect()
}

/// `key=value` lines with `#` comments. Unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<RunManifest, CliError> {
    let mut m = RunManifest::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| CliError::Config { line: i + 1, message };
        let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected key=value, found `{line}`")))?;
        apply_setting(&mut m, k.trim(), v.trim()).map_err(err)?;
    }
    Ok(m)
}

/// Final outcome of one mutant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MutantOutcome {
    Equivalent,
    Duplicate(MutId),
    KilledBySeeds,
    KilledByGenerated,
    Survived,
}

impl std::fmt::Display for MutantOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MutantOutcome::Equivalent => f.write_str("equivalent"),
            MutantOutcome::Duplicate(r) => write!(f, "duplicate-of-{r}"),
            MutantOutcome::KilledBySeeds => f.write_str("killed-by-seeds"),
            MutantOutcome::KilledByGenerated => f.write_str("killed-by-generated"),
            MutantOutcome::Survived => f.write_str("survived"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub mode: Mode,
    pub generated: usize,
    pub equivalent: usize,
    pub duplicate: usize,
    pub surviving: usize,
    pub killed_by_seeds: usize,
    pub killed_by_generated: usize,
    pub targets: usize,
    pub outcomes: BTreeMap<MutId, MutantOutcome>,
    /// Per generated test: whether it killed its target concretely.
    pub test_kills_target: Vec<bool>,
    pub tests: Vec<GeneratedTest>,
    pub minimized_size: usize,
    pub stats: ExplorationStats,
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mode={}", self.mode);
        let _ = writeln!(out, "mutants_generated={}", self.generated);
        let _ = writeln!(out, "tce_equivalent={}", self.equivalent);
        let _ = writeln!(out, "tce_duplicate={}", self.duplicate);
        let _ = writeln!(out, "tce_surviving={}", self.surviving);
        let _ = writeln!(out, "killed_by_seeds={}", self.killed_by_seeds);
        let _ = writeln!(out, "targets={}", self.targets);
        let _ = writeln!(out, "killed_by_generated={}", self.killed_by_generated);
        let _ = writeln!(out, "generated_tests={}", self.tests.len());
        let _ = writeln!(out, "mutant_killing_test_set={}", self.minimized_size);
        out.push_str("\n[mutants]\n");
        for (m, o) in &self.outcomes {
            let _ = writeln!(out, "{m}\t{o}");
        }
        out.push_str("\n[generated]\n");
        for (i, (t, k)) in self.tests.iter().zip(&self.test_kills_target).enumerate() {
            let _ = writeln!(
                out,
                "gen:{}\tmutant={}\tsite={}\tk={}\t{}\tkills_target={}",
                i + 1,
                t.target,
                t.site,
                t.k,
                io::format_valuation(&t.input),
                if *k { "yes" } else { "no" }
            );
        }
        out.push_str("\n[stats]\n");
        out.push_str(&self.stats.to_text(false));
        out
    }
}

/// File names written by [`run_pipeline`].
pub mod artifacts {
    pub const MUTANTS: &str = "mutants.tsv";
    pub const TCE: &str = "tce.tsv";
    pub const TESTS: &str = "tests.txt";
    pub const STATS: &str = "stats.txt";
    pub const MATRIX: &str = "matrix.csv";
    pub const MINIMIZED: &str = "minimized.txt";
    pub const REPORT: &str = "report.txt";
}

pub fn load_program(path: &Path) -> Result<Lts, CliError> {
    let src = SourceProgram::from_file(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    compile(&src, LowerOptions::default()).map_err(stage("parse"))
}

pub fn load_seeds(path: Option<&Path>) -> Result<Vec<Valuation>, CliError> {
    match path {
        Some(p) => io::parse_seeds(&read_file(p)?).map_err(stage("seeds")),
        None => Ok(Vec::new()),
    }
}

pub fn seed_cases(seeds: &[Valuation]) -> Vec<TestCase> {
    seeds.iter().enumerate().map(|(i, s)| TestCase { label: format!("seed:{}", i + 1), input: s.clone() }).collect()
}

pub fn generated_cases(tests: &[GeneratedTest]) -> Vec<TestCase> {
    tests.iter().enumerate().map(|(i, t)| TestCase { label: format!("gen:{}", i + 1), input: t.input.clone() }).collect()
}

/// Everything the pipeline computes, beyond the written report.
#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub report: Report,
    pub mutants: Vec<Mutant>,
    pub tce: TceReport,
    pub matrix: KillMatrix,
    pub minimized: Vec<usize>,
}

/// Runs all stages and writes every artifact into `manifest.out`, each as
/// soon as it is available.
pub fn run_pipeline(manifest: &RunManifest) -> Result<PipelineResult, CliError> {
    manifest.validate()?;
    let out = &manifest.out;
    std::fs::create_dir_all(out).map_err(|source| CliError::Io { path: out.clone(), source })?;
    let cfg = &manifest.config;

    let lts = load_program(manifest.program.as_ref().unwrap())?;
    let seeds = load_seeds(manifest.seeds.as_deref())?;
    if seeds.is_empty() && cfg.mode != Mode::Vanilla && manifest.seeds.is_some() {
        return Err(CliError::Stage { stage: "seeds", message: "seed file holds no seeds".into() });
    }

    let mutants = generate_mutants(&lts, &manifest.operators).map_err(stage("mutate"))?;
    write_file(&out.join(artifacts::MUTANTS), &mutants_tsv(&mutants))?;

    let tce = tce_filter(&lts, &mutants);
    write_file(&out.join(artifacts::TCE), &tce.to_tsv(&mutants))?;

    let meta = build_meta_mutant(&lts, &mutants).map_err(stage("meta"))?;
    let seed_tests = seed_cases(&seeds);
    let seed_matrix = compute_kill_matrix(&meta.lts, &tce.surviving, &seed_tests, cfg.step_budget).map_err(stage("seed-run"))?;
    let seed_killed = seed_matrix.killed_mutants();
    let targets: BTreeSet<MutId> = tce.surviving.iter().copied().filter(|m| !seed_killed.contains(m)).collect();

    let solver = manifest.solver_handle(&lts);
    let exploration = explore(&meta, &targets, &seeds, cfg, &solver).map_err(stage("symex"))?;
    write_file(&out.join(artifacts::TESTS), &io::format_tests(&exploration.tests))?;
    write_file(&out.join(artifacts::STATS), &exploration.stats.to_text(false))?;

    let mut all_tests = seed_tests;
    all_tests.extend(generated_cases(&exploration.tests));
    let matrix = compute_kill_matrix(&meta.lts, &tce.surviving, &all_tests, cfg.step_budget).map_err(stage("matrix"))?;
    write_file(&out.join(artifacts::MATRIX), &matrix.to_csv())?;

    let minimized = greedy_minimize(&matrix);
    let mut text = String::new();
    for &row in &minimized {
        let _ = writeln!(text, "{}\t{}", all_tests[row].label, io::format_valuation(&all_tests[row].input));
    }
    write_file(&out.join(artifacts::MINIMIZED), &text)?;

    let n_seeds = seeds.len();
    let gen_rows: Vec<usize> = (n_seeds..all_tests.len()).collect();
    let gen_killed = matrix.killed_by(&gen_rows);
    let col = |m: MutId| matrix.mutants.iter().position(|x| *x == m);
    let test_kills_target = exploration
        .tests
        .iter()
        .enumerate()
        .map(|(i, t)| col(t.target).is_some_and(|c| matrix.killed(n_seeds + i, c)))
        .collect();

    let mut outcomes = BTreeMap::new();
    for m in &mutants {
        let o = match tce.class_of(m.id).as_str() {
            "equivalent" => MutantOutcome::Equivalent,
            "surviving" if seed_killed.contains(&m.id) => MutantOutcome::KilledBySeeds,
            "surviving" if gen_killed.contains(&m.id) => MutantOutcome::KilledByGenerated,
            "surviving" => MutantOutcome::Survived,
            _ => MutantOutcome::Duplicate(tce.duplicate_groups.iter().find(|g| g.members.contains(&m.id)).unwrap().representative),
        };
        outcomes.insert(m.id, o);
    }
    let report = Report {
        mode: cfg.mode,
        generated: mutants.len(),
        equivalent: tce.equivalent.len(),
        duplicate: tce.duplicates().len(),
        surviving: tce.surviving.len(),
        killed_by_seeds: seed_killed.len(),
        killed_by_generated: outcomes.values().filter(|o| **o == MutantOutcome::KilledByGenerated).count(),
        targets: targets.len(),
        outcomes,
        test_kills_target,
        tests: exploration.tests,
        minimized_size: minimized.len(),
        stats: exploration.stats,
    };
    write_file(&out.join(artifacts::REPORT), &report.to_text())?;
    Ok(PipelineResult { report, mutants, tce, matrix, minimized })
}

/// Kill summary of a matrix: killed and surviving mutants, minimized suite
/// and subsuming groups.
pub fn matrix_summary(km: &KillMatrix) -> String {
    let mut out = String::new();
    let killed = km.killed_mutants();
    let _ = writeln!(out, "tests={}", km.tests.len());
    let _ = writeln!(out, "mutants={}", km.mutants.len());
    let _ = writeln!(out, "killed={}", killed.len());
    let _ = writeln!(out, "timeouts={}", km.timeouts());
    let min: Vec<&str> = greedy_minimize(km).iter().map(|&t| km.tests[t].as_str()).collect();
    let _ = writeln!(out, "minimized={}", min.join(","));
    for g in subsuming_groups(km) {
        let members: Vec<String> = g.members.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(out, "subsuming representative={} members={}", g.representative, members.join(","));
    }
    out
}

/// Budget from an optional number of seconds (0 or none disables it).
pub fn budget_from_seconds(seconds: Option<f64>, max_states: Option<u64>) -> Budget {
    Budget { wall_clock: seconds.filter(|s| *s > 0.0).map(Duration::from_secs_f64), max_states }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symex::{PreconditionLength, SelectionStrategy};

    #[test]
    fn empty_config_gives_defaults() {
        let m = parse_config("").unwrap();
        let c = &m.config;
        assert_eq!(c.pl, PreconditionLength::Gmd2ms);
        assert_eq!((c.cw, c.pp, c.pss, c.mpd, c.nsd, c.ntpm), (0, 0.25, SelectionStrategy::Rnd, 2, false, 5));
        assert_eq!(c.budget.wall_clock, Some(Duration::from_secs(60)));
        assert_eq!(m.solver, SolverChoice::Bounded);
    }

    #[test]
    fn settings_and_comments() {
        let m = parse_config("# selected\nPP=0.5\nPSS = MDO # inline\nNSD=true\nmode=infection-only\n").unwrap();
        assert_eq!(m.config.pp, 0.5);
        assert_eq!(m.config.pss, SelectionStrategy::Mdo);
        assert!(m.config.nsd);
        assert_eq!(m.config.mode, Mode::InfectionOnly);
    }

    #[test]
    fn errors_name_the_line() {
        match parse_config("CW=1\nPP=1.5\n") {
            Err(CliError::Config { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_config("colour=blue") {
            Err(CliError::Config { line: 1, message }) => assert!(message.contains("unknown key")),
            other => panic!("{other:?}"),
        }
        assert!(parse_config("NTPM=0").is_err());
        assert!(parse_config("just words").is_err());
    }
}
