use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::exec::{compute_kill_matrix, greedy_minimize, KillMatrix};
use crate::mutation::{build_meta_mutant, generate_mutants, mutants_tsv, tce_filter};
use crate::symex::{explore, io};

use super::*;

#[derive(Debug, Parser)]
#[command(name = "mutsym", version, about = "Mutant generation and mutant-killing test generation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the mutants of a program.
    Mutate(RunArgs),
    /// Classify mutants as equivalent, duplicate or surviving.
    Tce(RunArgs),
    /// Generate tests by symbolic exploration.
    Gen(RunArgs),
    /// Compute the kill matrix of seeds and generated tests.
    Matrix {
        #[command(flatten)]
        run: RunArgs,
        /// Generated-test file.
        #[arg(long)]
        tests: Option<PathBuf>,
    },
    /// Greedy mutant-killing test set of a kill matrix.
    Minimize {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Kill summary and subsuming mutants of a kill matrix.
    Report {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Run the full pipeline.
    All(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub program: Option<PathBuf>,
    #[arg(long)]
    pub seeds: Option<PathBuf>,
    /// semu, infection-only or vanilla.
    #[arg(long)]
    pub mode: Option<String>,
    /// key=value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub budget_seconds: Option<f64>,
    #[arg(long)]
    pub rng_seed: Option<u64>,
    /// bounded or external.
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub external_solver_cmd: Option<String>,
    /// Comma-separated operator names.
    #[arg(long)]
    pub operators: Option<String>,
}

impl RunArgs {
    /// Configuration file first, then flags.
    pub fn manifest(&self) -> Result<RunManifest, CliError> {
        let mut m = match &self.config {
            Some(p) => parse_config(&read_file(p)?)?,
            None => RunManifest::default(),
        };
        let flag = |e: String| CliError::Config { line: 0, message: e };
        if let Some(p) = &self.program {
            m.program = Some(p.clone());
        }
        if let Some(p) = &self.seeds {
            m.seeds = Some(p.clone());
        }
        if let Some(p) = &self.out {
            m.out = p.clone();
        }
        let settings = [
            ("mode", self.mode.clone()),
            ("budget_seconds", self.budget_seconds.map(|s| s.to_string())),
            ("rng_seed", self.rng_seed.map(|s| s.to_string())),
            ("external_solver_cmd", self.external_solver_cmd.clone()),
            ("solver", self.solver.clone()),
            ("operators", self.operators.clone()),
        ];
        for (k, v) in settings {
            if let Some(v) = v {
                apply_setting(&mut m, k, &v).map_err(flag)?;
            }
        }
        Ok(m)
    }
}

fn ensure_out(m: &RunManifest) -> Result<(), CliError> {
    std::fs::create_dir_all(&m.out).map_err(|source| CliError::Io { path: m.out.clone(), source })
}

fn program(m: &RunManifest) -> Result<crate::lang::Lts, CliError> {
    let p = m.program.as_ref().ok_or(CliError::Config { line: 0, message: "--program is required".into() })?;
    load_program(p)
}

/// Runs a parsed command line; returns the text to print.
pub fn run_cli(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Mutate(a) => {
            let m = a.manifest()?;
            let lts = program(&m)?;
            let mutants = generate_mutants(&lts, &m.operators).map_err(stage("mutate"))?;
            let text = mutants_tsv(&mutants);
            if a.out.is_some() {
                ensure_out(&m)?;
                write_file(&m.out.join(artifacts::MUTANTS), &text)?;
            }
            Ok(text)
        }
        Command::Tce(a) => {
            let m = a.manifest()?;
            let lts = program(&m)?;
            let mutants = generate_mutants(&lts, &m.operators).map_err(stage("mutate"))?;
            let text = tce_filter(&lts, &mutants).to_tsv(&mutants);
            if a.out.is_some() {
                ensure_out(&m)?;
                write_file(&m.out.join(artifacts::TCE), &text)?;
            }
            Ok(text)
        }
        Command::Gen(a) => {
            let m = a.manifest()?;
            m.validate()?;
            let lts = program(&m)?;
            let seeds = load_seeds(m.seeds.as_deref())?;
            let mutants = generate_mutants(&lts, &m.operators).map_err(stage("mutate"))?;
            let tce = tce_filter(&lts, &mutants);
            let meta = build_meta_mutant(&lts, &mutants).map_err(stage("meta"))?;
            let seed_matrix = compute_kill_matrix(&meta.lts, &tce.surviving, &seed_cases(&seeds), m.config.step_budget)
                .map_err(stage("seed-run"))?;
            let killed = seed_matrix.killed_mutants();
            let targets = tce.surviving.iter().copied().filter(|x| !killed.contains(x)).collect();
            let ex = explore(&meta, &targets, &seeds, &m.config, &m.solver_handle(&lts)).map_err(stage("symex"))?;
            let text = io::format_tests(&ex.tests);
            ensure_out(&m)?;
            write_file(&m.out.join(artifacts::TESTS), &text)?;
            write_file(&m.out.join(artifacts::STATS), &ex.stats.to_text(false))?;
            Ok(text)
        }
        Command::Matrix { run, tests } => {
            let m = run.manifest()?;
            let lts = program(&m)?;
            let seeds = load_seeds(m.seeds.as_deref())?;
            let generated = match &tests {
                Some(p) => io::parse_tests(&read_file(p)?).map_err(stage("tests"))?,
                None => Vec::new(),
            };
            let mutants = generate_mutants(&lts, &m.operators).map_err(stage("mutate"))?;
            let tce = tce_filter(&lts, &mutants);
            let meta = build_meta_mutant(&lts, &mutants).map_err(stage("meta"))?;
            let mut cases = seed_cases(&seeds);
            cases.extend(generated_cases(&generated));
            let km = compute_kill_matrix(&meta.lts, &tce.surviving, &cases, m.config.step_budget).map_err(stage("matrix"))?;
            let text = km.to_csv();
            if run.out.is_some() {
                ensure_out(&m)?;
                write_file(&m.out.join(artifacts::MATRIX), &text)?;
            }
            Ok(text)
        }
        Command::Minimize { matrix } => {
            let km = KillMatrix::from_csv(&read_file(&matrix)?).map_err(stage("minimize"))?;
            Ok(greedy_minimize(&km).iter().map(|&t| format!("{}\n", km.tests[t])).collect())
        }
        Command::Report { matrix } => {
            let km = KillMatrix::from_csv(&read_file(&matrix)?).map_err(stage("report"))?;
            Ok(matrix_summary(&km))
        }
        Command::All(a) => {
            let m = a.manifest()?;
            Ok(run_pipeline(&m)?.report.to_text())
        }
    }
}
