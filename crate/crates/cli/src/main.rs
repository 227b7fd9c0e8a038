//! `lowrank-lab`: run singular-value decay experiments from JSON configs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lowrank_core::lab::{run_experiment, run_spectrum, DecayReport, ExperimentConfig, Mode};
use lowrank_core::{Error, Result};
use rayon::prelude::*;

const OUT_ENV: &str = "LOWRANK_LAB_OUT";
const DEFAULT_OUT: &str = "out";

const EXIT_PASS: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_FAIL: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "lowrank-lab", version, about = "Low-rank decay experiments on Kronecker-structured problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Singular spectra of the solution or eigenvector, no bounds.
    Spectrum(RunArgs),
    /// Richardson iteration for an SPD system with bound certification.
    Solve(RunArgs),
    /// Shifted Richardson iteration for the smallest eigenvector.
    Eigen(RunArgs),
    /// Interaction-free operator: additive rank law and geometric decay.
    Commuting(RunArgs),
    /// Condition number and rank structure across orders.
    Sweep(RunArgs),
    /// Rank growth of two shifted steps for `A1⊗I + I⊗A2 + B⊗C`.
    TwoStep(RunArgs),
    /// Parse and check configs without running them.
    ValidateConfig(RunArgs),
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Experiment config (JSON); repeat for several experiments.
    #[arg(long = "config", short = 'c', required = true)]
    configs: Vec<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long = "eps-rank")]
    eps_rank: Option<f64>,
    /// Output directory (overrides LOWRANK_LAB_OUT and the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent configs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(short, long)]
    verbose: bool,
}

impl Command {
    fn args(&self) -> &RunArgs {
        match self {
            Command::Spectrum(a)
            | Command::Solve(a)
            | Command::Eigen(a)
            | Command::Commuting(a)
            | Command::Sweep(a)
            | Command::TwoStep(a)
            | Command::ValidateConfig(a) => a,
        }
    }

    fn mode(&self) -> Option<Mode> {
        match self {
            Command::Solve(_) => Some(Mode::Linear),
            Command::Eigen(_) => Some(Mode::Eigen),
            Command::Commuting(_) => Some(Mode::Commuting),
            Command::Sweep(_) => Some(Mode::DSweep),
            Command::TwoStep(_) => Some(Mode::TwoStep),
            Command::Spectrum(_) | Command::ValidateConfig(_) => None,
        }
    }
}

fn load_config(path: &Path, command: &Command) -> Result<ExperimentConfig> {
    let args = command.args();
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(steps) = args.steps {
        cfg.n_steps = steps;
    }
    if let Some(eps) = args.eps_rank {
        cfg.eps_rank = eps;
    }
    if let Some(mode) = command.mode() {
        match cfg.mode {
            Some(m) if m != mode => {
                return Err(Error::Config(format!(
                    "config mode {} does not match the subcommand ({})",
                    m.name(),
                    mode.name()
                )))
            }
            _ => cfg.mode = Some(mode),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_dir(args: &RunArgs, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = &args.out {
        return dir.clone();
    }
    if let Some(dir) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(dir);
    }
    cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn execute(command: &Command, cfg: &ExperimentConfig) -> Result<DecayReport> {
    match command {
        Command::Spectrum(_) => run_spectrum(cfg),
        _ => run_experiment(cfg),
    }
}

fn report_error(context: &Path, err: &Error) {
    eprintln!("lowrank-lab: reason={} {}: {err}", err.reason(), context.display());
}

fn print_report(report: &DecayReport, files: &[PathBuf], verbose: bool) {
    let verdict = if report.pass { "PASS" } else { "FAIL" };
    println!("{verdict} {} mode={} files={}", report.name, report.mode.name(), files.len());
    for failure in report.failures() {
        println!("  failed: {failure}");
    }
    if verbose {
        for check in &report.checks {
            let v = if check.pass { "ok" } else { "FAIL" };
            eprintln!("  [{v}] {}: {}", check.name, check.detail);
        }
        for note in &report.notes {
            eprintln!("  note: {note}");
        }
        for f in files {
            eprintln!("  wrote {}", f.display());
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Pass,
    Fail,
    Error,
}

/// Any error wins, then any failed verdict.
fn exit_status(outcomes: &[Outcome]) -> u8 {
    if outcomes.contains(&Outcome::Error) {
        EXIT_ERROR
    } else if outcomes.contains(&Outcome::Fail) {
        EXIT_FAIL
    } else {
        EXIT_PASS
    }
}

fn run(command: Command) -> u8 {
    let args = command.args().clone();
    let mut configs = Vec::with_capacity(args.configs.len());
    for path in &args.configs {
        match load_config(path, &command) {
            Ok(cfg) => configs.push((path.clone(), cfg)),
            Err(e) => {
                report_error(path, &e);
                return EXIT_ERROR;
            }
        }
    }
    if let Command::ValidateConfig(_) = command {
        for (path, cfg) in &configs {
            println!("ok {} ({})", cfg.name(), path.display());
        }
        return EXIT_PASS;
    }

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.jobs.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("lowrank-lab: reason=thread_pool {e}");
            return EXIT_ERROR;
        }
    };
    let results: Vec<Result<DecayReport>> =
        pool.install(|| configs.par_iter().map(|(_, cfg)| execute(&command, cfg)).collect());

    let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let mut outcomes = Vec::with_capacity(results.len());
    for ((path, cfg), result) in configs.iter().zip(results) {
        let mut report = match result {
            Ok(r) => r,
            Err(e) => {
                report_error(path, &e);
                outcomes.push(Outcome::Error);
                continue;
            }
        };
        report.timestamp = Some(timestamp.clone());
        match report.write(&output_dir(&args, cfg)) {
            Ok(files) => {
                print_report(&report, &files, args.verbose);
                outcomes.push(if report.pass { Outcome::Pass } else { Outcome::Fail });
            }
            Err(e) => {
                report_error(path, &e);
                outcomes.push(Outcome::Error);
            }
        }
    }
    exit_status(&outcomes)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            eprintln!("lowrank-lab: reason=usage");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    ExitCode::from(run(cli.command))
}
