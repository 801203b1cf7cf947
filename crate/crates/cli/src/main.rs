mod commands;
mod config;
mod rundir;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nls_lab::picard::HorizonRule;
use nls_lab::LabError;

use config::{parse_estimates, ExperimentConfig};

/// Interaction-representation cubic NLS laboratory.
#[derive(Debug, Parser)]
#[command(name = "nls-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment file (JSON); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root; overrides `run.out_dir` and $NLS_LAB_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sweep points.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Master seed; overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Picard solve of the configured initial data; writes diagnostics and the slab.
    Solve {
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<i8>,
        /// Fixed horizon instead of the configured rule.
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        nodes_per_unit: Option<usize>,
    },
    /// Runs estimate checks; exit 0 iff every report passes.
    Verify {
        /// Comma-separated estimate ids.
        #[arg(long)]
        only: Option<String>,
    },
    /// Cartesian sweep of solves and checks from the `sweep` block.
    Sweep,
    /// Renders a run directory as a text summary and optional plot-ready CSV.
    Report {
        dir: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or unusable paths (exit 2).
    Config(String),
    /// At least one estimate failed (exit 1).
    Verification(String),
    /// Under-resolution or loss of contraction (exit 3).
    Numerical(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Verification(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Config(format!("json: {e}"))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Config("--jobs: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Config(format!("--jobs: {e}")))?;
    }
    if let Command::Report { dir, csv } = &cli.command {
        return commands::report(dir, csv.as_deref());
    }
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.run.seed = cli.seed;
    }
    match &cli.command {
        Command::Solve { amplitude, p, sign, horizon, nodes_per_unit } => {
            if let Some(a) = amplitude {
                cfg.solver.initial = cfg.solver.initial.with_amplitude(*a);
            }
            if let Some(p) = p {
                cfg.solver.p = *p;
            }
            if let Some(s) = sign {
                cfg.solver.sign = *s;
            }
            if let Some(t) = horizon {
                cfg.solver.horizon = HorizonRule::Fixed(*t);
            }
            if let Some(n) = nodes_per_unit {
                cfg.solver.nodes_per_unit = *n;
            }
        }
        Command::Verify { only: Some(list) } => {
            let ids: Vec<String> = list.split(',').map(|s| s.trim().to_string()).collect();
            parse_estimates(&ids, "--only")?;
            cfg.verify.estimates = ids;
        }
        _ => {}
    }
    cfg.validate()?;
    let root = rundir::output_root(cli.out.as_deref(), &cfg);
    match cli.command {
        Command::Solve { .. } => commands::solve(&cfg, &root),
        Command::Verify { .. } => commands::verify(&cfg, &root),
        Command::Sweep => commands::sweep(&cfg, &root),
        Command::Report { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
