//! `ljchain`: reproducible experiments on Lennard-Jones chains.
//!
//! Exit codes: 0 success, 2 bad configuration or input, 3 failed consistency
//! check, audit or certificate, 4 an iterative schedule did not converge.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Experiment, ExperimentConfig};
use experiments::Status;

#[derive(Debug, Parser)]
#[command(name = "ljchain", version, about = "Discrete-to-continuum experiments on Lennard-Jones chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the structural hypotheses on the potential family.
    Audit,
    /// Sampled convex envelopes of J_CB and psi_j against the closed forms.
    Density,
    /// Cell-problem values phi_N(z) against J_CB**(z).
    Phi,
    /// Periodic chain minimization over (n, ell).
    Chain,
    /// Boundary-layer energies, beta and the layer profile.
    Layer,
    /// Exponential decay certificate of the layer profile (K = 2).
    Decay,
}

impl Command {
    fn experiment(&self) -> Experiment {
        match self {
            Command::Audit => Experiment::Audit,
            Command::Density => Experiment::Density,
            Command::Phi => Experiment::Phi,
            Command::Chain => Experiment::Chain,
            Command::Layer => Experiment::Layer,
            Command::Decay => Experiment::Decay,
        }
    }
}

#[derive(Debug, Args)]
struct Overrides {
    /// JSON configuration file; flags given here take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    k1: Option<f64>,
    #[arg(long, global = true)]
    k2: Option<f64>,
    /// Interaction range.
    #[arg(long = "K", global = true)]
    range: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

enum Failure {
    Input(String),
    Inconsistent(String),
    NotConverged(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Inconsistent(_) => 3,
            Failure::NotConverged(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Inconsistent(m) | Failure::NotConverged(m) => m,
        }
    }
}

impl From<ljchain::Error> for Failure {
    fn from(e: ljchain::Error) -> Self {
        use ljchain::Error as E;
        let msg = e.to_string();
        match e {
            E::Consistency { .. } => Failure::Inconsistent(msg),
            E::Bracket(_) => Failure::NotConverged(msg),
            _ => Failure::Input(msg),
        }
    }
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let o = &cli.overrides;
    let mut cfg = match &o.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| Failure::Input(format!("{e:#}")))?,
        None => ExperimentConfig::default(),
    };
    let experiment = cli.command.experiment();
    if let Some(file_exp) = cfg.experiment {
        if file_exp != experiment {
            return Err(Failure::Input(format!(
                "config names experiment {file_exp:?} but the command is {experiment:?}"
            )));
        }
    }
    cfg.experiment = Some(experiment);
    if let Some(v) = o.k1 {
        cfg.family.k1 = v;
    }
    if let Some(v) = o.k2 {
        cfg.family.k2 = v;
    }
    if let Some(v) = o.range {
        cfg.family.range = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = &o.out {
        cfg.output_dir = v.clone();
    }
    cfg.validate().map_err(|e| Failure::Input(format!("{e:#}")))?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let cfg = resolve(cli)?;
    let artifacts = experiments::run(&cfg, cli.command.experiment())?;
    output::write_all(&cfg.output_dir, &artifacts.tables, &artifacts.summary)
        .map_err(|e| Failure::Input(format!("{e:#}")))?;
    for t in &artifacts.tables {
        eprintln!("wrote {}", cfg.output_dir.join(format!("{}.csv", t.name)).display());
    }
    match artifacts.status {
        Status::Ok => Ok(()),
        Status::Inconsistent(m) => Err(Failure::Inconsistent(m)),
        Status::NotConverged(m) => Err(Failure::NotConverged(m)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
