use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigFile, Experiment, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "apdfp",
    version,
    about = "Run and compare primal-dual fixed-point solvers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Graph-regularized sparse logistic regression.
    Logreg(RunArgs),
    /// Total-variation CT reconstruction.
    Ct(RunArgs),
    /// Quadratic toy with traced partial gaps and the certificate check.
    Quad(RunArgs),
    /// Verify the accelerated step-size schedule for given constants.
    CheckSchedule(ScheduleArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// INI-style config file; flags override its global keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated algorithm names.
    #[arg(long)]
    pub algorithms: Option<String>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Relative-change stopping tolerance, or "none".
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fraction of the largest admissible lambda.
    #[arg(long)]
    pub lambda_scale: Option<f64>,
    /// Schedule constant c in gamma_k = 1/(L_f + c k), as a fraction of L_f (apdfp, nag).
    #[arg(long)]
    pub c: Option<f64>,
    /// Fill the wall_ms column of the trace files.
    #[arg(long)]
    pub wall_clock: bool,
    /// Extra global config entries.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Lipschitz constant of the smooth gradient.
    #[arg(long)]
    pub lf: f64,
    /// Absolute constant c in gamma_k = 1/(L_f + c k).
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    /// Number of iterations to check.
    #[arg(long, default_value_t = 10_000)]
    pub k: usize,
    /// Replace the schedule steps by a constant.
    #[arg(long)]
    pub gamma: Option<f64>,
}

impl RunArgs {
    /// Merges the config file with command line overrides.
    pub fn resolve(&self, experiment: Experiment) -> CliResult<RunConfig> {
        let mut file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                ConfigFile::parse(&text)?
            }
            None => ConfigFile::default(),
        };
        for entry in &self.set {
            let (k, v) = entry.split_once('=').ok_or_else(|| {
                CliError::Config(format!("--set expects KEY=VALUE, got '{entry}'"))
            })?;
            file.set(k, v.trim());
        }
        if let Some(v) = &self.algorithms {
            file.set("algorithms", v.as_str());
        }
        if let Some(v) = self.max_iters {
            file.set("max_iters", v.to_string());
        }
        if let Some(v) = &self.tol {
            file.set("tol", v.as_str());
        }
        if let Some(v) = self.seed {
            file.set("seed", v.to_string());
        }
        if let Some(v) = &self.out {
            file.set("out", v.to_string_lossy());
        }
        if let Some(v) = self.lambda_scale {
            file.set("lambda_scale", v.to_string());
        }
        if let Some(v) = self.c {
            file.set("c", v.to_string());
        }
        if self.wall_clock {
            file.set("wall_clock", "true");
        }
        RunConfig::resolve(experiment, &file)
    }
}
