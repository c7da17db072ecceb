pub mod bench;
pub mod eval;
pub mod gen;
pub mod path;
pub mod train;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use l0cca::{Activation, GateInit, Optimizer, Penalty, Selection, TrainConfig};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::io::ensure_dir;
use crate::manifest::Manifest;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Re-run from a previously written manifest.json; other flags except --out are ignored.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitKind {
    Uniform,
    Covariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PenaltyArg {
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Gd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ActivationArg {
    Tanh,
    Linear,
}

impl From<ActivationArg> for Activation {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::Tanh => Activation::Tanh,
            ActivationArg::Linear => Activation::Linear,
        }
    }
}

/// Training overrides applied on top of a command's base configuration.
#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    /// λ for both views.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lambda_x: Option<f64>,
    #[arg(long)]
    pub lambda_y: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub init: Option<InitKind>,
    /// Initial gate mean for uniform init.
    #[arg(long)]
    pub mu0: Option<f64>,
    /// Percentile of cross-covariance entries zeroed by covariance init.
    #[arg(long)]
    pub percentile: Option<f64>,
    #[arg(long, value_enum)]
    pub penalty: Option<PenaltyArg>,
    /// Select the s largest gate means instead of thresholding.
    #[arg(long, value_name = "S")]
    pub top_s: Option<usize>,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerArg>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

impl TrainArgs {
    pub fn apply(&self, base: TrainConfig) -> CliResult<TrainConfig> {
        let mut c = base;
        if let Some(l) = self.lambda {
            c.lambda_x = l;
            c.lambda_y = l;
        }
        if let Some(l) = self.lambda_x {
            c.lambda_x = l;
        }
        if let Some(l) = self.lambda_y {
            c.lambda_y = l;
        }
        if let Some(v) = self.lr {
            c.lr = v;
        }
        if let Some(v) = self.epochs {
            c.epochs = v;
        }
        if let Some(v) = self.sigma {
            c.sigma = v;
        }
        if let Some(v) = self.gamma {
            c.gamma = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.init = match (self.init, c.init) {
            (Some(InitKind::Uniform), _) => GateInit::Uniform { mu0: self.mu0.unwrap_or(0.5) },
            (Some(InitKind::Covariance), _) => GateInit::Covariance { percentile: self.percentile.unwrap_or(90.0) },
            (None, GateInit::Uniform { mu0 }) => GateInit::Uniform { mu0: self.mu0.unwrap_or(mu0) },
            (None, GateInit::Covariance { percentile }) => GateInit::Covariance {
                percentile: self.percentile.unwrap_or(percentile),
            },
        };
        if let Some(p) = self.penalty {
            c.penalty = match p {
                PenaltyArg::Sum => Penalty::Sum,
                PenaltyArg::Mean => Penalty::Mean,
            };
        }
        if let Some(s) = self.top_s {
            c.selection = Selection::TopS(s);
        }
        if let Some(o) = self.optimizer {
            c.optimizer = match o {
                OptimizerArg::Gd => Optimizer::Gd,
                OptimizerArg::Adam => Optimizer::Adam,
            };
        }
        if self.batch_size.is_some() {
            c.batch_size = self.batch_size;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Parses a comma-separated list; an empty string gives an empty list.
pub fn parse_list<T: FromStr>(s: &str, what: &str) -> CliResult<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| CliError::usage(format!("bad {what} `{t}`: {e}"))))
        .collect()
}

pub fn required<T: Clone>(v: &Option<T>, flag: &str) -> CliResult<T> {
    v.clone().ok_or_else(|| CliError::usage(format!("missing required flag --{flag}")))
}

/// Loads the config from `--manifest` or builds it from flags, then applies `--out`.
pub fn resolve<C, F>(common: &CommonArgs, command: &str, from_flags: F) -> CliResult<C>
where
    C: DeserializeOwned + HasOut,
    F: FnOnce() -> CliResult<C>,
{
    let mut cfg = match &common.manifest {
        Some(p) => Manifest::load_config::<C>(p, command)?,
        None => from_flags()?,
    };
    if let Some(out) = &common.out {
        cfg.set_out(out.clone());
    }
    Ok(cfg)
}

pub trait HasOut {
    fn set_out(&mut self, out: PathBuf);
}

/// Creates the output directory and writes the manifest.
pub fn begin_outputs<C: Serialize>(out: &Path, command: &str, seed: u64, cfg: &C) -> CliResult<()> {
    ensure_dir(out)?;
    Manifest::new(command, seed, cfg)?.write(out)
}

/// Worker pool whose width is capped by `SCCA_THREADS`.
pub fn worker_pool() -> CliResult<rayon::ThreadPool> {
    let width = match std::env::var("SCCA_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => return Err(CliError::usage(format!("SCCA_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(width)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))
}
