use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use clap::Args;
use l0cca::gates::expected_l0;
use l0cca::linear::train_l0cca;
use l0cca::synth::{estimation_error, generate, support_f1};
use l0cca::{CovarianceModel, SyntheticSpec, TrainConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{begin_outputs, parse_list, required, resolve, worker_pool, CommonArgs, HasOut, TrainArgs};
use crate::error::{CliError, CliResult};
use crate::io::{write_csv_rows, JsonlAppender};

/// `N×D` problem size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub d: usize,
}

impl FromStr for Dims {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (n, d) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NxD, got `{s}`"))?;
        let p = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{s}`: {e}"));
        Ok(Dims { n: p(n)?, d: p(d)? })
    }
}

/// Problem sizes of the published benchmark for each covariance model.
pub fn default_dims(model: CovarianceModel) -> Dims {
    match model {
        CovarianceModel::Identity => Dims { n: 400, d: 800 },
        CovarianceModel::Toeplitz => Dims { n: 700, d: 1200 },
        CovarianceModel::SparseInverse => Dims { n: 500, d: 600 },
    }
}

pub const TABLE1: &str = "bench-table1";

#[derive(Debug, Clone, Args)]
pub struct BenchTable1Args {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Covariance models, comma separated.
    #[arg(long, default_value = "I,II,III")]
    pub models: String,
    /// Sizes as NxD, comma separated; defaults to each model's published size.
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long)]
    pub rho0: Option<f64>,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchTable1Config {
    pub cells: Vec<(CovarianceModel, Dims)>,
    pub trials: usize,
    /// Trial i uses `seed + i` for both data and training.
    pub seed: u64,
    pub rho0: f64,
    pub train: TrainConfig,
    pub out: PathBuf,
}

impl HasOut for BenchTable1Config {
    fn set_out(&mut self, out: PathBuf) {
        self.out = out;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub model: CovarianceModel,
    pub n: usize,
    pub d: usize,
    pub e_phi: f64,
    pub e_eta: f64,
    pub f1_x: f64,
    pub f1_y: f64,
    pub rho_hat: f64,
    pub expected_active_x: f64,
    pub expected_active_y: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub model: CovarianceModel,
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    pub mean_e_phi: f64,
    pub mean_e_eta: f64,
    pub std_e_phi: f64,
    pub std_e_eta: f64,
    pub mean_f1_x: f64,
    pub mean_f1_y: f64,
    pub mean_seconds: f64,
}

pub fn resolve_table1(a: &BenchTable1Args) -> CliResult<BenchTable1Config> {
    resolve(&a.common, TABLE1, || {
        let models: Vec<CovarianceModel> = parse_list(&a.models, "model")?;
        if models.is_empty() {
            return Err(CliError::usage("--models is empty"));
        }
        let dims: Option<Vec<Dims>> = a.dims.as_deref().map(|s| parse_list(s, "dims")).transpose()?;
        let cells = models
            .iter()
            .flat_map(|&m| match &dims {
                Some(ds) => ds.iter().map(|&d| (m, d)).collect::<Vec<_>>(),
                None => vec![(m, default_dims(m))],
            })
            .collect();
        Ok(BenchTable1Config {
            cells,
            trials: a.trials,
            seed: a.train.seed.unwrap_or(0),
            rho0: a.rho0.unwrap_or(0.9),
            train: a.train.apply(TrainConfig::linear_preset())?,
            out: required(&a.common.out, "out")?,
        })
    })
}

fn spec_for(cfg: &BenchTable1Config, model: CovarianceModel, dims: Dims, seed: u64) -> SyntheticSpec {
    let mut s = SyntheticSpec::new(model, dims.n, dims.d, seed);
    s.rho0 = cfg.rho0;
    s
}

/// One benchmark trial: fresh data and a fresh model from the same seed.
pub fn run_trial(
    model: CovarianceModel,
    dims: Dims,
    rho0: f64,
    trial: usize,
    seed: u64,
    train: &TrainConfig,
) -> l0cca::Result<TrialRecord> {
    let mut spec = SyntheticSpec::new(model, dims.n, dims.d, seed);
    spec.rho0 = rho0;
    let (x, y, truth) = generate(&spec)?;
    let cfg = TrainConfig { seed, ..train.clone() };
    let t0 = Instant::now();
    let (m, _) = train_l0cca(&x, &y, &cfg)?;
    let seconds = t0.elapsed().as_secs_f64();
    let (phi, eta) = m.canonical_vectors();
    let (sx, sy) = m.selected();
    Ok(TrialRecord {
        trial,
        seed,
        model,
        n: dims.n,
        d: dims.d,
        e_phi: estimation_error(&truth.phi, &phi),
        e_eta: estimation_error(&truth.eta, &eta),
        f1_x: support_f1(&truth.support_phi, &sx),
        f1_y: support_f1(&truth.support_eta, &sy),
        rho_hat: m.rho_hat(&x, &y, cfg.denom_eps),
        expected_active_x: expected_l0(&m.gates_x),
        expected_active_y: expected_l0(&m.gates_y),
        seconds,
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

pub fn summarize(records: &[TrialRecord], model: CovarianceModel, dims: Dims) -> Option<CellSummary> {
    let rs: Vec<&TrialRecord> = records
        .iter()
        .filter(|r| r.model == model && r.n == dims.n && r.d == dims.d)
        .collect();
    if rs.is_empty() {
        return None;
    }
    let col = |f: fn(&TrialRecord) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<_>>();
    let (mean_e_phi, std_e_phi) = mean_std(&col(|r| r.e_phi));
    let (mean_e_eta, std_e_eta) = mean_std(&col(|r| r.e_eta));
    Some(CellSummary {
        model,
        n: dims.n,
        d: dims.d,
        trials: rs.len(),
        mean_e_phi,
        mean_e_eta,
        std_e_phi,
        std_e_eta,
        mean_f1_x: mean_std(&col(|r| r.f1_x)).0,
        mean_f1_y: mean_std(&col(|r| r.f1_y)).0,
        mean_seconds: mean_std(&col(|r| r.seconds)).0,
    })
}

/// Runs every (cell, trial) on the worker pool. Records are appended to
/// `results.jsonl` as trials finish; `summary.csv` follows the cell order.
pub fn execute_table1(cfg: &BenchTable1Config) -> CliResult<Vec<CellSummary>> {
    cfg.train.validate()?;
    if cfg.trials == 0 || cfg.cells.is_empty() {
        return Err(CliError::usage("need at least one trial and one cell"));
    }
    for &(m, d) in &cfg.cells {
        spec_for(cfg, m, d, cfg.seed).validate()?;
    }
    let pool = worker_pool()?;
    begin_outputs(&cfg.out, TABLE1, cfg.seed, cfg)?;
    let appender = JsonlAppender::create(&cfg.out.join("results.jsonl"))?;

    let jobs: Vec<(CovarianceModel, Dims, usize)> = cfg
        .cells
        .iter()
        .flat_map(|&(m, d)| (0..cfg.trials).map(move |t| (m, d, t)))
        .collect();
    let mut records: Vec<TrialRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(m, d, t)| {
                let rec = run_trial(m, d, cfg.rho0, t, cfg.seed + t as u64, &cfg.train)?;
                appender.append(&rec)?;
                Ok(rec)
            })
            .collect::<CliResult<Vec<_>>>()
    })?;
    records.sort_by_key(|r| r.trial);

    let summaries: Vec<CellSummary> = cfg
        .cells
        .iter()
        .filter_map(|&(m, d)| summarize(&records, m, d))
        .collect();
    let rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| {
            vec![
                s.model.to_string(),
                s.n.to_string(),
                s.d.to_string(),
                s.trials.to_string(),
                s.mean_e_phi.to_string(),
                s.mean_e_eta.to_string(),
                s.std_e_phi.to_string(),
                s.std_e_eta.to_string(),
                s.mean_f1_x.to_string(),
                s.mean_f1_y.to_string(),
                s.mean_seconds.to_string(),
            ]
        })
        .collect();
    write_csv_rows(
        &cfg.out.join("summary.csv"),
        &[
            "model",
            "n",
            "d",
            "trials",
            "mean_e_phi",
            "mean_e_eta",
            "std_e_phi",
            "std_e_eta",
            "mean_f1_x",
            "mean_f1_y",
            "mean_seconds",
        ],
        &rows,
    )?;
    Ok(summaries)
}

pub const RUNTIME: &str = "bench-runtime";

#[derive(Debug, Clone, Args)]
pub struct BenchRuntimeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Sample sizes, comma separated.
    #[arg(long, default_value = "200,400")]
    pub n: String,
    /// Dimensions per view, comma separated.
    #[arg(long, default_value = "400,800")]
    pub d: String,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value = "I")]
    pub model: String,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchRuntimeConfig {
    pub n_grid: Vec<usize>,
    pub d_grid: Vec<usize>,
    pub repeats: usize,
    pub model: CovarianceModel,
    pub seed: u64,
    pub train: TrainConfig,
    pub out: PathBuf,
}

impl HasOut for BenchRuntimeConfig {
    fn set_out(&mut self, out: PathBuf) {
        self.out = out;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub n: usize,
    pub d: usize,
    pub repeat: usize,
    pub seconds: f64,
    pub rho_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeCell {
    pub n: usize,
    pub d: usize,
    pub mean_seconds: f64,
    pub std_seconds: f64,
}

pub fn resolve_runtime(a: &BenchRuntimeArgs) -> CliResult<BenchRuntimeConfig> {
    resolve(&a.common, RUNTIME, || {
        Ok(BenchRuntimeConfig {
            n_grid: parse_list(&a.n, "sample size")?,
            d_grid: parse_list(&a.d, "dimension")?,
            repeats: a.repeats,
            model: a.model.parse().map_err(|e: l0cca::Error| CliError::usage(e.to_string()))?,
            seed: a.train.seed.unwrap_or(0),
            train: a.train.apply(TrainConfig::linear_preset())?,
            out: required(&a.common.out, "out")?,
        })
    })
}

/// Times `train_l0cca` on each grid cell. Runs are sequential so timings
/// do not compete for cores; data generation is outside the timed region.
pub fn execute_runtime(cfg: &BenchRuntimeConfig) -> CliResult<Vec<RuntimeCell>> {
    cfg.train.validate()?;
    if cfg.n_grid.is_empty() || cfg.d_grid.is_empty() || cfg.repeats == 0 {
        return Err(CliError::usage("grids and repeats must be non-empty"));
    }
    for &n in &cfg.n_grid {
        for &d in &cfg.d_grid {
            SyntheticSpec::new(cfg.model, n, d, cfg.seed).validate()?;
        }
    }
    begin_outputs(&cfg.out, RUNTIME, cfg.seed, cfg)?;
    let timings = JsonlAppender::create(&cfg.out.join("timings.jsonl"))?;
    let train = TrainConfig { seed: cfg.seed, ..cfg.train.clone() };
    let mut cells = Vec::new();
    for &n in &cfg.n_grid {
        for &d in &cfg.d_grid {
            let (x, y, _) = generate(&SyntheticSpec::new(cfg.model, n, d, cfg.seed))?;
            let mut secs = Vec::with_capacity(cfg.repeats);
            for repeat in 0..cfg.repeats {
                let t0 = Instant::now();
                let (m, _) = train_l0cca(&x, &y, &train)?;
                let seconds = t0.elapsed().as_secs_f64();
                secs.push(seconds);
                timings.append(&Timing {
                    n,
                    d,
                    repeat,
                    seconds,
                    rho_hat: m.rho_hat(&x, &y, train.denom_eps),
                })?;
            }
            let (mean_seconds, std_seconds) = mean_std(&secs);
            cells.push(RuntimeCell { n, d, mean_seconds, std_seconds });
        }
    }
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| vec![c.n.to_string(), c.d.to_string(), c.mean_seconds.to_string(), c.std_seconds.to_string()])
        .collect();
    write_csv_rows(&cfg.out.join("runtime.csv"), &["N", "D", "mean_seconds", "std_seconds"], &rows)?;
    Ok(cells)
}
