use std::path::PathBuf;

use clap::{Args, ValueEnum};
use l0cca::linear::{check_lambdas, path_point, PathPoint};
use l0cca::{DataMatrix, LinearCcaModel, PathRecord, TrainConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{begin_outputs, parse_list, required, resolve, worker_pool, CommonArgs, HasOut, TrainArgs};
use crate::error::{CliError, CliResult};
use crate::io::{read_view, write_csv_rows, write_json, write_jsonl};

pub const COMMAND: &str = "path";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathSelect {
    /// Pick the λ whose model has the largest ρ̂ on held-out data.
    MaxRhoHoldout,
}

#[derive(Debug, Clone, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub x: Option<PathBuf>,
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// λ grid, comma separated.
    #[arg(long)]
    pub lambdas: Option<String>,
    #[arg(long, value_enum)]
    pub select: Option<PathSelect>,
    /// Held-out views for --select; without them the last samples are held out.
    #[arg(long, requires = "val_y")]
    pub val_x: Option<PathBuf>,
    #[arg(long, requires = "val_x")]
    pub val_y: Option<PathBuf>,
    /// Fraction of samples held out when no validation files are given.
    #[arg(long, default_value_t = 0.2)]
    pub holdout: f64,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub x: PathBuf,
    pub y: PathBuf,
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub select: Option<PathSelect>,
    #[serde(default)]
    pub val_x: Option<PathBuf>,
    #[serde(default)]
    pub val_y: Option<PathBuf>,
    pub holdout: f64,
    pub train: TrainConfig,
    pub out: PathBuf,
}

impl HasOut for PathConfig {
    fn set_out(&mut self, out: PathBuf) {
        self.out = out;
    }
}

/// A path record plus its held-out correlation when a selection rule is active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    #[serde(flatten)]
    pub record: PathRecord,
    pub holdout_rho_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selected {
    pub lambda: f64,
    pub holdout_rho_hat: f64,
    pub model: LinearCcaModel,
}

#[derive(Debug, Clone)]
pub struct PathOutcome {
    pub rows: Vec<PathRow>,
    pub selected: Option<Selected>,
}

pub fn resolve_args(a: &PathArgs) -> CliResult<PathConfig> {
    resolve(&a.common, COMMAND, || {
        let lambdas = parse_list::<f64>(&required(&a.lambdas, "lambdas")?, "lambda")?;
        Ok(PathConfig {
            x: required(&a.x, "x")?,
            y: required(&a.y, "y")?,
            lambdas,
            select: a.select,
            val_x: a.val_x.clone(),
            val_y: a.val_y.clone(),
            holdout: a.holdout,
            train: a.train.apply(TrainConfig::linear_preset())?,
            out: required(&a.common.out, "out")?,
        })
    })
}

/// Splits off the last `frac` of the samples, re-centering both parts.
fn split(v: &DataMatrix, frac: f64) -> CliResult<(DataMatrix, DataMatrix)> {
    let n = v.samples();
    let held = ((n as f64) * frac).round() as usize;
    if held < 3 || n - held < 3 {
        return Err(CliError::usage(format!("holdout {frac} of {n} samples leaves too few on one side")));
    }
    let m = v.matrix();
    let train: Vec<usize> = (0..n - held).collect();
    let test: Vec<usize> = (n - held..n).collect();
    Ok((
        DataMatrix::centered(m.select_cols(&train))?,
        DataMatrix::centered(m.select_cols(&test))?,
    ))
}

pub fn execute(cfg: &PathConfig) -> CliResult<PathOutcome> {
    cfg.train.validate()?;
    check_lambdas(&cfg.lambdas)?;
    if cfg.lambdas.iter().any(|l| !(*l >= 0.0)) {
        return Err(CliError::usage("lambdas must be non-negative"));
    }
    let (x, y) = (read_view(&cfg.x)?, read_view(&cfg.y)?);
    if x.samples() != y.samples() {
        return Err(CliError::usage("views differ in sample count"));
    }
    let (x, y, held) = match (cfg.select, &cfg.val_x, &cfg.val_y) {
        (None, _, _) => (x, y, None),
        (Some(_), Some(vx), Some(vy)) => {
            let (vx, vy) = (read_view(vx)?, read_view(vy)?);
            (x, y, Some((vx, vy)))
        }
        (Some(_), _, _) => {
            if !(cfg.holdout > 0.0 && cfg.holdout < 1.0) {
                return Err(CliError::usage("--holdout must be in (0, 1)"));
            }
            let (xt, xv) = split(&x, cfg.holdout)?;
            let (yt, yv) = split(&y, cfg.holdout)?;
            (xt, yt, Some((xv, yv)))
        }
    };
    let pool = worker_pool()?;
    begin_outputs(&cfg.out, COMMAND, cfg.train.seed, cfg)?;

    let points: Vec<PathPoint> = pool.install(|| {
        cfg.lambdas
            .par_iter()
            .map(|&l| path_point(&x, &y, l, &cfg.train))
            .collect::<l0cca::Result<Vec<_>>>()
    })?;
    let rows: Vec<PathRow> = points
        .iter()
        .map(|p| PathRow {
            record: p.record.clone(),
            holdout_rho_hat: held.as_ref().map(|(vx, vy)| p.model.rho_hat(vx, vy, cfg.train.denom_eps)),
        })
        .collect();
    let selected = match held {
        Some(_) => rows
            .iter()
            .zip(&points)
            .filter_map(|(r, p)| r.holdout_rho_hat.map(|h| (h, p)))
            .fold(None::<(f64, &PathPoint)>, |best, (h, p)| match best {
                Some((b, _)) if b >= h => best,
                _ => Some((h, p)),
            })
            .map(|(h, p)| Selected {
                lambda: p.record.lambda,
                holdout_rho_hat: h,
                model: p.model.clone(),
            }),
        None => None,
    };

    write_jsonl(&cfg.out.join("path.jsonl"), &rows)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.record.lambda.to_string(),
                r.record.expected_active_x.to_string(),
                r.record.expected_active_y.to_string(),
                r.record.rho_hat.to_string(),
                r.holdout_rho_hat.map_or(String::new(), |v| v.to_string()),
            ]
        })
        .collect();
    write_csv_rows(
        &cfg.out.join("path.csv"),
        &["lambda", "expected_active_x", "expected_active_y", "rho_hat", "holdout_rho_hat"],
        &csv_rows,
    )?;
    if let Some(s) = &selected {
        write_json(&cfg.out.join("selected.json"), s)?;
    }
    Ok(PathOutcome { rows, selected })
}
