use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::Args;
use l0cca::eval::{clustering_accuracy, kmeans, mutual_info};
use l0cca::EvalReport;
use serde::{Deserialize, Serialize};

use super::{begin_outputs, required, resolve, CommonArgs, HasOut};
use crate::error::{CliError, CliResult};
use crate::io::{read_labels, read_matrix, write_json};

pub const COMMAND: &str = "eval";

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Embedding CSV, one sample per row.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    /// One-column label CSV.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Number of clusters; defaults to the number of distinct labels.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub embedding: PathBuf,
    pub labels: PathBuf,
    #[serde(default)]
    pub k: Option<usize>,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl HasOut for EvalConfig {
    fn set_out(&mut self, out: PathBuf) {
        self.out = out;
    }
}

pub fn resolve_args(a: &EvalArgs) -> CliResult<EvalConfig> {
    resolve(&a.common, COMMAND, || {
        Ok(EvalConfig {
            embedding: required(&a.embedding, "embedding")?,
            labels: required(&a.labels, "labels")?,
            k: a.k,
            restarts: a.restarts,
            max_iter: a.max_iter,
            seed: a.seed,
            out: required(&a.common.out, "out")?,
        })
    })
}

pub fn execute(cfg: &EvalConfig) -> CliResult<EvalReport> {
    // read_matrix gives features × samples; k-means wants samples × features
    let z = read_matrix(&cfg.embedding)?.transpose();
    let labels = read_labels(&cfg.labels)?;
    if labels.len() != z.rows() {
        return Err(CliError::usage(format!(
            "{} labels for {} embedded samples",
            labels.len(),
            z.rows()
        )));
    }
    let k = cfg
        .k
        .unwrap_or_else(|| labels.iter().collect::<BTreeSet<_>>().len());
    if k == 0 || cfg.restarts == 0 {
        return Err(CliError::usage("k and restarts must be positive"));
    }
    if k > z.rows() {
        return Err(CliError::usage(format!("k = {k} exceeds {} samples", z.rows())));
    }
    begin_outputs(&cfg.out, COMMAND, cfg.seed, cfg)?;
    let res = kmeans(&z, k, cfg.restarts, cfg.max_iter, cfg.seed)?;
    let report = EvalReport {
        km_accuracy: clustering_accuracy(&res.assignment, &labels)?,
        mi: mutual_info(&res.assignment, &labels)?,
        inertia: res.inertia,
    };
    write_json(&cfg.out.join("report.json"), &report)?;
    Ok(report)
}
