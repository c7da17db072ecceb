use std::path::PathBuf;

use clap::Args;
use l0cca::synth::{generate, shared_latent_toy};
use l0cca::{CovarianceModel, GroundTruth, SyntheticSpec};
use serde::{Deserialize, Serialize};

use super::{begin_outputs, required, resolve, CommonArgs, HasOut};
use crate::error::{CliError, CliResult};
use crate::io::{write_json, write_matrix};

pub const COMMAND: &str = "gen";

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Covariance model I, II or III, or `latent` for the nonlinear shared-latent toy.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Features per view (for `latent`: one informative feature plus distractors).
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub rho0: Option<f64>,
    /// Nonzeros per canonical vector.
    #[arg(long)]
    pub sparsity: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model III: use the diagonal-only precision matrix.
    #[arg(long)]
    pub literal_gamma: bool,
    /// Noise on the informative Y feature of the latent toy.
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentSpec {
    pub n: usize,
    pub distractors: usize,
    pub noise: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Gaussian(SyntheticSpec),
    Latent(LatentSpec),
}

impl DataSource {
    pub fn seed(&self) -> u64 {
        match self {
            DataSource::Gaussian(s) => s.seed,
            DataSource::Latent(s) => s.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub source: DataSource,
    pub out: PathBuf,
}

impl HasOut for GenConfig {
    fn set_out(&mut self, out: PathBuf) {
        self.out = out;
    }
}

pub fn resolve_args(a: &GenArgs) -> CliResult<GenConfig> {
    resolve(&a.common, COMMAND, || {
        let model = required(&a.model, "model")?;
        let n = required(&a.n, "n")?;
        let d = required(&a.d, "d")?;
        let out = required(&a.common.out, "out")?;
        let source = if model == "latent" {
            if d < 1 {
                return Err(CliError::usage("--d must be at least 1"));
            }
            DataSource::Latent(LatentSpec {
                n,
                distractors: d - 1,
                noise: a.noise.unwrap_or(0.05),
                seed: a.seed,
            })
        } else {
            let m: CovarianceModel = model.parse().map_err(|e: l0cca::Error| CliError::usage(e.to_string()))?;
            let mut spec = SyntheticSpec::new(m, n, d, a.seed);
            if let Some(r) = a.rho0 {
                spec.rho0 = r;
            }
            if let Some(k) = a.sparsity {
                spec.sparsity_k = k;
            }
            spec.literal_gamma = a.literal_gamma;
            spec.validate()?;
            DataSource::Gaussian(spec)
        };
        Ok(GenConfig { source, out })
    })
}

pub fn execute(cfg: &GenConfig) -> CliResult<GroundTruth> {
    if let DataSource::Gaussian(spec) = &cfg.source {
        spec.validate()?;
    }
    let (x, y, truth) = match &cfg.source {
        DataSource::Gaussian(spec) => generate(spec)?,
        DataSource::Latent(s) => {
            let toy = shared_latent_toy(s.n, s.distractors, s.noise, s.seed)?;
            let d = s.distractors + 1;
            let indicator = |idx: &[usize]| {
                let mut v = vec![0.0; d];
                idx.iter().for_each(|&i| v[i] = 1.0);
                v
            };
            let truth = GroundTruth {
                phi: indicator(&toy.informative_x),
                eta: indicator(&toy.informative_y),
                support_phi: toy.informative_x.clone(),
                support_eta: toy.informative_y.clone(),
            };
            (toy.x, toy.y, truth)
        }
    };
    begin_outputs(&cfg.out, COMMAND, cfg.source.seed(), cfg)?;
    write_matrix(&cfg.out.join("X.csv"), x.matrix())?;
    write_matrix(&cfg.out.join("Y.csv"), y.matrix())?;
    write_json(&cfg.out.join("truth.json"), &truth)?;
    Ok(truth)
}
