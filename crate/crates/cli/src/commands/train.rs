use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use l0cca::deep::{embed, evaluate_total_correlation, train_l0dcca};
use l0cca::gates::expected_l0;
use l0cca::linear::{l0cca_objective, train_l0cca};
use l0cca::multiview::{embed_views, train_l0dgcca};
use l0cca::synth::{estimation_error, support_f1};
use l0cca::{DataMatrix, DeepArch, GroundTruth, MultiviewArch, TrainConfig};
use serde::{Deserialize, Serialize};

use super::{begin_outputs, parse_list, required, resolve, ActivationArg, CommonArgs, HasOut, TrainArgs};
use crate::error::{CliError, CliResult};
use crate::io::{read_json, read_view, write_json, write_jsonl, write_matrix};

/// Support-recovery scores against a truth file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub e_phi: f64,
    pub e_eta: f64,
    pub f1_x: f64,
    pub f1_y: f64,
}

fn read_truth(p: &Option<PathBuf>, dx: usize, dy: usize) -> CliResult<Option<GroundTruth>> {
    let Some(p) = p else { return Ok(None) };
    let t: GroundTruth = read_json(p)?;
    if t.phi.len() != dx || t.eta.len() != dy {
        return Err(CliError::data(
            p,
            format!("truth has dimensions {}/{}, data has {dx}/{dy}", t.phi.len(), t.eta.len()),
        ));
    }
    Ok(Some(t))
}

fn read_pair(x: &Path, y: &Path) -> CliResult<(DataMatrix, DataMatrix)> {
    let (x, y) = (read_view(x)?, read_view(y)?);
    if x.samples() != y.samples() {
        return Err(CliError::usage(format!(
            "views have {} and {} samples",
            x.samples(),
            y.samples()
        )));
    }
    Ok((x, y))
}

pub const LINEAR: &str = "train-linear";

#[derive(Debug, Clone, Args)]
pub struct TrainLinearArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub x: Option<PathBuf>,
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// truth.json from `gen`, for estimation errors and support F1.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainLinearConfig {
    pub x: PathBuf,
    pub y: PathBuf,
    #[serde(default)]
    pub truth: Option<PathBuf>,
    pub train: TrainConfig,
    pub out: PathBuf,
}

impl HasOut for TrainLinearConfig {
    fn set_out(&mut self, out: PathBuf) {
        self.out = out;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearReport {
    pub rho_hat: f64,
    pub objective: f64,
    pub expected_active_x: f64,
    pub expected_active_y: f64,
    pub selected_x: Vec<usize>,
    pub selected_y: Vec<usize>,
    pub recovery: Option<Recovery>,
    pub seconds: f64,
}

pub fn resolve_linear(a: &TrainLinearArgs) -> CliResult<TrainLinearConfig> {
    resolve(&a.common, LINEAR, || {
        Ok(TrainLinearConfig {
            x: required(&a.x, "x")?,
            y: required(&a.y, "y")?,
            truth: a.truth.clone(),
            train: a.train.apply(TrainConfig::linear_preset())?,
            out: required(&a.common.out, "out")?,
        })
    })
}

pub fn execute_linear(cfg: &TrainLinearConfig) -> CliResult<LinearReport> {
    cfg.train.validate()?;
    let (x, y) = read_pair(&cfg.x, &cfg.y)?;
    let truth = read_truth(&cfg.truth, x.dim(), y.dim())?;
    begin_outputs(&cfg.out, LINEAR, cfg.train.seed, cfg)?;

    let t0 = Instant::now();
    let (model, history) = train_l0cca(&x, &y, &cfg.train)?;
    let seconds = t0.elapsed().as_secs_f64();
    let (sx, sy) = model.selected();
    let (phi, eta) = model.canonical_vectors();
    let report = LinearReport {
        rho_hat: model.rho_hat(&x, &y, cfg.train.denom_eps),
        objective: l0cca_objective(&model, &model.gates_x.noiseless(), &model.gates_y.noiseless(), &x, &y, &cfg.train)?,
        expected_active_x: expected_l0(&model.gates_x),
        expected_active_y: expected_l0(&model.gates_y),
        recovery: truth.map(|t| Recovery {
            e_phi: estimation_error(&t.phi, &phi),
            e_eta: estimation_error(&t.eta, &eta),
            f1_x: support_f1(&t.support_phi, &sx),
            f1_y: support_f1(&t.support_eta, &sy),
        }),
        selected_x: sx,
        selected_y: sy,
        seconds,
    };
    write_json(&cfg.out.join("model.json"), &model)?;
    write_jsonl(&cfg.out.join("history.jsonl"), &history)?;
    write_json(&cfg.out.join("report.json"), &report)?;
    Ok(report)
}

pub const DEEP: &str = "train-deep";

#[derive(Debug, Clone, Args)]
pub struct TrainDeepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub x: Option<PathBuf>,
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// Validation views; the best-validation state is kept.
    #[arg(long, requires = "val_y")]
    pub val_x: Option<PathBuf>,
    #[arg(long, requires = "val_x")]
    pub val_y: Option<PathBuf>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Hidden widths, comma separated (empty for none).
    #[arg(long, default_value = "16")]
    pub hidden: String,
    /// Hidden widths for the Y network, if different.
    #[arg(long)]
    pub hidden_y: Option<String>,
    /// Embedding dimension d.
    #[arg(long, default_value_t = 1)]
    pub out_dim: usize,
    #[arg(long, value_enum, default_value = "tanh")]
    pub activation: ActivationArg,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainDeepConfig {
    pub x: PathBuf,
    pub y: PathBuf,
    #[serde(default)]
    pub val_x: Option<PathBuf>,
    #[serde(default)]
    pub val_y: Option<PathBuf>,
    #[serde(default)]
    pub truth: Option<PathBuf>,
    pub arch: DeepArch,
    pub train: TrainConfig,
    pub out: PathBuf,
}

impl HasOut for TrainDeepConfig {
    fn set_out(&mut self, out: PathBuf) {
        self.out = out;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepReport {
    pub total_correlation: f64,
    pub val_total_correlation: Option<f64>,
    pub expected_active_x: f64,
    pub expected_active_y: f64,
    pub selected_x: Vec<usize>,
    pub selected_y: Vec<usize>,
    pub f1_x: Option<f64>,
    pub f1_y: Option<f64>,
    pub seconds: f64,
}

fn layers(hidden: &str, out_dim: usize) -> CliResult<Vec<usize>> {
    let mut l: Vec<usize> = parse_list(hidden, "hidden width")?;
    l.push(out_dim);
    Ok(l)
}

pub fn resolve_deep(a: &TrainDeepArgs) -> CliResult<TrainDeepConfig> {
    resolve(&a.common, DEEP, || {
        let lx = layers(&a.hidden, a.out_dim)?;
        let ly = match &a.hidden_y {
            Some(h) => layers(h, a.out_dim)?,
            None => lx.clone(),
        };
        let arch = DeepArch::new(lx, ly, a.activation.into());
        arch.output_dim()?;
        Ok(TrainDeepConfig {
            x: required(&a.x, "x")?,
            y: required(&a.y, "y")?,
            val_x: a.val_x.clone(),
            val_y: a.val_y.clone(),
            truth: a.truth.clone(),
            arch,
            train: a.train.apply(TrainConfig::deep_default())?,
            out: required(&a.common.out, "out")?,
        })
    })
}

pub fn execute_deep(cfg: &TrainDeepConfig) -> CliResult<DeepReport> {
    cfg.train.validate()?;
    cfg.arch.output_dim()?;
    let (x, y) = read_pair(&cfg.x, &cfg.y)?;
    let val = match (&cfg.val_x, &cfg.val_y) {
        (Some(vx), Some(vy)) => Some(read_pair(vx, vy)?),
        (None, None) => None,
        _ => return Err(CliError::usage("validation needs both --val-x and --val-y")),
    };
    let truth = read_truth(&cfg.truth, x.dim(), y.dim())?;
    begin_outputs(&cfg.out, DEEP, cfg.train.seed, cfg)?;

    let t0 = Instant::now();
    let (model, history) = train_l0dcca(&x, &y, &cfg.arch, &cfg.train, val.as_ref().map(|(a, b)| (a, b)))?;
    let seconds = t0.elapsed().as_secs_f64();
    let (sx, sy) = model.selected(cfg.train.selection);
    let e = embed(&model, &x, &y)?;
    let report = DeepReport {
        total_correlation: evaluate_total_correlation(&model, &x, &y, cfg.train.gamma)?,
        val_total_correlation: match &val {
            Some((vx, vy)) => Some(evaluate_total_correlation(&model, vx, vy, cfg.train.gamma)?),
            None => None,
        },
        expected_active_x: expected_l0(&model.gates_x),
        expected_active_y: expected_l0(&model.gates_y),
        f1_x: truth.as_ref().map(|t| support_f1(&t.support_phi, &sx)),
        f1_y: truth.as_ref().map(|t| support_f1(&t.support_eta, &sy)),
        selected_x: sx,
        selected_y: sy,
        seconds,
    };
    write_json(&cfg.out.join("model.json"), &model)?;
    write_jsonl(&cfg.out.join("history.jsonl"), &history)?;
    write_matrix(&cfg.out.join("embed_x.csv"), &e.psi_x)?;
    write_matrix(&cfg.out.join("embed_y.csv"), &e.psi_y)?;
    write_json(&cfg.out.join("report.json"), &report)?;
    Ok(report)
}

pub const MULTIVIEW: &str = "train-multiview";

#[derive(Debug, Clone, Args)]
pub struct TrainMultiviewArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// One CSV per view, repeated.
    #[arg(long = "view")]
    pub views: Vec<PathBuf>,
    /// Hidden widths shared by every view network.
    #[arg(long, default_value = "16")]
    pub hidden: String,
    #[arg(long, default_value_t = 1)]
    pub out_dim: usize,
    #[arg(long, value_enum, default_value = "tanh")]
    pub activation: ActivationArg,
    /// Per-view λ, comma separated; overrides --lambda.
    #[arg(long)]
    pub lambdas: Option<String>,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainMultiviewConfig {
    pub views: Vec<PathBuf>,
    pub arch: MultiviewArch,
    pub lambdas: Vec<f64>,
    pub train: TrainConfig,
    pub out: PathBuf,
}

impl HasOut for TrainMultiviewConfig {
    fn set_out(&mut self, out: PathBuf) {
        self.out = out;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiviewReport {
    pub objective: f64,
    pub expected_active: Vec<f64>,
    pub selected: Vec<Vec<usize>>,
    pub max_orthogonality_error: f64,
    pub degenerate: bool,
    pub seconds: f64,
}

pub fn resolve_multiview(a: &TrainMultiviewArgs) -> CliResult<TrainMultiviewConfig> {
    resolve(&a.common, MULTIVIEW, || {
        if a.views.len() < 2 {
            return Err(CliError::usage("need at least two --view files"));
        }
        let k = a.views.len();
        let train = a.train.apply(TrainConfig::deep_default())?;
        let lambdas = match &a.lambdas {
            Some(s) => parse_list::<f64>(s, "lambda")?,
            None => vec![a.train.lambda.unwrap_or(train.lambda_x); k],
        };
        if lambdas.len() != k {
            return Err(CliError::usage(format!("{k} views but {} lambdas", lambdas.len())));
        }
        let l = layers(&a.hidden, a.out_dim)?;
        Ok(TrainMultiviewConfig {
            views: a.views.clone(),
            arch: MultiviewArch {
                layers: vec![l; k],
                activation: a.activation.into(),
            },
            lambdas,
            train,
            out: required(&a.common.out, "out")?,
        })
    })
}

pub fn execute_multiview(cfg: &TrainMultiviewConfig) -> CliResult<MultiviewReport> {
    cfg.train.validate()?;
    let views = cfg.views.iter().map(|p| read_view(p)).collect::<CliResult<Vec<_>>>()?;
    if views.iter().any(|v| v.samples() != views[0].samples()) {
        return Err(CliError::usage("views differ in sample count"));
    }
    if cfg.arch.layers.len() != views.len() || cfg.lambdas.len() != views.len() {
        return Err(CliError::usage("architecture and lambdas must have one entry per view"));
    }
    begin_outputs(&cfg.out, MULTIVIEW, cfg.train.seed, cfg)?;

    let t0 = Instant::now();
    let (state, history) = train_l0dgcca(&views, &cfg.arch, &cfg.train, &cfg.lambdas)?;
    let seconds = t0.elapsed().as_secs_f64();
    let last = history.last();
    let report = MultiviewReport {
        objective: last.map_or(f64::NAN, |r| r.objective),
        expected_active: state.gates.iter().map(expected_l0).collect(),
        selected: state.selected(cfg.train.selection),
        max_orthogonality_error: history.iter().map(|r| r.orthogonality_error).fold(0.0, f64::max),
        degenerate: state.degenerate,
        seconds,
    };
    write_json(&cfg.out.join("state.json"), &state)?;
    write_jsonl(&cfg.out.join("history.jsonl"), &history)?;
    for (k, f) in embed_views(&state, &views)?.iter().enumerate() {
        write_matrix(&cfg.out.join(format!("embed_{k}.csv")), f)?;
    }
    write_json(&cfg.out.join("report.json"), &report)?;
    Ok(report)
}
