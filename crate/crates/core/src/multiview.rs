//! Gated generalized CCA over K ≥ 2 views: a shared representation `G` with
//! orthonormal columns, per-view maps `U_k` and gated per-view networks.

use serde::{Deserialize, Serialize};

use crate::config::{GateInit, Penalty, TrainConfig};
use crate::data::DataMatrix;
use crate::deep::gate_rows;
use crate::error::{Error, Result};
use crate::gates::{
    self, deterministic_gates, expected_l0, expected_l0_grad, sample_gates, select, GateSample,
    GateVector, Selection,
};
use crate::mlp::{Activation, MlpCache, MlpParams};
use crate::numerics::{center_columns, dot, sym_eig, DenseMatrix, SeededRng};
use crate::optim::Stepper;

/// Relative eigenvalue cut below which `Σ M_k` is treated as rank deficient.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GccaState {
    /// `N×d`, orthonormal columns.
    pub g: DenseMatrix,
    /// One `d×d` map per view.
    pub u: Vec<DenseMatrix>,
    pub nets: Vec<MlpParams>,
    pub gates: Vec<GateVector>,
    /// Set when the last G update had to complete a rank-deficient basis.
    #[serde(default)]
    pub degenerate: bool,
}

/// Whether the per-view Frobenius distances enter the objective squared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrobeniusForm {
    #[default]
    Unsquared,
    Squared,
}

/// Per-view hidden and output widths; every view must end in the same width `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiviewArch {
    pub layers: Vec<Vec<usize>>,
    #[serde(default)]
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GccaEpochRecord {
    pub epoch: usize,
    /// Unsquared objective at the sampled gates, before the update.
    pub objective: f64,
    pub squared_objective: f64,
    pub expected_active: Vec<f64>,
    /// `max |GᵀG − I|` after this epoch's G update.
    pub orthogonality_error: f64,
}

impl MultiviewArch {
    pub fn output_dim(&self) -> Result<usize> {
        let mut d = None;
        for (k, l) in self.layers.iter().enumerate() {
            let w = *l
                .last()
                .ok_or_else(|| Error::Config(format!("view {k} has no layers")))?;
            match d {
                None => d = Some(w),
                Some(d0) if d0 != w => {
                    return Err(Error::Config(format!("view {k} outputs {w}, expected {d0}")))
                }
                _ => {}
            }
        }
        d.filter(|&d| d > 0)
            .ok_or_else(|| Error::Config("architecture lists no views".into()))
    }
}

impl GccaState {
    pub fn views(&self) -> usize {
        self.nets.len()
    }

    pub fn dim(&self) -> usize {
        self.g.cols()
    }

    pub fn selected(&self, mode: Selection) -> Vec<Vec<usize>> {
        self.gates.iter().map(|g| select(g, mode)).collect()
    }

    /// `max |GᵀG − I|`.
    pub fn orthogonality_error(&self) -> f64 {
        orthogonality_error(&self.g)
    }

    fn check(&self, views: &[DataMatrix], lambdas: &[f64]) -> Result<()> {
        let k = self.nets.len();
        if k < 2 {
            return Err(Error::Config(format!("need at least two views, got {k}")));
        }
        if self.u.len() != k || self.gates.len() != k || views.len() != k || lambdas.len() != k {
            return Err(Error::Shape(format!(
                "view count mismatch: {} nets, {} maps, {} gate vectors, {} views, {} lambdas",
                k,
                self.u.len(),
                self.gates.len(),
                views.len(),
                lambdas.len()
            )));
        }
        let (n, d) = self.g.shape();
        for (i, v) in views.iter().enumerate() {
            if v.samples() != n {
                return Err(Error::Shape(format!("view {i} has {} samples, G has {n}", v.samples())));
            }
            if v.dim() != self.gates[i].len() || v.dim() != self.nets[i].input_dim() {
                return Err(Error::Shape(format!(
                    "view {i} has {} features, model expects {}",
                    v.dim(),
                    self.gates[i].len()
                )));
            }
            if self.nets[i].output_dim() != d || self.u[i].shape() != (d, d) {
                return Err(Error::Shape(format!("view {i} does not map to d = {d}")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn orthogonality_error(g: &DenseMatrix) -> f64 {
    let mut gtg = g.t_matmul(g).expect("GᵀG is always defined");
    gtg.add_diag(-1.0);
    gtg.max_abs()
}

/// Makes the columns of `q` orthonormal in place (two passes of modified
/// Gram–Schmidt). Columns that vanish are replaced by the first standard
/// basis vectors not yet spanned. Returns true if any replacement happened.
fn orthonormalize_columns(q: &mut DenseMatrix) -> bool {
    let (n, d) = q.shape();
    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| q.col(j)).collect();
    let mut replaced = false;
    let mut next_basis = 0;
    for j in 0..d {
        loop {
            let before = dot(&cols[j], &cols[j]).sqrt();
            for _ in 0..2 {
                for i in 0..j {
                    let (done, rest) = cols.split_at_mut(j);
                    let c = dot(&done[i], &rest[0]);
                    rest[0].iter_mut().zip(&done[i]).for_each(|(v, b)| *v -= c * b);
                }
            }
            let norm = dot(&cols[j], &cols[j]).sqrt();
            if norm > 1e-10 * before.max(1e-300) && norm > 1e-300 {
                cols[j].iter_mut().for_each(|v| *v /= norm);
                break;
            }
            // complete deterministically from the standard basis
            replaced = true;
            let mut e = vec![0.0; n];
            e[next_basis % n] = 1.0;
            next_basis += 1;
            cols[j] = e;
        }
    }
    for (j, c) in cols.iter().enumerate() {
        q.set_col(j, c);
    }
    replaced
}

/// Orthonormal-column minimiser of `Σ_k ‖G − M_k‖²_F`: the polar factor of `Σ_k M_k`.
///
/// Returns `G` and whether the sum was rank deficient, in which case the
/// missing directions are completed deterministically.
pub fn update_g(projected: &[DenseMatrix]) -> Result<(DenseMatrix, bool)> {
    let first = projected
        .first()
        .ok_or_else(|| Error::Config("update needs at least one projected view".into()))?;
    let (n, d) = first.shape();
    if d > n {
        return Err(Error::Shape(format!("cannot fit {d} orthonormal columns in {n} rows")));
    }
    let mut m = DenseMatrix::zeros(n, d);
    for p in projected {
        if p.shape() != (n, d) {
            return Err(Error::Shape(format!("projected views differ: {:?} vs {:?}", p.shape(), (n, d))));
        }
        m.add_assign_scaled(1.0, p);
    }
    let eig = sym_eig(&m.t_matmul(&m)?.symmetrized())?;
    let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let v = &eig.vectors;
    // Q = M V Λ^{-1/2} on the numerically nonzero spectrum
    let mut q = m.matmul(v)?;
    let mut degenerate = false;
    for (j, &lam) in eig.values.iter().enumerate() {
        if lam > RANK_TOL * top && lam > 0.0 {
            let s = 1.0 / lam.sqrt();
            for i in 0..n {
                q[(i, j)] *= s;
            }
        } else {
            degenerate = true;
            for i in 0..n {
                q[(i, j)] = 0.0;
            }
        }
    }
    degenerate |= orthonormalize_columns(&mut q);
    Ok((q.matmul_t(v)?, degenerate))
}

/// Centered network output `F_k` (d×N) and its projection `M_k = F_kᵀU_k` (N×d).
struct ViewForward {
    f: DenseMatrix,
    m: DenseMatrix,
    cache: MlpCache,
}

fn forward_view(net: &MlpParams, u: &DenseMatrix, x: &DenseMatrix, z: &[f64]) -> Result<ViewForward> {
    let (f, cache) = net.forward(&gate_rows(x, z))?;
    let f = center_columns(&f)?;
    let m = f.t_matmul(u)?;
    Ok(ViewForward { f, m, cache })
}

fn penalties(gates: &[GateVector], lambdas: &[f64], penalty: Penalty) -> Vec<f64> {
    gates
        .iter()
        .zip(lambdas)
        .map(|(g, &l)| l * penalty.scale(g.len()) * expected_l0(g))
        .collect()
}

/// `Σ_k ‖G − (U_kᵀ f_k(z_k⊙X_k))ᵀ‖_F + λ_k·E‖z_k‖₀` at deterministic gates.
pub fn gcca_objective(
    s: &GccaState,
    views: &[DataMatrix],
    lambdas: &[f64],
    form: FrobeniusForm,
    penalty: Penalty,
) -> Result<f64> {
    s.check(views, lambdas)?;
    let mut total: f64 = penalties(&s.gates, lambdas, penalty).iter().sum();
    for (k, view) in views.iter().enumerate() {
        let z = deterministic_gates(&s.gates[k]).z;
        let fw = forward_view(&s.nets[k], &s.u[k], view.matrix(), &z)?;
        let dist2 = s.g.sub(&fw.m)?.frobenius_norm().powi(2);
        total += match form {
            FrobeniusForm::Unsquared => dist2.sqrt(),
            FrobeniusForm::Squared => dist2,
        };
    }
    Ok(total)
}

/// Projected outputs `M_k` at deterministic gates, one `N×d` matrix per view.
pub fn project_views(s: &GccaState, views: &[DataMatrix]) -> Result<Vec<DenseMatrix>> {
    views
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let z = deterministic_gates(&s.gates[k]).z;
            Ok(forward_view(&s.nets[k], &s.u[k], v.matrix(), &z)?.m)
        })
        .collect()
}

/// Network outputs (`d×N`, centered) at deterministic gates.
pub fn embed_views(s: &GccaState, views: &[DataMatrix]) -> Result<Vec<DenseMatrix>> {
    views
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let z = deterministic_gates(&s.gates[k]).z;
            Ok(forward_view(&s.nets[k], &s.u[k], v.matrix(), &z)?.f)
        })
        .collect()
}

fn init_gates(views: &[DataMatrix], cfg: &TrainConfig) -> Result<Vec<GateVector>> {
    match cfg.init {
        GateInit::Uniform { mu0 } => views
            .iter()
            .map(|v| gates::uniform_init(v.dim(), mu0, cfg.sigma))
            .collect(),
        GateInit::Covariance { percentile } if views.len() == 2 => {
            let init = gates::init_gates_from_cov(&views[0], &views[1], percentile, cfg.sigma)?;
            Ok(vec![init.gates_x, init.gates_y])
        }
        GateInit::Covariance { .. } => Err(Error::Config(
            "covariance gate initialisation needs exactly two views".into(),
        )),
    }
}

/// Alternating training: a gradient step on networks, maps and gate means
/// with `G` fixed, then the closed-form `G` update with everything else fixed.
///
/// Steps use the squared Frobenius distances, for which the `G` update is
/// exact; the recorded objective is the unsquared one.
pub fn train_l0dgcca(
    views: &[DataMatrix],
    arch: &MultiviewArch,
    cfg: &TrainConfig,
    lambdas: &[f64],
) -> Result<(GccaState, Vec<GccaEpochRecord>)> {
    cfg.validate()?;
    let k = views.len();
    if k < 2 {
        return Err(Error::Config(format!("need at least two views, got {k}")));
    }
    if arch.layers.len() != k || lambdas.len() != k {
        return Err(Error::Config(format!(
            "{k} views but {} architectures and {} lambdas",
            arch.layers.len(),
            lambdas.len()
        )));
    }
    if lambdas.iter().any(|&l| !(l >= 0.0)) {
        return Err(Error::Config(format!("lambdas must be >= 0, got {lambdas:?}")));
    }
    let n = views[0].samples();
    if views.iter().any(|v| v.samples() != n) {
        return Err(Error::Shape("views differ in sample count".into()));
    }
    let d = arch.output_dim()?;
    if d >= n {
        return Err(Error::Config(format!("output dimension {d} needs more than {n} samples")));
    }

    let mut rng = SeededRng::new(cfg.seed);
    let mut nets = Vec::with_capacity(k);
    for (v, layers) in views.iter().zip(&arch.layers) {
        let mut widths = vec![v.dim()];
        widths.extend_from_slice(layers);
        nets.push(MlpParams::new(&widths, arch.activation, &mut rng)?);
    }
    let gates = init_gates(views, cfg)?;
    let u = vec![DenseMatrix::identity(d); k];
    let mut state = GccaState {
        g: DenseMatrix::zeros(n, d),
        u,
        nets,
        gates,
        degenerate: false,
    };
    let (g, degenerate) = update_g(&project_views(&state, views)?)?;
    state.g = g;
    state.degenerate = degenerate;

    let mut step = Stepper::new(cfg.optimizer, cfg.lr);
    let mut slot0 = Vec::with_capacity(k);
    let mut next = 0;
    for net in &state.nets {
        slot0.push(next);
        next += net.slots() + 2;
    }
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let samples: Vec<GateSample> = state.gates.iter().map(|g| sample_gates(g, &mut rng)).collect();
        let pens = penalties(&state.gates, lambdas, cfg.penalty);
        let mut objective: f64 = pens.iter().sum();
        let mut squared: f64 = objective;
        step.begin();
        for v in 0..k {
            let fw = forward_view(&state.nets[v], &state.u[v], views[v].matrix(), &samples[v].z)?;
            let r = fw.m.sub(&state.g)?;
            let dist2 = r.frobenius_norm().powi(2);
            objective += dist2.sqrt();
            squared += dist2;

            // d/dF = 2·U·Rᵀ, d/dU = 2·F·R; centering backprop removes row means
            let d_f = center_columns(&state.u[v].matmul_t(&r)?.scale(2.0))?;
            let d_u = fw.f.matmul(&r)?.scale(2.0);
            let (net_grad, d_xhat) = state.nets[v].backward(&fw.cache, &d_f)?;
            let x = views[v].matrix();
            let weight = lambdas[v] * cfg.penalty.scale(state.gates[v].len());
            let mut d_mu: Vec<f64> = expected_l0_grad(&state.gates[v]).into_iter().map(|g| weight * g).collect();
            for (i, dm) in d_mu.iter_mut().enumerate() {
                let val = state.gates[v].mu[i] + samples[v].eps[i];
                if val > 0.0 && val < 1.0 {
                    *dm += dot(d_xhat.row(i), x.row(i));
                }
            }
            let slots = state.nets[v].slots();
            state.nets[v].descend(&net_grad, &mut step, slot0[v]);
            step.apply(slot0[v] + slots, state.u[v].as_mut_slice(), d_u.as_slice());
            step.apply(slot0[v] + slots + 1, &mut state.gates[v].mu, &d_mu);
        }
        if !objective.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                detail: format!("objective {objective} (squared {squared})"),
            });
        }
        let projected = (0..k)
            .map(|v| Ok(forward_view(&state.nets[v], &state.u[v], views[v].matrix(), &samples[v].z)?.m))
            .collect::<Result<Vec<_>>>()?;
        let (g, degenerate) = update_g(&projected)?;
        state.g = g;
        state.degenerate = degenerate;
        history.push(GccaEpochRecord {
            epoch,
            objective,
            squared_objective: squared,
            expected_active: state.gates.iter().map(expected_l0).collect(),
            orthogonality_error: state.orthogonality_error(),
        });
    }
    Ok((state, history))
}
