//! Gated deep CCA: two networks trained to maximise the total correlation of
//! their `d`-dimensional outputs under an expected-ℓ0 penalty on input gates.

use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::data::{check_paired, DataMatrix};
use crate::error::{Error, Result};
use crate::gates::{
    deterministic_gates, expected_l0, expected_l0_grad, sample_gates, select, GateSample,
    GateVector, Selection,
};
use crate::linear::init_gate_pair;
use crate::mlp::{Activation, MlpGrad, MlpParams};
use crate::numerics::{center_columns, spd_inverse, DenseMatrix, SeededRng};
use crate::optim::Stepper;

/// Network outputs for both views, `d×N` each.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingPair {
    pub psi_x: DenseMatrix,
    pub psi_y: DenseMatrix,
    /// True when rows are already mean-free; otherwise consumers center first.
    pub centered: bool,
}

impl EmbeddingPair {
    pub fn new(psi_x: DenseMatrix, psi_y: DenseMatrix, centered: bool) -> Result<Self> {
        if psi_x.shape() != psi_y.shape() {
            return Err(Error::Shape(format!(
                "embeddings differ in shape: {:?} vs {:?}",
                psi_x.shape(),
                psi_y.shape()
            )));
        }
        Ok(Self { psi_x, psi_y, centered })
    }

    pub fn dim(&self) -> usize {
        self.psi_x.rows()
    }

    pub fn samples(&self) -> usize {
        self.psi_x.cols()
    }

    fn centered_views(&self) -> Result<(DenseMatrix, DenseMatrix)> {
        if self.centered {
            Ok((self.psi_x.clone(), self.psi_y.clone()))
        } else {
            Ok((center_columns(&self.psi_x)?, center_columns(&self.psi_y)?))
        }
    }
}

/// Inverse covariances and cross-covariance of centered embeddings.
struct TcParts {
    a: DenseMatrix,
    b: DenseMatrix,
    s: DenseMatrix,
    n1: f64,
}

impl TcParts {
    fn new(px: &DenseMatrix, py: &DenseMatrix, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be >= 0, got {gamma}")));
        }
        let n = px.cols();
        if n < 2 {
            return Err(Error::InsufficientSamples { needed: 2, got: n });
        }
        let n1 = n as f64 - 1.0;
        let mut cx = px.matmul_t(px)?.scale(1.0 / n1);
        let mut cy = py.matmul_t(py)?.scale(1.0 / n1);
        cx.add_diag(gamma);
        cy.add_diag(gamma);
        Ok(Self {
            a: spd_inverse(&cx)?,
            b: spd_inverse(&cy)?,
            s: px.matmul_t(py)?.scale(1.0 / n1),
            n1,
        })
    }

    /// `A·S·B`, the d×d core shared by the value and the gradient.
    fn asb(&self) -> DenseMatrix {
        self.a.matmul(&self.s).and_then(|m| m.matmul(&self.b)).expect("square d×d factors")
    }
}

fn tc_value(asb: &DenseMatrix, s: &DenseMatrix) -> f64 {
    // tr(A S B Sᵀ)
    asb.as_slice().iter().zip(s.as_slice()).map(|(a, b)| a * b).sum()
}

/// Value and gradient of the total correlation for already centered embeddings.
fn tc_with_grad(px: &DenseMatrix, py: &DenseMatrix, gamma: f64) -> Result<(f64, DenseMatrix, DenseMatrix)> {
    let parts = TcParts::new(px, py, gamma)?;
    let asb = parts.asb();
    let value = tc_value(&asb, &parts.s);
    let c = 2.0 / parts.n1;
    // dT/dΨx = c·ASB·(Ψy − SᵀAΨx), dT/dΨy = c·(ASB)ᵀ·(Ψx − SBΨy)
    let sta = parts.s.t_matmul(&parts.a)?;
    let sb = parts.s.matmul(&parts.b)?;
    let rx = py.sub(&sta.matmul(px)?)?;
    let ry = px.sub(&sb.matmul(py)?)?;
    let gx = asb.matmul(&rx)?.scale(c);
    let gy = asb.t_matmul(&ry)?.scale(c);
    Ok((value, gx, gy))
}

/// `tr(Ĉy^{-1/2} Ĉyx Ĉx^{-1} Ĉxy Ĉy^{-1/2})` with ridge `gamma` on both
/// auto-covariances. Equals the sum of squared canonical correlations.
pub fn total_correlation(e: &EmbeddingPair, gamma: f64) -> Result<f64> {
    let (px, py) = e.centered_views()?;
    let parts = TcParts::new(&px, &py, gamma)?;
    Ok(tc_value(&parts.asb(), &parts.s))
}

/// Gradient of [`total_correlation`] with respect to every entry of Ψx and Ψy.
pub fn total_correlation_grad(e: &EmbeddingPair, gamma: f64) -> Result<(DenseMatrix, DenseMatrix)> {
    let (px, py) = e.centered_views()?;
    let (_, gx, gy) = tc_with_grad(&px, &py, gamma)?;
    Ok((gx, gy))
}

/// Layer widths after the input for each view; the final widths must agree and give `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepArch {
    pub layers_x: Vec<usize>,
    pub layers_y: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
}

impl DeepArch {
    pub fn new(layers_x: Vec<usize>, layers_y: Vec<usize>, activation: Activation) -> Self {
        Self { layers_x, layers_y, activation }
    }

    /// Shared output dimension `d`.
    pub fn output_dim(&self) -> Result<usize> {
        let dx = self.layers_x.last().copied().unwrap_or(0);
        let dy = self.layers_y.last().copied().unwrap_or(0);
        if dx == 0 || dy == 0 {
            return Err(Error::Config("each network needs at least an output layer".into()));
        }
        if dx != dy {
            return Err(Error::Config(format!("output widths differ: {dx} vs {dy}")));
        }
        Ok(dx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepCcaModel {
    pub net_x: MlpParams,
    pub net_y: MlpParams,
    pub gates_x: GateVector,
    pub gates_y: GateVector,
    /// Output means on the training set, used to center new embeddings.
    #[serde(default)]
    pub out_mean_x: Option<Vec<f64>>,
    #[serde(default)]
    pub out_mean_y: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepGrad {
    pub net_x: MlpGrad,
    pub net_y: MlpGrad,
    pub mu_x: Vec<f64>,
    pub mu_y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeepEpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub total_correlation: f64,
    pub expected_active_x: f64,
    pub expected_active_y: f64,
    pub val_total_correlation: Option<f64>,
}

impl DeepCcaModel {
    pub fn init(x: &DataMatrix, y: &DataMatrix, arch: &DeepArch, cfg: &TrainConfig, rng: &mut SeededRng) -> Result<Self> {
        let d = arch.output_dim()?;
        if d >= x.samples() {
            return Err(Error::Config(format!(
                "output dimension {d} needs more than {} samples",
                x.samples()
            )));
        }
        let widths = |input: usize, layers: &[usize]| {
            let mut w = vec![input];
            w.extend_from_slice(layers);
            w
        };
        let net_x = MlpParams::new(&widths(x.dim(), &arch.layers_x), arch.activation, rng)?;
        let net_y = MlpParams::new(&widths(y.dim(), &arch.layers_y), arch.activation, rng)?;
        let (gates_x, gates_y) = init_gate_pair(x, y, cfg)?;
        Ok(Self {
            net_x,
            net_y,
            gates_x,
            gates_y,
            out_mean_x: None,
            out_mean_y: None,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.net_x.output_dim()
    }

    pub fn check_shapes(&self, x: &DataMatrix, y: &DataMatrix) -> Result<()> {
        check_paired(x, y)?;
        if self.gates_x.len() != self.net_x.input_dim() || self.gates_y.len() != self.net_y.input_dim() {
            return Err(Error::Shape("gate lengths do not match network inputs".into()));
        }
        if self.net_x.output_dim() != self.net_y.output_dim() {
            return Err(Error::Shape("network output widths differ".into()));
        }
        if x.dim() != self.gates_x.len() || y.dim() != self.gates_y.len() {
            return Err(Error::Shape(format!(
                "model expects {}/{} features, data has {}/{}",
                self.gates_x.len(),
                self.gates_y.len(),
                x.dim(),
                y.dim()
            )));
        }
        Ok(())
    }

    pub fn selected(&self, mode: Selection) -> (Vec<usize>, Vec<usize>) {
        (select(&self.gates_x, mode), select(&self.gates_y, mode))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        if m.gates_x.len() != m.net_x.input_dim() || m.gates_y.len() != m.net_y.input_dim() {
            return Err(Error::Shape("gate lengths do not match network inputs".into()));
        }
        Ok(m)
    }
}

/// Scales row `i` of `x` by `z[i]`.
pub(crate) fn gate_rows(x: &DenseMatrix, z: &[f64]) -> DenseMatrix {
    let mut out = x.clone();
    for (i, &zi) in z.iter().enumerate() {
        if zi != 1.0 {
            out.row_mut(i).iter_mut().for_each(|v| *v *= zi);
        }
    }
    out
}

fn subtract_row_means(m: &mut DenseMatrix, means: &[f64]) {
    for (i, mu) in means.iter().enumerate() {
        m.row_mut(i).iter_mut().for_each(|v| *v -= mu);
    }
}

struct DeepEval {
    loss: f64,
    tc: f64,
    grad: Option<DeepGrad>,
}

fn gate_grad(dx: &DenseMatrix, x: &DenseMatrix, gates: &GateVector, sample: &GateSample, weight: f64) -> Vec<f64> {
    let mut d_mu: Vec<f64> = expected_l0_grad(gates).into_iter().map(|v| weight * v).collect();
    for (i, dm) in d_mu.iter_mut().enumerate() {
        let v = gates.mu[i] + sample.eps[i];
        if v > 0.0 && v < 1.0 {
            // d/dz_i of the data term: sum over samples of dL/dx̂ · x
            *dm += dx.row(i).iter().zip(x.row(i)).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    d_mu
}

fn evaluate(
    m: &DeepCcaModel,
    zx: &GateSample,
    zy: &GateSample,
    x: &DenseMatrix,
    y: &DenseMatrix,
    cfg: &TrainConfig,
    want_grad: bool,
) -> Result<DeepEval> {
    let (wx, wy) = cfg.penalty_weights(m.gates_x.len(), m.gates_y.len());
    let (px, cache_x) = m.net_x.forward(&gate_rows(x, &zx.z))?;
    let (py, cache_y) = m.net_y.forward(&gate_rows(y, &zy.z))?;
    let px = center_columns(&px)?;
    let py = center_columns(&py)?;
    let reg = wx * expected_l0(&m.gates_x) + wy * expected_l0(&m.gates_y);
    if !want_grad {
        let parts = TcParts::new(&px, &py, cfg.gamma)?;
        let tc = tc_value(&parts.asb(), &parts.s);
        return Ok(DeepEval { loss: -tc + reg, tc, grad: None });
    }
    let (tc, gx, gy) = tc_with_grad(&px, &py, cfg.gamma)?;
    // gx, gy have mean-free rows, so backprop through the centering is the identity.
    let (net_x, dxhat) = m.net_x.backward(&cache_x, &gx.scale(-1.0))?;
    let (net_y, dyhat) = m.net_y.backward(&cache_y, &gy.scale(-1.0))?;
    let mu_x = gate_grad(&dxhat, x, &m.gates_x, zx, wx);
    let mu_y = gate_grad(&dyhat, y, &m.gates_y, zy, wy);
    Ok(DeepEval {
        loss: -tc + reg,
        tc,
        grad: Some(DeepGrad { net_x, net_y, mu_x, mu_y }),
    })
}

/// `-T(f(zx⊙X), g(zy⊙Y)) + λx·E‖zx‖₀ + λy·E‖zy‖₀` for fixed gate samples.
pub fn l0dcca_loss(
    m: &DeepCcaModel,
    zx: &GateSample,
    zy: &GateSample,
    x: &DataMatrix,
    y: &DataMatrix,
    cfg: &TrainConfig,
) -> Result<f64> {
    m.check_shapes(x, y)?;
    Ok(evaluate(m, zx, zy, x.matrix(), y.matrix(), cfg, false)?.loss)
}

/// Analytic gradient of [`l0dcca_loss`] with respect to all weights, biases and gate means.
pub fn l0dcca_grad(
    m: &DeepCcaModel,
    zx: &GateSample,
    zy: &GateSample,
    x: &DataMatrix,
    y: &DataMatrix,
    cfg: &TrainConfig,
) -> Result<DeepGrad> {
    m.check_shapes(x, y)?;
    Ok(evaluate(m, zx, zy, x.matrix(), y.matrix(), cfg, true)?
        .grad
        .expect("gradient requested"))
}

fn forward_deterministic(m: &DeepCcaModel, x: &DenseMatrix, y: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let zx = deterministic_gates(&m.gates_x).z;
    let zy = deterministic_gates(&m.gates_y).z;
    Ok((m.net_x.apply(&gate_rows(x, &zx))?, m.net_y.apply(&gate_rows(y, &zy))?))
}

/// Embeds data through deterministic gates and both networks.
///
/// Outputs are centered with the stored training means when present, and
/// with their own means otherwise.
pub fn embed(m: &DeepCcaModel, x: &DataMatrix, y: &DataMatrix) -> Result<EmbeddingPair> {
    m.check_shapes(x, y)?;
    let (mut px, mut py) = forward_deterministic(m, x.matrix(), y.matrix())?;
    match (&m.out_mean_x, &m.out_mean_y) {
        (Some(mx), Some(my)) => {
            subtract_row_means(&mut px, mx);
            subtract_row_means(&mut py, my);
        }
        _ => {
            px = center_columns(&px)?;
            py = center_columns(&py)?;
        }
    }
    EmbeddingPair::new(px, py, true)
}

/// Total correlation of the deterministic-gate embedding of `(x, y)`, centered on itself.
pub fn evaluate_total_correlation(m: &DeepCcaModel, x: &DataMatrix, y: &DataMatrix, gamma: f64) -> Result<f64> {
    m.check_shapes(x, y)?;
    let (px, py) = forward_deterministic(m, x.matrix(), y.matrix())?;
    total_correlation(&EmbeddingPair::new(px, py, false)?, gamma)
}

/// Trains ℓ0-DCCA with one gate sample per step.
///
/// With `val`, the returned model is the state with the highest validation
/// total correlation over all epochs; otherwise the final state.
pub fn train_l0dcca(
    x: &DataMatrix,
    y: &DataMatrix,
    arch: &DeepArch,
    cfg: &TrainConfig,
    val: Option<(&DataMatrix, &DataMatrix)>,
) -> Result<(DeepCcaModel, Vec<DeepEpochRecord>)> {
    cfg.validate()?;
    check_paired(x, y)?;
    if let Some((vx, vy)) = val {
        check_paired(vx, vy)?;
        if vx.dim() != x.dim() || vy.dim() != y.dim() {
            return Err(Error::Shape("validation views differ in dimension from training".into()));
        }
    }
    let d = arch.output_dim()?;
    let batch = cfg.batch_size.filter(|&b| b < x.samples());
    if batch.is_some_and(|b| b <= d) {
        return Err(Error::Config(format!("batch size must exceed output dimension {d}")));
    }
    let mut rng = SeededRng::new(cfg.seed);
    let mut model = DeepCcaModel::init(x, y, arch, cfg, &mut rng)?;
    let mut step = Stepper::new(cfg.optimizer, cfg.lr);
    let slots_x = model.net_x.slots();
    let slots = slots_x + model.net_y.slots();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, DeepCcaModel)> = None;

    for epoch in 0..cfg.epochs {
        let val_tc = match val {
            Some((vx, vy)) => {
                let tc = evaluate_total_correlation(&model, vx, vy, cfg.gamma)?;
                if best.as_ref().is_none_or(|(b, _)| tc > *b) {
                    best = Some((tc, model.clone()));
                }
                Some(tc)
            }
            None => None,
        };
        let zx = sample_gates(&model.gates_x, &mut rng);
        let zy = sample_gates(&model.gates_y, &mut rng);
        let ev = match batch {
            Some(b) => {
                let idx = rng.sample_without_replacement(x.samples(), b);
                let xb = x.matrix().select_cols(&idx);
                let yb = y.matrix().select_cols(&idx);
                evaluate(&model, &zx, &zy, &xb, &yb, cfg, true)
            }
            None => evaluate(&model, &zx, &zy, x.matrix(), y.matrix(), cfg, true),
        };
        let ev = ev.map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => Error::NonFinite {
                epoch,
                detail: format!("output covariance not invertible: {e}"),
            },
            other => other,
        })?;
        if !ev.loss.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                detail: format!(
                    "loss {} (total correlation {}, open gates {}/{})",
                    ev.loss,
                    ev.tc,
                    zx.open_count(),
                    zy.open_count()
                ),
            });
        }
        history.push(DeepEpochRecord {
            epoch,
            loss: ev.loss,
            total_correlation: ev.tc,
            expected_active_x: expected_l0(&model.gates_x),
            expected_active_y: expected_l0(&model.gates_y),
            val_total_correlation: val_tc,
        });
        let g = ev.grad.expect("gradient requested");
        step.begin();
        model.net_x.descend(&g.net_x, &mut step, 0);
        model.net_y.descend(&g.net_y, &mut step, slots_x);
        step.apply(slots, &mut model.gates_x.mu, &g.mu_x);
        step.apply(slots + 1, &mut model.gates_y.mu, &g.mu_y);
    }

    if let Some((vx, vy)) = val {
        let tc = evaluate_total_correlation(&model, vx, vy, cfg.gamma)?;
        if best.as_ref().is_none_or(|(b, _)| tc > *b) {
            best = Some((tc, model.clone()));
        }
    }
    let mut model = match best {
        Some((_, m)) => m,
        None => model,
    };
    let (px, py) = forward_deterministic(&model, x.matrix(), y.matrix())?;
    model.out_mean_x = Some(px.row_means());
    model.out_mean_y = Some(py.row_means());
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::correlation;
    use crate::mlp::Layer;

    fn noise(d: usize, n: usize, rng: &mut SeededRng) -> DenseMatrix {
        DenseMatrix::from_fn(d, n, |_, _| rng.normal())
    }

    #[test]
    fn perfect_correlation_reaches_d() {
        let mut rng = SeededRng::new(1);
        let p = noise(3, 200, &mut rng);
        let e = EmbeddingPair::new(p.clone(), p, false).unwrap();
        let tc = total_correlation(&e, 1e-10).unwrap();
        assert!((tc - 3.0).abs() < 1e-6, "{tc}");
    }

    #[test]
    fn one_dimensional_case_is_squared_correlation() {
        let mut rng = SeededRng::new(2);
        let a = noise(1, 100, &mut rng);
        let b = a.add(&noise(1, 100, &mut rng)).unwrap();
        let e = EmbeddingPair::new(center_columns(&a).unwrap(), center_columns(&b).unwrap(), true).unwrap();
        let rho = correlation(e.psi_x.row(0), e.psi_y.row(0), 0.0);
        let tc = total_correlation(&e, 1e-9).unwrap();
        assert!((tc - rho * rho).abs() < 1e-7);
    }

    #[test]
    fn independent_noise_has_small_total_correlation() {
        let mut rng = SeededRng::new(3);
        let e = EmbeddingPair::new(noise(3, 5000, &mut rng), noise(3, 5000, &mut rng), false).unwrap();
        assert!(total_correlation(&e, 1e-4).unwrap() <= 0.3);
    }

    #[test]
    fn symmetric_under_view_swap() {
        let mut rng = SeededRng::new(4);
        let a = noise(3, 40, &mut rng);
        let b = a.scale(0.5).add(&noise(3, 40, &mut rng)).unwrap();
        let t1 = total_correlation(&EmbeddingPair::new(a.clone(), b.clone(), false).unwrap(), 1e-3).unwrap();
        let t2 = total_correlation(&EmbeddingPair::new(b, a, false).unwrap(), 1e-3).unwrap();
        assert!((t1 - t2).abs() < 1e-10);
    }

    #[test]
    fn gradient_annihilates_remixing_directions() {
        let mut rng = SeededRng::new(5);
        let a = noise(3, 30, &mut rng);
        let b = a.add(&noise(3, 30, &mut rng)).unwrap();
        let e = EmbeddingPair::new(a, b, false).unwrap();
        let (gx, gy) = total_correlation_grad(&e, 0.0).unwrap();
        let (px, py) = e.centered_views().unwrap();
        assert!(gx.matmul_t(&px).unwrap().max_abs() < 1e-6);
        assert!(gy.matmul_t(&py).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn gradient_vanishes_at_identical_views() {
        let mut rng = SeededRng::new(6);
        let p = center_columns(&noise(2, 25, &mut rng)).unwrap();
        let e = EmbeddingPair::new(p.clone(), p, true).unwrap();
        let (gx, gy) = total_correlation_grad(&e, 1e-12).unwrap();
        assert!(gx.frobenius_norm() < 1e-6 && gy.frobenius_norm() < 1e-6);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = SeededRng::new(7);
        let a = noise(2, 12, &mut rng);
        let b = a.scale(0.7).add(&noise(2, 12, &mut rng)).unwrap();
        let e = EmbeddingPair::new(a.clone(), b.clone(), false).unwrap();
        let (gx, _) = total_correlation_grad(&e, 1e-3).unwrap();
        let h = 1e-6;
        for k in 0..a.as_slice().len() {
            let mut up = a.clone();
            up.as_mut_slice()[k] += h;
            let mut down = a.clone();
            down.as_mut_slice()[k] -= h;
            let f = |m: DenseMatrix| total_correlation(&EmbeddingPair::new(m, b.clone(), false).unwrap(), 1e-3).unwrap();
            let fd = (f(up) - f(down)) / (2.0 * h);
            assert!((fd - gx.as_slice()[k]).abs() < 1e-6 * fd.abs().max(1.0));
        }
    }

    fn identity_model(d: usize) -> DeepCcaModel {
        let id = || {
            MlpParams::from_layers(
                vec![Layer { weight: DenseMatrix::identity(d), bias: vec![0.0; d] }],
                Activation::Linear,
            )
            .unwrap()
        };
        DeepCcaModel {
            net_x: id(),
            net_y: id(),
            gates_x: GateVector::new(vec![2.0; d], 0.5).unwrap(),
            gates_y: GateVector::new(vec![2.0; d], 0.5).unwrap(),
            out_mean_x: None,
            out_mean_y: None,
        }
    }

    #[test]
    fn identity_network_embeds_centered_inputs() {
        let mut rng = SeededRng::new(8);
        let x = DataMatrix::raw(noise(3, 10, &mut rng).map(|v| v + 4.0));
        let e = embed(&identity_model(3), &x, &x).unwrap();
        let c = center_columns(x.matrix()).unwrap();
        assert!(e.psi_x.sub(&c).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn zero_networks_embed_to_zero() {
        let mut m = identity_model(2);
        m.net_x = MlpParams::zeros(&[2, 3, 2], Activation::Tanh).unwrap();
        m.net_y = MlpParams::zeros(&[2, 2], Activation::Tanh).unwrap();
        let mut rng = SeededRng::new(9);
        let x = DataMatrix::raw(noise(2, 6, &mut rng));
        let e = embed(&m, &x, &x).unwrap();
        assert!(e.psi_x.max_abs() == 0.0 && e.psi_y.max_abs() == 0.0);
    }

    #[test]
    fn mismatched_output_widths_rejected() {
        let arch = DeepArch::new(vec![4, 2], vec![3], Activation::Tanh);
        assert!(arch.output_dim().is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let m = identity_model(2);
        let s = m.to_json().unwrap();
        assert_eq!(DeepCcaModel::from_json(&s).unwrap(), m);
    }
}
