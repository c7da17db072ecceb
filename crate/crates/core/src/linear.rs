//! Classical regularised CCA and the gated (ℓ0) linear CCA trainer.

use serde::{Deserialize, Serialize};

use crate::config::{GateInit, TrainConfig};
use crate::data::{check_paired, DataMatrix};
use crate::error::{Error, Result};
use crate::gates::{
    self, deterministic_gates, expected_l0, expected_l0_grad, sample_gates, GateSample,
    GateVector,
};
use crate::numerics::{
    axpy, cholesky, dot, leading_singular_pair, norm2, normalize, solve_lower_mat, solve_lower_t,
    DenseMatrix, SeededRng,
};

/// Linear ℓ0-CCA state: canonical weights and one gate vector per view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearCcaModel {
    pub theta_x: Vec<f64>,
    pub theta_y: Vec<f64>,
    pub gates_x: GateVector,
    pub gates_y: GateVector,
}

/// Gradient of the linear objective, in model-parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrad {
    pub theta_x: Vec<f64>,
    pub theta_y: Vec<f64>,
    pub mu_x: Vec<f64>,
    pub mu_y: Vec<f64>,
}

/// One epoch of training history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub objective: f64,
    pub rho: f64,
    pub expected_active_x: f64,
    pub expected_active_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub lambda: f64,
    pub expected_active_x: f64,
    pub expected_active_y: f64,
    pub rho_hat: f64,
    pub selected_x: Vec<usize>,
    pub selected_y: Vec<usize>,
}

/// Result of [`classical_cca`]: unit-norm canonical vectors and their correlation.
#[derive(Debug, Clone)]
pub struct ClassicalCca {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub rho: f64,
}

/// Sample correlation `uᵀv / (‖u‖‖v‖ + eps)` of two centred variates.
///
/// Returns zero when both vectors vanish.
pub fn correlation(u: &[f64], v: &[f64], denom_eps: f64) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let den = norm2(u) * norm2(v) + denom_eps;
    if den == 0.0 {
        return 0.0;
    }
    dot(u, v) / den
}

/// Projection `wᵀX` over samples.
pub fn project(w: &[f64], x: &DenseMatrix) -> Vec<f64> {
    let mut p = vec![0.0; x.cols()];
    for (i, &wi) in w.iter().enumerate() {
        if wi != 0.0 {
            axpy(wi, x.row(i), &mut p);
        }
    }
    p
}

fn covariance(x: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
    let n = x.cols() as f64;
    Ok(x.matmul_t(y)?.scale(1.0 / (n - 1.0)))
}

/// Regularised CCA: the top canonical pair of `(C_x+γI)^{-1} C_xy (C_y+γI)^{-1} C_yx`.
///
/// Both covariances are whitened through their Cholesky factors and the
/// leading singular pair of the whitened cross-covariance is mapped back.
/// The sign of `b` is chosen so that `rho >= 0`.
pub fn classical_cca(x: &DataMatrix, y: &DataMatrix, gamma: f64) -> Result<ClassicalCca> {
    check_paired(x, y)?;
    let (xm, ym) = (x.matrix(), y.matrix());
    let mut cx = covariance(xm, xm)?.symmetrized();
    let mut cy = covariance(ym, ym)?.symmetrized();
    cx.add_diag(gamma);
    cy.add_diag(gamma);
    let cxy = covariance(xm, ym)?;
    let lx = cholesky(&cx)?;
    let ly = cholesky(&cy)?;

    // K = Lx^{-1} Cxy Ly^{-T}
    let left = solve_lower_mat(&lx, &cxy);
    let k = solve_lower_mat(&ly, &left.transpose()).transpose();
    let pair = leading_singular_pair(&k)?;

    let mut a = solve_lower_t(&lx, &pair.u);
    let mut b = solve_lower_t(&ly, &pair.v);
    normalize(&mut a);
    normalize(&mut b);
    let mut rho = correlation(&project(&a, xm), &project(&b, ym), 0.0);
    if rho < 0.0 {
        b.iter_mut().for_each(|v| *v = -*v);
        rho = -rho;
    }
    Ok(ClassicalCca { a, b, rho })
}

impl LinearCcaModel {
    /// Random weights `N(0, 1/D)` and gates set up per `cfg.init`.
    pub fn init(x: &DataMatrix, y: &DataMatrix, cfg: &TrainConfig, rng: &mut SeededRng) -> Result<Self> {
        let theta_x = random_weights(x.dim(), rng);
        let theta_y = random_weights(y.dim(), rng);
        let (gates_x, gates_y) = init_gate_pair(x, y, cfg)?;
        Ok(Self {
            theta_x,
            theta_y,
            gates_x,
            gates_y,
        })
    }

    /// Estimated canonical vectors `θ ⊙ clamp(μ, 0, 1)`.
    pub fn canonical_vectors(&self) -> (Vec<f64>, Vec<f64>) {
        let gx = deterministic_gates(&self.gates_x);
        let gy = deterministic_gates(&self.gates_y);
        (
            self.theta_x.iter().zip(&gx.z).map(|(t, z)| t * z).collect(),
            self.theta_y.iter().zip(&gy.z).map(|(t, z)| t * z).collect(),
        )
    }

    /// Correlation of the deterministic-gate projections on `(x, y)`.
    pub fn rho_hat(&self, x: &DataMatrix, y: &DataMatrix, denom_eps: f64) -> f64 {
        let (phi, eta) = self.canonical_vectors();
        correlation(&project(&phi, x.matrix()), &project(&eta, y.matrix()), denom_eps)
    }

    pub fn selected(&self) -> (Vec<usize>, Vec<usize>) {
        (
            deterministic_gates(&self.gates_x).selected,
            deterministic_gates(&self.gates_y).selected,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    fn check_shapes(&self, x: &DataMatrix, y: &DataMatrix) -> Result<()> {
        check_paired(x, y)?;
        if self.theta_x.len() != x.dim()
            || self.gates_x.len() != x.dim()
            || self.theta_y.len() != y.dim()
            || self.gates_y.len() != y.dim()
        {
            return Err(Error::Shape(format!(
                "model is {}/{} but data is {}/{}",
                self.theta_x.len(),
                self.theta_y.len(),
                x.dim(),
                y.dim()
            )));
        }
        Ok(())
    }
}

pub(crate) fn random_weights(dim: usize, rng: &mut SeededRng) -> Vec<f64> {
    let scale = 1.0 / (dim as f64).sqrt();
    (0..dim).map(|_| scale * rng.normal()).collect()
}

pub(crate) fn init_gate_pair(
    x: &DataMatrix,
    y: &DataMatrix,
    cfg: &TrainConfig,
) -> Result<(GateVector, GateVector)> {
    match cfg.init {
        GateInit::Uniform { mu0 } => Ok((
            gates::uniform_init(x.dim(), mu0, cfg.sigma)?,
            gates::uniform_init(y.dim(), mu0, cfg.sigma)?,
        )),
        GateInit::Covariance { percentile } => {
            let init = gates::init_gates_from_cov(x, y, percentile, cfg.sigma)?;
            Ok((init.gates_x, init.gates_y))
        }
    }
}

/// Per-view working state for one objective evaluation.
struct ViewPass {
    proj: Vec<f64>,
    active: Vec<usize>,
}

fn forward_view(theta: &[f64], z: &[f64], x: &DenseMatrix) -> ViewPass {
    let mut proj = vec![0.0; x.cols()];
    let mut active = Vec::new();
    for (i, (&t, &zi)) in theta.iter().zip(z).enumerate() {
        if zi > 0.0 {
            active.push(i);
            let a = t * zi;
            if a != 0.0 {
                axpy(a, x.row(i), &mut proj);
            }
        }
    }
    ViewPass { proj, active }
}

struct Evaluation {
    objective: f64,
    rho: f64,
    grad: Option<LinearGrad>,
}

fn evaluate(
    m: &LinearCcaModel,
    zx: &GateSample,
    zy: &GateSample,
    x: &DenseMatrix,
    y: &DenseMatrix,
    cfg: &TrainConfig,
    want_grad: bool,
) -> Evaluation {
    let px = forward_view(&m.theta_x, &zx.z, x);
    let py = forward_view(&m.theta_y, &zy.z, y);
    let np = norm2(&px.proj);
    let nq = norm2(&py.proj);
    let num = dot(&px.proj, &py.proj);
    let den = np * nq + cfg.denom_eps;
    let rho = if den == 0.0 { 0.0 } else { num / den };
    let (wx, wy) = cfg.penalty_weights(m.gates_x.len(), m.gates_y.len());
    let reg = wx * expected_l0(&m.gates_x) + wy * expected_l0(&m.gates_y);
    let objective = -rho + reg;
    if !want_grad {
        return Evaluation {
            objective,
            rho,
            grad: None,
        };
    }

    // d rho / d proj_x = q/den - num/den² · nq · p/np   (and symmetrically)
    let n = x.cols();
    let mut gp = vec![0.0; n];
    let mut gq = vec![0.0; n];
    if den > 0.0 {
        let c = num / (den * den);
        let cp = if np > 0.0 { c * nq / np } else { 0.0 };
        let cq = if nq > 0.0 { c * np / nq } else { 0.0 };
        for s in 0..n {
            gp[s] = py.proj[s] / den - cp * px.proj[s];
            gq[s] = px.proj[s] / den - cq * py.proj[s];
        }
    }

    let back = |theta: &[f64],
                gates: &GateVector,
                sample: &GateSample,
                pass: &ViewPass,
                data: &DenseMatrix,
                g: &[f64],
                lambda: f64|
     -> (Vec<f64>, Vec<f64>) {
        let dim = theta.len();
        let mut d_theta = vec![0.0; dim];
        let mut d_mu: Vec<f64> = expected_l0_grad(gates).into_iter().map(|v| lambda * v).collect();
        for &i in &pass.active {
            // d rho / d a_i where a = θ ⊙ z
            let ga = dot(data.row(i), g);
            d_theta[i] = -sample.z[i] * ga;
            let v = gates.mu[i] + sample.eps[i];
            if v > 0.0 && v < 1.0 {
                d_mu[i] -= theta[i] * ga;
            }
        }
        (d_theta, d_mu)
    };
    let (theta_x, mu_x) = back(&m.theta_x, &m.gates_x, zx, &px, x, &gp, wx);
    let (theta_y, mu_y) = back(&m.theta_y, &m.gates_y, zy, &py, y, &gq, wy);
    Evaluation {
        objective,
        rho,
        grad: Some(LinearGrad {
            theta_x,
            theta_y,
            mu_x,
            mu_y,
        }),
    }
}

/// `-ρ((θx⊙zx)ᵀX, (θy⊙zy)ᵀY) + λx·E‖zx‖₀ + λy·E‖zy‖₀`.
///
/// The correlation uses the sampled gates, the regulariser its closed-form
/// expectation scaled per [`Penalty`](crate::config::Penalty).
pub fn l0cca_objective(
    m: &LinearCcaModel,
    zx: &GateSample,
    zy: &GateSample,
    x: &DataMatrix,
    y: &DataMatrix,
    cfg: &TrainConfig,
) -> Result<f64> {
    m.check_shapes(x, y)?;
    Ok(evaluate(m, zx, zy, x.matrix(), y.matrix(), cfg, false).objective)
}

/// Analytic gradient of [`l0cca_objective`] with respect to θ and μ.
pub fn l0cca_grad(
    m: &LinearCcaModel,
    zx: &GateSample,
    zy: &GateSample,
    x: &DataMatrix,
    y: &DataMatrix,
    cfg: &TrainConfig,
) -> Result<LinearGrad> {
    m.check_shapes(x, y)?;
    Ok(evaluate(m, zx, zy, x.matrix(), y.matrix(), cfg, true)
        .grad
        .expect("gradient requested"))
}

/// Full-batch gradient descent on the gated objective, one gate sample per step.
pub fn train_l0cca(
    x: &DataMatrix,
    y: &DataMatrix,
    cfg: &TrainConfig,
) -> Result<(LinearCcaModel, Vec<EpochRecord>)> {
    cfg.validate()?;
    check_paired(x, y)?;
    let mut rng = SeededRng::new(cfg.seed);
    let model = LinearCcaModel::init(x, y, cfg, &mut rng)?;
    train_from(model, x, y, cfg, &mut rng)
}

/// Continues training from a given model state.
pub fn train_from(
    mut model: LinearCcaModel,
    x: &DataMatrix,
    y: &DataMatrix,
    cfg: &TrainConfig,
    rng: &mut SeededRng,
) -> Result<(LinearCcaModel, Vec<EpochRecord>)> {
    model.check_shapes(x, y)?;
    let (xm, ym) = (x.matrix(), y.matrix());
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let zx = sample_gates(&model.gates_x, rng);
        let zy = sample_gates(&model.gates_y, rng);
        let ev = evaluate(&model, &zx, &zy, xm, ym, cfg, true);
        if !ev.objective.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                detail: format!(
                    "objective {} (rho {}, open gates {}/{})",
                    ev.objective,
                    ev.rho,
                    zx.open_count(),
                    zy.open_count()
                ),
            });
        }
        history.push(EpochRecord {
            epoch,
            objective: ev.objective,
            rho: ev.rho,
            expected_active_x: expected_l0(&model.gates_x),
            expected_active_y: expected_l0(&model.gates_y),
        });
        let g = ev.grad.expect("gradient requested");
        axpy(-cfg.lr, &g.theta_x, &mut model.theta_x);
        axpy(-cfg.lr, &g.theta_y, &mut model.theta_y);
        axpy(-cfg.lr, &g.mu_x, &mut model.gates_x.mu);
        axpy(-cfg.lr, &g.mu_y, &mut model.gates_y.mu);
    }
    Ok((model, history))
}

/// A trained path point with its model.
#[derive(Debug, Clone)]
pub struct PathPoint {
    pub record: PathRecord,
    pub model: LinearCcaModel,
}

/// Trains one model per λ (applied to both views) from the same seed.
pub fn regularization_path(
    x: &DataMatrix,
    y: &DataMatrix,
    lambdas: &[f64],
    cfg: &TrainConfig,
) -> Result<Vec<PathRecord>> {
    lambdas
        .iter()
        .map(|&l| path_point(x, y, l, cfg).map(|p| p.record))
        .collect::<Result<_>>()
}

/// Trains and summarises a single point of the regularisation path.
pub fn path_point(x: &DataMatrix, y: &DataMatrix, lambda: f64, cfg: &TrainConfig) -> Result<PathPoint> {
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be non-negative, got {lambda}")));
    }
    let cfg = TrainConfig {
        lambda_x: lambda,
        lambda_y: lambda,
        ..cfg.clone()
    };
    let (model, _) = train_l0cca(x, y, &cfg)?;
    let (selected_x, selected_y) = model.selected();
    let record = PathRecord {
        lambda,
        expected_active_x: expected_l0(&model.gates_x),
        expected_active_y: expected_l0(&model.gates_y),
        rho_hat: model.rho_hat(x, y, cfg.denom_eps),
        selected_x,
        selected_y,
    };
    Ok(PathPoint { record, model })
}

pub fn check_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::Config("lambda grid is empty".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Penalty;

    fn noise(d: usize, n: usize, rng: &mut SeededRng) -> DenseMatrix {
        DenseMatrix::from_fn(d, n, |_, _| rng.normal())
    }

    /// Two views sharing one latent on their first coordinates.
    fn shared_signal(d: usize, n: usize, seed: u64) -> (DataMatrix, DataMatrix) {
        let mut rng = SeededRng::new(seed);
        let t: Vec<f64> = rng.normals(n);
        let mut x = noise(d, n, &mut rng);
        let mut y = noise(d, n, &mut rng);
        for s in 0..n {
            x[(0, s)] += 2.0 * t[s];
            y[(0, s)] += 2.0 * t[s];
        }
        (
            DataMatrix::centered(x).unwrap(),
            DataMatrix::centered(y).unwrap(),
        )
    }

    fn open_model(d: usize, seed: u64) -> LinearCcaModel {
        let mut rng = SeededRng::new(seed);
        LinearCcaModel {
            theta_x: rng.normals(d),
            theta_y: rng.normals(d),
            gates_x: GateVector::new(vec![5.0; d], 0.25).unwrap(),
            gates_y: GateVector::new(vec![5.0; d], 0.25).unwrap(),
        }
    }

    #[test]
    fn correlation_examples() {
        let u = [1.0, -2.0, 0.5];
        let neg: Vec<f64> = u.iter().map(|v| -v).collect();
        assert!((correlation(&u, &u, 1e-12) - 1.0).abs() < 1e-11);
        assert!((correlation(&u, &neg, 1e-12) + 1.0).abs() < 1e-11);
        assert_eq!(correlation(&[1.0, -1.0], &[1.0, 1.0], 1e-12), 0.0);
        assert_eq!(correlation(&[0.0, 0.0], &[0.0, 0.0], 1e-12), 0.0);
        let scaled: Vec<f64> = u.iter().map(|v| 7.5 * v).collect();
        let w = [0.3, 0.1, -2.0];
        assert!((correlation(&scaled, &w, 0.0) - correlation(&u, &w, 0.0)).abs() < 1e-14);
    }

    #[test]
    fn classical_self_correlation() {
        let mut rng = SeededRng::new(1);
        let x = DataMatrix::centered(noise(5, 100, &mut rng)).unwrap();
        let c = classical_cca(&x, &x.clone(), 1e-8).unwrap();
        assert!(c.rho >= 0.99);
    }

    #[test]
    fn classical_matches_two_by_two_oracle() {
        let (x, y) = shared_signal(2, 300, 4);
        let gamma = 1e-3;
        let c = classical_cca(&x, &y, gamma).unwrap();

        // Oracle: top eigenvector of M = Cx^{-1} Cxy Cy^{-1} Cyx by the 2x2 closed form.
        let n = 299.0;
        let cov = |a: &DenseMatrix, b: &DenseMatrix| a.matmul_t(b).unwrap().scale(1.0 / n);
        let inv2 = |m: &DenseMatrix| {
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            DenseMatrix::from_rows(&[[m[(1, 1)] / det, -m[(0, 1)] / det], [-m[(1, 0)] / det, m[(0, 0)] / det]])
                .unwrap()
        };
        let mut cx = cov(x.matrix(), x.matrix());
        let mut cy = cov(y.matrix(), y.matrix());
        cx.add_diag(gamma);
        cy.add_diag(gamma);
        let cxy = cov(x.matrix(), y.matrix());
        let m = inv2(&cx)
            .matmul(&cxy)
            .unwrap()
            .matmul(&inv2(&cy))
            .unwrap()
            .matmul(&cxy.transpose())
            .unwrap();
        let (a, b, cc, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let tr = a + d;
        let det = a * d - b * cc;
        let l1 = tr / 2.0 + (tr * tr / 4.0 - det).sqrt();
        let mut v = vec![b, l1 - a];
        normalize(&mut v);
        let align = (v[0] * c.a[0] + v[1] * c.a[1]).abs();
        assert!((align - 1.0).abs() < 1e-8, "alignment {align}");
        // rho² equals the top eigenvalue up to the ridge term.
        assert!((c.rho * c.rho - l1).abs() < 1e-2);
    }

    #[test]
    fn objective_reduces_to_correlation() {
        let (x, y) = shared_signal(4, 80, 2);
        let m = open_model(4, 3);
        let cfg = TrainConfig {
            lambda_x: 0.0,
            lambda_y: 0.0,
            ..TrainConfig::default()
        };
        let zx = m.gates_x.noiseless();
        let zy = m.gates_y.noiseless();
        let obj = l0cca_objective(&m, &zx, &zy, &x, &y, &cfg).unwrap();
        let rho = correlation(
            &project(&m.theta_x, x.matrix()),
            &project(&m.theta_y, y.matrix()),
            cfg.denom_eps,
        );
        assert!((obj + rho).abs() < 1e-14);
    }

    #[test]
    fn objective_all_closed_is_regulariser_only() {
        let (x, y) = shared_signal(3, 50, 5);
        let mut m = open_model(3, 1);
        m.gates_x.mu = vec![-2.0; 3];
        m.gates_y.mu = vec![-2.0; 3];
        let cfg = TrainConfig {
            lambda_x: 1.0,
            lambda_y: 1.0,
            penalty: Penalty::Sum,
            ..TrainConfig::default()
        };
        let zx = m.gates_x.noiseless();
        let zy = m.gates_y.noiseless();
        let obj = l0cca_objective(&m, &zx, &zy, &x, &y, &cfg).unwrap();
        let reg = expected_l0(&m.gates_x) + expected_l0(&m.gates_y);
        assert!((obj - reg).abs() < 1e-15);
    }

    #[test]
    fn objective_compositional_oracle() {
        let (x, y) = shared_signal(5, 60, 8);
        let mut rng = SeededRng::new(12);
        let m = LinearCcaModel {
            theta_x: rng.normals(5),
            theta_y: rng.normals(5),
            gates_x: GateVector::new(vec![0.3, 0.8, -0.1, 0.5, 1.2], 0.25).unwrap(),
            gates_y: GateVector::new(vec![0.6, 0.1, 0.9, 0.4, 0.2], 0.25).unwrap(),
        };
        let cfg = TrainConfig {
            lambda_x: 0.7,
            lambda_y: 1.3,
            penalty: Penalty::Sum,
            ..TrainConfig::default()
        };
        let zx = sample_gates(&m.gates_x, &mut rng);
        let zy = sample_gates(&m.gates_y, &mut rng);
        let alpha: Vec<f64> = m.theta_x.iter().zip(&zx.z).map(|(t, z)| t * z).collect();
        let beta: Vec<f64> = m.theta_y.iter().zip(&zy.z).map(|(t, z)| t * z).collect();
        let p = x.matrix().t_matvec(&alpha).unwrap();
        let q = y.matrix().t_matvec(&beta).unwrap();
        let rho: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>()
            / (p.iter().map(|a| a * a).sum::<f64>().sqrt() * q.iter().map(|a| a * a).sum::<f64>().sqrt()
                + cfg.denom_eps);
        let mut reg = 0.0;
        for &mu in &m.gates_x.mu {
            reg += 0.7 * (1.0 - crate::numerics::normal_cdf(-mu / 0.25));
        }
        for &mu in &m.gates_y.mu {
            reg += 1.3 * (1.0 - crate::numerics::normal_cdf(-mu / 0.25));
        }
        let obj = l0cca_objective(&m, &zx, &zy, &x, &y, &cfg).unwrap();
        assert!((obj - (-rho + reg)).abs() < 1e-12);
    }

    #[test]
    fn mean_penalty_divides_by_dimension() {
        let (x, y) = shared_signal(4, 30, 6);
        let mut m = open_model(4, 2);
        m.gates_x.mu = vec![-3.0; 4];
        m.gates_y.mu = vec![-3.0; 4];
        let zx = m.gates_x.noiseless();
        let zy = m.gates_y.noiseless();
        let sum = TrainConfig { penalty: Penalty::Sum, ..TrainConfig::default() };
        let mean = TrainConfig { penalty: Penalty::Mean, ..TrainConfig::default() };
        let a = l0cca_objective(&m, &zx, &zy, &x, &y, &sum).unwrap();
        let b = l0cca_objective(&m, &zx, &zy, &x, &y, &mean).unwrap();
        assert!((a - 4.0 * b).abs() < 1e-15);
    }

    #[test]
    fn stationary_at_classical_solution() {
        let (x, y) = shared_signal(3, 200, 21);
        let c = classical_cca(&x, &y, 1e-12).unwrap();
        let m = LinearCcaModel {
            theta_x: c.a.clone(),
            theta_y: c.b.clone(),
            gates_x: GateVector::new(vec![5.0; 3], 0.25).unwrap(),
            gates_y: GateVector::new(vec![5.0; 3], 0.25).unwrap(),
        };
        let cfg = TrainConfig {
            lambda_x: 0.0,
            lambda_y: 0.0,
            ..TrainConfig::default()
        };
        let g = l0cca_grad(&m, &m.gates_x.noiseless(), &m.gates_y.noiseless(), &x, &y, &cfg).unwrap();
        assert!(norm2(&g.theta_x) < 1e-6 && norm2(&g.theta_y) < 1e-6);
    }

    #[test]
    fn clamped_gate_has_only_regulariser_gradient() {
        let (x, y) = shared_signal(3, 40, 2);
        let mut m = open_model(3, 9);
        m.gates_x.mu = vec![1.5, 0.5, 0.5];
        let cfg = TrainConfig {
            lambda_x: 2.0,
            ..TrainConfig::default()
        };
        let zx = m.gates_x.with_noise(vec![0.1, 0.0, 0.0]);
        let zy = m.gates_y.noiseless();
        let g = l0cca_grad(&m, &zx, &zy, &x, &y, &cfg).unwrap();
        // mean penalty over three gates
        let reg = 2.0 / 3.0 * expected_l0_grad(&m.gates_x)[0];
        assert!(reg > 0.0);
        assert!((g.mu_x[0] - reg).abs() < 1e-15);
    }

    #[test]
    fn lambda_zero_matches_classical() {
        let (x, y) = shared_signal(10, 1000, 33);
        let c = classical_cca(&x, &y, 1e-8).unwrap();
        let cfg = TrainConfig {
            lambda_x: 0.0,
            lambda_y: 0.0,
            lr: 0.05,
            epochs: 3000,
            sigma: 0.25,
            init: GateInit::Uniform { mu0: 1.5 },
            ..TrainConfig::default()
        };
        let (m, _) = train_l0cca(&x, &y, &cfg).unwrap();
        let rho = m.rho_hat(&x, &y, cfg.denom_eps);
        assert!((rho - c.rho).abs() < 0.02, "trained {rho} vs classical {}", c.rho);
    }

    #[test]
    fn model_json_round_trip() {
        let m = open_model(2, 1);
        let s = m.to_json().unwrap();
        assert!(s.starts_with(r#"{"theta_x":"#));
        assert_eq!(LinearCcaModel::from_json(&s).unwrap(), m);
    }

    #[test]
    fn classical_rejects_mismatched_samples() {
        let mut rng = SeededRng::new(0);
        let x = DataMatrix::centered(noise(2, 10, &mut rng)).unwrap();
        let y = DataMatrix::centered(noise(2, 11, &mut rng)).unwrap();
        assert!(classical_cca(&x, &y, 1e-3).is_err());
    }
}
