//! Stochastic gates: clipped-Gaussian relaxations of Bernoulli feature masks.
//!
//! A gate with mean `mu` and shared noise scale `sigma` is realised as
//! `z = clamp(mu + eps, 0, 1)` with `eps ~ N(0, sigma²)`. The expected number of
//! open gates has a closed form through `erf`, which serves as the sparsity
//! regulariser.

use serde::{Deserialize, Serialize};

use crate::data::{check_paired, DataMatrix};
use crate::error::{Error, Result};
use crate::numerics::{erf, leading_singular_pair, DenseMatrix, SeededRng};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Default mean for uninformed gates: a fair coin.
pub const FAIR_MU: f64 = 0.5;

/// Per-feature gate means with a shared noise scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateVector {
    pub mu: Vec<f64>,
    pub sigma: f64,
}

/// One realisation of a gate vector together with the noise that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSample {
    pub z: Vec<f64>,
    pub eps: Vec<f64>,
}

/// Post-training gates with the noise removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicGates {
    pub z: Vec<f64>,
    pub selected: Vec<usize>,
}

/// How trained gates are turned into a selected feature set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "s")]
#[derive(Default)]
pub enum Selection {
    /// Keep features with `clamp(mu, 0, 1) > 0`.
    #[default]
    Threshold,
    /// Keep the `s` features with the largest means.
    TopS(usize),
}


impl GateVector {
    pub fn new(mu: Vec<f64>, sigma: f64) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::EmptyGates);
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Config(format!("gate sigma must be positive, got {sigma}")));
        }
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("gate means must be finite".into()));
        }
        Ok(Self { mu, sigma })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Probability that gate `i` is open, `P(mu_i + eps_i > 0)`.
    pub fn open_prob(&self, i: usize) -> f64 {
        open_prob(self.mu[i], self.sigma)
    }

    pub fn open_probs(&self) -> Vec<f64> {
        self.mu.iter().map(|&m| open_prob(m, self.sigma)).collect()
    }

    /// Gate realisation for a given noise vector.
    pub fn with_noise(&self, eps: Vec<f64>) -> GateSample {
        debug_assert_eq!(eps.len(), self.mu.len());
        let z = self
            .mu
            .iter()
            .zip(&eps)
            .map(|(&m, &e)| (m + e).clamp(0.0, 1.0))
            .collect();
        GateSample { z, eps }
    }

    /// Gates with the noise fixed at zero.
    pub fn noiseless(&self) -> GateSample {
        self.with_noise(vec![0.0; self.mu.len()])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: GateVector = serde_json::from_str(s)?;
        GateVector::new(g.mu, g.sigma)
    }
}

impl GateSample {
    /// `dz_i/dmu_i`: one strictly inside the clamp, zero elsewhere.
    pub fn clamp_derivative(&self, mu: &[f64]) -> Vec<f64> {
        mu.iter()
            .zip(&self.eps)
            .map(|(&m, &e)| {
                let v = m + e;
                if v > 0.0 && v < 1.0 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn open_count(&self) -> usize {
        self.z.iter().filter(|&&z| z > 0.0).count()
    }
}

#[inline]
fn open_prob(mu: f64, sigma: f64) -> f64 {
    0.5 - 0.5 * erf(-mu / (std::f64::consts::SQRT_2 * sigma))
}

pub fn uniform_init(dim: usize, mu0: f64, sigma: f64) -> Result<GateVector> {
    if dim == 0 {
        return Err(Error::EmptyGates);
    }
    GateVector::new(vec![mu0; dim], sigma)
}

pub fn sample_gates(g: &GateVector, rng: &mut SeededRng) -> GateSample {
    let eps = (0..g.len()).map(|_| g.sigma * rng.normal()).collect();
    g.with_noise(eps)
}

/// Expected number of open gates, `Σ_i P(z_i > 0)`.
pub fn expected_l0(g: &GateVector) -> f64 {
    g.mu.iter().map(|&m| open_prob(m, g.sigma)).sum()
}

/// Gradient of [`expected_l0`] with respect to each mean: the Gaussian density at `mu_i`.
pub fn expected_l0_grad(g: &GateVector) -> Vec<f64> {
    let s = g.sigma;
    g.mu
        .iter()
        .map(|&m| (-(m * m) / (2.0 * s * s)).exp() / (s * SQRT_2PI))
        .collect()
}

pub fn deterministic_gates(g: &GateVector) -> DeterministicGates {
    let z: Vec<f64> = g.mu.iter().map(|m| m.clamp(0.0, 1.0)).collect();
    let selected = z
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, _)| i)
        .collect();
    DeterministicGates { z, selected }
}

/// Indices of the `s` largest gate means, ascending by index. Ties go to the lower index.
pub fn top_s(g: &GateVector, s: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| g.mu[b].total_cmp(&g.mu[a]).then(a.cmp(&b)));
    order.truncate(s.min(g.len()));
    order.sort_unstable();
    order
}

pub fn select(g: &GateVector, mode: Selection) -> Vec<usize> {
    match mode {
        Selection::Threshold => deterministic_gates(g).selected,
        Selection::TopS(s) => top_s(g, s),
    }
}

/// Percentile with linear interpolation between order statistics.
///
/// `r` is in percent. The input is reordered in place.
pub fn percentile(values: &mut [f64], r: f64) -> f64 {
    assert!(!values.is_empty());
    let n = values.len();
    let pos = (r / 100.0).clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let (_, lo_val, upper) = values.select_nth_unstable_by(lo, f64::total_cmp);
    let lo_val = *lo_val;
    if hi == lo {
        return lo_val;
    }
    let hi_val = upper.iter().copied().fold(f64::INFINITY, f64::min);
    lo_val + (pos - lo as f64) * (hi_val - lo_val)
}

/// Result of the covariance-based gate initialisation.
#[derive(Debug, Clone)]
pub struct CovInit {
    pub gates_x: GateVector,
    pub gates_y: GateVector,
    /// Set when the thresholded cross-covariance vanished and fair gates were used.
    pub fallback: bool,
}

/// Gate means lifted on the support of the leading singular vectors of the
/// thresholded cross-covariance.
///
/// `r` is the percentage of entries zeroed, both in the cross-covariance and
/// in the absolute singular vectors.
pub fn init_gates_from_cov(
    x: &DataMatrix,
    y: &DataMatrix,
    r: f64,
    sigma: f64,
) -> Result<CovInit> {
    check_paired(x, y)?;
    if !(r > 0.0 && r < 100.0) {
        return Err(Error::Config(format!("percentile must be in (0, 100), got {r}")));
    }
    let n = x.samples();
    let cxy = x.matrix().matmul_t(y.matrix())?.scale(1.0 / (n as f64 - 1.0));
    init_gates_from_cross_cov(&cxy, r, sigma)
}

/// Same as [`init_gates_from_cov`] but starting from a precomputed `C_xy`.
pub fn init_gates_from_cross_cov(cxy: &DenseMatrix, r: f64, sigma: f64) -> Result<CovInit> {
    let mut abs: Vec<f64> = cxy.as_slice().iter().map(|v| v.abs()).collect();
    let delta = percentile(&mut abs, r);
    let thresholded = cxy.map(|v| if v.abs() > delta { v } else { 0.0 });

    if thresholded.max_abs() == 0.0 {
        return Ok(CovInit {
            gates_x: uniform_init(cxy.rows(), FAIR_MU, sigma)?,
            gates_y: uniform_init(cxy.cols(), FAIR_MU, sigma)?,
            fallback: true,
        });
    }

    let pair = leading_singular_pair(&thresholded)?;
    let lift = |v: &[f64]| -> Vec<f64> {
        let mut abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        let cut = percentile(&mut abs.clone(), r);
        abs.iter_mut().for_each(|a| {
            if *a <= cut {
                *a = 0.0;
            }
        });
        abs.into_iter().map(|a| a + FAIR_MU).collect()
    };
    Ok(CovInit {
        gates_x: GateVector::new(lift(&pair.u), sigma)?,
        gates_y: GateVector::new(lift(&pair.v), sigma)?,
        fallback: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gv(mu: &[f64], sigma: f64) -> GateVector {
        GateVector::new(mu.to_vec(), sigma).unwrap()
    }

    #[test]
    fn sampling_clamps() {
        let g = gv(&[0.5, 2.0, -1.0], 0.25);
        let s = g.with_noise(vec![0.0, 0.7, 0.2]);
        assert_eq!(s.z, vec![0.5, 1.0, 0.0]);
        assert_eq!(s.clamp_derivative(&g.mu), vec![1.0, 0.0, 0.0]);
        let mut rng = SeededRng::new(0);
        for _ in 0..100 {
            let s = sample_gates(&g, &mut rng);
            assert!(s.z.iter().all(|&z| (0.0..=1.0).contains(&z)));
        }
    }

    #[test]
    fn expected_l0_examples() {
        for sigma in [0.1, 0.5, 3.0] {
            assert!((expected_l0(&gv(&[0.0; 3], sigma)) - 1.5).abs() < 1e-15);
        }
        assert!((expected_l0(&gv(&[10.0], 0.5)) - 1.0).abs() < 1e-12);
        // Phi(1) from a 30-digit reference.
        assert!((expected_l0(&gv(&[0.5], 0.5)) - 0.841344746068543).abs() < 1e-12);
    }

    #[test]
    fn expected_l0_grad_examples() {
        let g = expected_l0_grad(&gv(&[0.0, 10.0], 0.5));
        assert!((g[0] - 0.797884560802865).abs() < 1e-12);
        assert!(g[1].abs() < 1e-12);
        let a = expected_l0_grad(&gv(&[0.3, -1.2], 0.4));
        let b = expected_l0_grad(&gv(&[-0.3, 1.2], 0.4));
        assert_eq!(a, b);
    }

    #[test]
    fn deterministic_examples() {
        let d = deterministic_gates(&gv(&[0.7, -0.2, 1.4], 0.5));
        assert_eq!(d.z, vec![0.7, 0.0, 1.0]);
        assert_eq!(d.selected, vec![0, 2]);
        assert!(deterministic_gates(&gv(&[-1.0, 0.0], 0.5)).selected.is_empty());
        assert_eq!(top_s(&gv(&[0.1, 0.9, 0.4, 0.9], 0.5), 2), vec![1, 3]);
        assert_eq!(select(&gv(&[0.7, -0.2, 1.4], 0.5), Selection::TopS(1)), vec![2]);
    }

    #[test]
    fn uniform_init_examples() {
        let g = uniform_init(3, FAIR_MU, 0.5).unwrap();
        assert_eq!(g.mu, vec![0.5; 3]);
        let one = uniform_init(1, FAIR_MU, 0.25).unwrap();
        // P(N(0.5, 0.25²) > 0) = Phi(2)
        assert!((expected_l0(&one) - 0.977249868051821).abs() < 1e-12);
        let fair = uniform_init(1, 0.0, 0.25).unwrap();
        assert!((expected_l0(&fair) - 0.5).abs() < 1e-15);
        assert!(matches!(uniform_init(0, 0.5, 0.5), Err(Error::EmptyGates)));
        assert!(GateVector::new(vec![0.0], 0.0).is_err());
    }

    #[test]
    fn json_shape() {
        let g = gv(&[0.5, 1.0], 0.25);
        let s = g.to_json().unwrap();
        assert_eq!(s, r#"{"mu":[0.5,1.0],"sigma":0.25}"#);
        assert_eq!(GateVector::from_json(&s).unwrap(), g);
        assert!(GateVector::from_json(r#"{"mu":[0.5],"sigma":-1}"#).is_err());
    }

    #[test]
    fn percentile_interpolates() {
        let mut v = vec![4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(percentile(&mut v, 50.0), 3.0);
        assert_eq!(percentile(&mut v, 100.0), 5.0);
        assert!((percentile(&mut v, 90.0) - 4.6).abs() < 1e-12);
    }

    #[test]
    fn cov_init_rank_one_axis() {
        let mut cxy = DenseMatrix::zeros(4, 3);
        cxy[(0, 0)] = 1.0;
        for r in [10.0, 50.0, 90.0, 99.0] {
            let init = init_gates_from_cross_cov(&cxy, r, 0.25).unwrap();
            assert!(!init.fallback);
            assert_eq!(init.gates_x.mu, vec![1.5, 0.5, 0.5, 0.5]);
            assert_eq!(init.gates_y.mu, vec![1.5, 0.5, 0.5]);
        }
    }

    #[test]
    fn cov_init_degenerate_falls_back() {
        let x = DataMatrix::raw(DenseMatrix::zeros(3, 10));
        let y = DataMatrix::raw(DenseMatrix::zeros(2, 10));
        let init = init_gates_from_cov(&x, &y, 90.0, 0.5).unwrap();
        assert!(init.fallback);
        assert_eq!(init.gates_x.mu, vec![0.5; 3]);
        assert_eq!(init.gates_y.mu, vec![0.5; 2]);
    }

    #[test]
    fn cov_init_noise_lifts_few_gates() {
        let d = 100;
        let mut rng = SeededRng::new(17);
        let x = DataMatrix::centered(DenseMatrix::from_fn(d, 200, |_, _| rng.normal())).unwrap();
        let y = DataMatrix::centered(DenseMatrix::from_fn(d, 200, |_, _| rng.normal())).unwrap();
        let init = init_gates_from_cov(&x, &y, 99.0, 0.25).unwrap();
        let max_lifted = (0.01 * d as f64).ceil() as usize;
        for g in [&init.gates_x, &init.gates_y] {
            let lifted = g.mu.iter().filter(|&&m| m > 0.5).count();
            assert!(lifted <= max_lifted, "{lifted} gates lifted");
        }
    }
}
