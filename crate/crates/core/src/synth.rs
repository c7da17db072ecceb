//! Synthetic two-view Gaussian benchmarks with sparse canonical vectors.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::numerics::{
    dot, leading_singular_pair, normalize, sample_mvn, spd_inverse, DenseMatrix, SeededRng,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CovarianceModel {
    /// Identity covariance.
    #[serde(rename = "I")]
    Identity,
    /// Toeplitz `ρ0^|i-j|`.
    #[serde(rename = "II")]
    Toeplitz,
    /// Normalised inverse of a banded precision matrix.
    #[serde(rename = "III")]
    SparseInverse,
}

impl std::str::FromStr for CovarianceModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "1" => Ok(Self::Identity),
            "II" | "2" => Ok(Self::Toeplitz),
            "III" | "3" => Ok(Self::SparseInverse),
            other => Err(Error::Config(format!("unknown covariance model {other:?}"))),
        }
    }
}

impl std::fmt::Display for CovarianceModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Identity => "I",
            Self::Toeplitz => "II",
            Self::SparseInverse => "III",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub model: CovarianceModel,
    pub n: usize,
    pub d: usize,
    #[serde(default = "default_rho0")]
    pub rho0: f64,
    #[serde(default = "default_sparsity")]
    pub sparsity_k: usize,
    #[serde(default)]
    pub seed: u64,
    /// Use the precision matrix exactly as printed (diagonal only) for model III.
    #[serde(default)]
    pub literal_gamma: bool,
}

fn default_rho0() -> f64 {
    0.9
}

fn default_sparsity() -> usize {
    5
}

impl SyntheticSpec {
    pub fn new(model: CovarianceModel, n: usize, d: usize, seed: u64) -> Self {
        Self {
            model,
            n,
            d,
            rho0: default_rho0(),
            sparsity_k: default_sparsity(),
            seed,
            literal_gamma: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Config(format!("need D >= 2, got {}", self.d)));
        }
        if self.n < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: self.n,
            });
        }
        if !(self.rho0 > 0.0 && self.rho0 < 1.0) {
            return Err(Error::Config(format!("rho0 must be in (0, 1), got {}", self.rho0)));
        }
        if self.sparsity_k == 0 || self.sparsity_k > self.d {
            return Err(Error::Config(format!(
                "sparsity {} must be in 1..={}",
                self.sparsity_k, self.d
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub phi: Vec<f64>,
    pub eta: Vec<f64>,
    pub support_phi: Vec<usize>,
    pub support_eta: Vec<usize>,
}

/// Within-view covariance for the given model.
pub fn make_covariance(model: CovarianceModel, d: usize, rho0: f64) -> Result<DenseMatrix> {
    make_covariance_with(model, d, rho0, false)
}

pub fn make_covariance_with(
    model: CovarianceModel,
    d: usize,
    rho0: f64,
    literal_gamma: bool,
) -> Result<DenseMatrix> {
    if d < 2 {
        return Err(Error::Config(format!("need D >= 2, got {d}")));
    }
    match model {
        CovarianceModel::Identity => Ok(DenseMatrix::identity(d)),
        CovarianceModel::Toeplitz => Ok(DenseMatrix::from_fn(d, d, |i, j| {
            rho0.powi(i.abs_diff(j) as i32)
        })),
        CovarianceModel::SparseInverse => {
            let precision = DenseMatrix::from_fn(d, d, |i, j| {
                if literal_gamma {
                    // 1 + 0.5 + 0.4 on the diagonal only
                    if i == j {
                        1.9
                    } else {
                        0.0
                    }
                } else {
                    match i.abs_diff(j) {
                        0 => 1.0,
                        1 => 0.5,
                        2 => 0.4,
                        _ => 0.0,
                    }
                }
            });
            let inv = spd_inverse(&precision)?;
            let diag: Vec<f64> = (0..d).map(|i| inv[(i, i)].sqrt()).collect();
            let mut sigma = DenseMatrix::from_fn(d, d, |i, j| inv[(i, j)] / (diag[i] * diag[j]));
            for i in 0..d {
                sigma[(i, i)] = 1.0;
            }
            Ok(sigma.symmetrized())
        }
    }
}

/// Sparse unit vectors with `k` entries equal to `1/√k` at random positions.
pub fn make_canonical_vectors(d: usize, k: usize, rng: &mut SeededRng) -> Result<GroundTruth> {
    if k == 0 || k > d {
        return Err(Error::Config(format!("sparsity {k} must be in 1..={d}")));
    }
    let value = 1.0 / (k as f64).sqrt();
    let mut draw = || {
        let mut support = rng.sample_without_replacement(d, k);
        support.sort_unstable();
        let mut v = vec![0.0; d];
        for &i in &support {
            v[i] = value;
        }
        (v, support)
    };
    let (phi, support_phi) = draw();
    let (eta, support_eta) = draw();
    Ok(GroundTruth {
        phi,
        eta,
        support_phi,
        support_eta,
    })
}

/// Joint covariance `[[Σ, Σxy], [Σxyᵀ, Σ]]` with `Σxy = ρ0 Σ φ ηᵀ Σ`.
///
/// φ and η are rescaled to unit Σ-norm inside `Σxy`, so the leading canonical
/// correlation is exactly `ρ0` and the joint matrix is positive definite for
/// any support. Directions, and hence the reported truth, are unchanged.
pub fn joint_covariance(sigma: &DenseMatrix, truth: &GroundTruth, rho0: f64) -> Result<DenseMatrix> {
    let d = sigma.rows();
    let mut sp = sigma.matvec(&truth.phi)?;
    let mut se = sigma.matvec(&truth.eta)?;
    let phi_norm = dot(&truth.phi, &sp).sqrt();
    let eta_norm = dot(&truth.eta, &se).sqrt();
    sp.iter_mut().for_each(|v| *v /= phi_norm);
    se.iter_mut().for_each(|v| *v /= eta_norm);
    let mut joint = DenseMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            joint[(i, j)] = sigma[(i, j)];
            joint[(d + i, d + j)] = sigma[(i, j)];
            let c = rho0 * sp[i] * se[j];
            joint[(i, d + j)] = c;
            joint[(d + j, i)] = c;
        }
    }
    Ok(joint)
}

/// Samples a centred `(X, Y)` pair and its ground truth.
pub fn generate(spec: &SyntheticSpec) -> Result<(DataMatrix, DataMatrix, GroundTruth)> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);
    let truth = make_canonical_vectors(spec.d, spec.sparsity_k, &mut rng)?;
    let sigma = make_covariance_with(spec.model, spec.d, spec.rho0, spec.literal_gamma)?;
    let joint = joint_covariance(&sigma, &truth, spec.rho0)?;
    let samples = match sample_mvn(&joint, spec.n, &mut rng) {
        Ok(s) => s,
        Err(Error::NotPositiveDefinite { .. }) => {
            return Err(Error::Degenerate(format!(
                "joint covariance is not positive definite (minimum eigenvalue ≈ {:e})",
                min_eigenvalue(&joint)
            )))
        }
        Err(e) => return Err(e),
    };
    let x = DataMatrix::centered(samples.row_block(0, spec.d))?;
    let y = DataMatrix::centered(samples.row_block(spec.d, 2 * spec.d))?;
    Ok((x, y, truth))
}

/// Nonlinear two-view toy built on a shared latent `t ~ U(-π/2, π)`.
#[derive(Debug, Clone)]
pub struct LatentToy {
    pub x: DataMatrix,
    pub y: DataMatrix,
    /// Indices of the features that depend on `t`.
    pub informative_x: Vec<usize>,
    pub informative_y: Vec<usize>,
    pub latent: Vec<f64>,
}

/// Feature 0 of X is `cos t`, feature 0 of Y is `t` plus Gaussian noise of
/// standard deviation `noise`; the remaining `distractors` features per view
/// are independent N(0, 1). Every feature is standardised.
pub fn shared_latent_toy(n: usize, distractors: usize, noise: f64, seed: u64) -> Result<LatentToy> {
    if n < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: n });
    }
    if !(noise >= 0.0) {
        return Err(Error::Config(format!("noise must be >= 0, got {noise}")));
    }
    let mut rng = SeededRng::new(seed);
    let latent: Vec<f64> = (0..n)
        .map(|_| std::f64::consts::PI * (1.5 * rng.uniform() - 0.5))
        .collect();
    let d = distractors + 1;
    let mut x = DenseMatrix::zeros(d, n);
    let mut y = DenseMatrix::zeros(d, n);
    for (j, &t) in latent.iter().enumerate() {
        x[(0, j)] = t.cos();
        y[(0, j)] = t + noise * rng.normal();
    }
    for m in [&mut x, &mut y] {
        for i in 1..d {
            m.row_mut(i).iter_mut().for_each(|v| *v = rng.normal());
        }
    }
    Ok(LatentToy {
        x: DataMatrix::centered(standardise_rows(x))?,
        y: DataMatrix::centered(standardise_rows(y))?,
        informative_x: vec![0],
        informative_y: vec![0],
        latent,
    })
}

fn standardise_rows(mut m: DenseMatrix) -> DenseMatrix {
    let n = m.cols() as f64;
    for i in 0..m.rows() {
        let row = m.row_mut(i);
        let mean = row.iter().sum::<f64>() / n;
        let sd = (row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
        if sd > 0.0 {
            row.iter_mut().for_each(|v| *v = (*v - mean) / sd);
        }
    }
    m
}

/// Smallest eigenvalue of a symmetric matrix via two power iterations.
pub fn min_eigenvalue(a: &DenseMatrix) -> f64 {
    let top = match leading_singular_pair(a) {
        Ok(p) => p.s,
        Err(_) => return 0.0,
    };
    let mut shifted = a.scale(-1.0);
    shifted.add_diag(top);
    match leading_singular_pair(&shifted) {
        Ok(p) => top - p.s,
        Err(_) => top,
    }
}

/// `2(1 − |φᵀφ̂|)` with the estimate normalised first; a zero estimate scores 2.
pub fn estimation_error(truth: &[f64], estimate: &[f64]) -> f64 {
    let mut t = truth.to_vec();
    let mut e = estimate.to_vec();
    if normalize(&mut e) == 0.0 || normalize(&mut t) == 0.0 {
        return 2.0;
    }
    (2.0 * (1.0 - dot(&t, &e).abs())).clamp(0.0, 2.0)
}

/// F1 score of a selected index set against the true support.
pub fn support_f1(truth: &[usize], selected: &[usize]) -> f64 {
    let t: BTreeSet<_> = truth.iter().collect();
    let s: BTreeSet<_> = selected.iter().collect();
    if t.is_empty() && s.is_empty() {
        return 1.0;
    }
    let tp = t.intersection(&s).count() as f64;
    if tp == 0.0 {
        return 0.0;
    }
    let precision = tp / s.len() as f64;
    let recall = tp / t.len() as f64;
    2.0 * precision * recall / (precision + recall)
}
