use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::cholesky;
use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

const JITTER: f64 = 1e-10;

/// Seeded generator producing uniforms and Box–Muller normals.
///
/// Backed by ChaCha8, so a seed fully determines the stream.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = loop {
            let u = self.uniform();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn normals(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    /// `k` distinct indices from `0..n`, in draw order.
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k.min(n) {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k.min(n));
        pool
    }
}

/// Draws `n` columns from `N(0, sigma)` as `L·g`.
///
/// If the Cholesky factorization fails, `1e-10·I` is added and the
/// factorization retried once.
pub fn sample_mvn(sigma: &DenseMatrix, n: usize, rng: &mut SeededRng) -> Result<DenseMatrix> {
    let l = match cholesky(sigma) {
        Ok(l) => l,
        Err(Error::NotPositiveDefinite { .. }) => {
            let mut jittered = sigma.clone();
            jittered.add_diag(JITTER);
            cholesky(&jittered)?
        }
        Err(e) => return Err(e),
    };
    let dim = sigma.rows();
    // Draw g column by column so the stream order does not depend on layout.
    let mut g = DenseMatrix::zeros(dim, n);
    for j in 0..n {
        for i in 0..dim {
            g[(i, j)] = rng.normal();
        }
    }
    l.matmul(&g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_moments() {
        let mut rng = SeededRng::new(1);
        let xs = rng.normals(200_000);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.01);
    }

    #[test]
    fn mvn_identity_covariance() {
        let mut rng = SeededRng::new(9);
        let n = 100_000;
        let s = sample_mvn(&DenseMatrix::identity(3), n, &mut rng).unwrap();
        let cov = s.matmul_t(&s).unwrap().scale(1.0 / n as f64);
        // O(1/sqrt(n)) ~ 3e-3; allow five standard errors.
        assert!(cov.sub(&DenseMatrix::identity(3)).unwrap().max_abs() < 0.016);
    }

    #[test]
    fn mvn_mean_within_clt_bound() {
        let sigma = DenseMatrix::from_rows(&[[2.0, 0.8, 0.0], [0.8, 1.0, 0.3], [0.0, 0.3, 0.5]])
            .unwrap();
        let n = 100_000;
        let s = sample_mvn(&sigma, n, &mut SeededRng::new(4)).unwrap();
        for (i, m) in s.row_means().into_iter().enumerate() {
            let se = (sigma[(i, i)] / n as f64).sqrt();
            assert!(m.abs() < 5.0 * se, "coordinate {i}: mean {m}");
        }
        let cov = s.matmul_t(&s).unwrap().scale(1.0 / n as f64);
        assert!(cov.sub(&sigma).unwrap().max_abs() < 0.03);
    }

    #[test]
    fn mvn_is_deterministic() {
        let sigma = DenseMatrix::from_rows(&[[1.0, 0.5], [0.5, 1.0]]).unwrap();
        let a = sample_mvn(&sigma, 50, &mut SeededRng::new(3)).unwrap();
        let b = sample_mvn(&sigma, 50, &mut SeededRng::new(3)).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn mvn_jitters_semidefinite_input() {
        // Rank one: exact Cholesky hits a zero pivot, jitter rescues it.
        let sigma = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(sample_mvn(&sigma, 10, &mut SeededRng::new(0)).is_ok());
        let bad = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(sample_mvn(&bad, 10, &mut SeededRng::new(0)).is_err());
    }

    #[test]
    fn sampling_without_replacement_is_distinct() {
        let mut rng = SeededRng::new(5);
        let mut idx = rng.sample_without_replacement(30, 10);
        idx.sort_unstable();
        idx.dedup();
        assert_eq!(idx.len(), 10);
        assert!(idx.iter().all(|&i| i < 30));
    }
}
