//! Dense kernels: centering, Cholesky, cyclic Jacobi eigensolver, inverse
//! square roots and the leading singular pair by power iteration.

use super::matrix::{axpy, dot, norm2, DenseMatrix};
use super::random::SeededRng;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;

/// Default floor applied to eigenvalues in [`inv_sqrt_sym`].
pub const EIGEN_FLOOR: f64 = 1e-12;

fn check_symmetric(a: &DenseMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "expected a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let asym = a.asymmetry();
    if asym > SYMMETRY_TOL * a.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Subtracts each row's sample mean. Rows are features, columns are samples.
pub fn center_columns(x: &DenseMatrix) -> Result<DenseMatrix> {
    if x.cols() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: x.cols(),
        });
    }
    let mut out = x.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        row.iter_mut().for_each(|v| *v -= mean);
    }
    Ok(out)
}

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = A`.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    check_symmetric(a)?;
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = dot(&l.row(i)[..j], &l.row(j)[..j]);
            if i == j {
                let pivot = a[(i, i)] - s;
                if !(pivot > 0.0) || !pivot.is_finite() {
                    return Err(Error::NotPositiveDefinite { index: i, pivot });
                }
                l[(i, i)] = pivot.sqrt();
            } else {
                l[(i, j)] = (a[(i, j)] - s) / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solves `L·x = b` for lower-triangular `L`.
pub fn solve_lower(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in 0..n {
        let s = dot(&l.row(i)[..i], &x[..i]);
        x[i] = (x[i] - s) / l[(i, i)];
    }
    x
}

/// Solves `Lᵀ·x = b` for lower-triangular `L`.
pub fn solve_lower_t(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        x[i] /= l[(i, i)];
        let xi = x[i];
        // Column i of Lᵀ above the diagonal is row i of L left of the diagonal.
        axpy(-xi, &l.row(i)[..i], &mut x[..i]);
    }
    x
}

/// Solves `L·X = B` column by column, where `B` is stored row-major.
pub fn solve_lower_mat(l: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let n = l.rows();
    let mut x = b.clone();
    for i in 0..n {
        for k in 0..i {
            let lik = l[(i, k)];
            if lik != 0.0 {
                let (head, tail) = x.as_mut_slice().split_at_mut(i * b.cols());
                axpy(-lik, &head[k * b.cols()..(k + 1) * b.cols()], &mut tail[..b.cols()]);
            }
        }
        let d = l[(i, i)];
        x.row_mut(i).iter_mut().for_each(|v| *v /= d);
    }
    x
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
pub fn spd_inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    let l = cholesky(a)?;
    let n = a.rows();
    let mut inv = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = solve_lower_t(&l, &solve_lower(&l, &e));
        inv.set_col(j, &col);
    }
    Ok(inv.symmetrized())
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: DenseMatrix,
}

impl SymEig {
    /// Rebuilds `V·diag(f(λ))·Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        DenseMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * fl[k] * v[(j, k)]).sum()
        })
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eig(a: &DenseMatrix) -> Result<SymEig> {
    check_symmetric(a)?;
    let n = a.rows();
    let mut m = a.symmetrized();
    let mut v = DenseMatrix::identity(n);
    let scale = m.frobenius_norm();
    if scale == 0.0 {
        return Ok(SymEig {
            values: vec![0.0; n],
            vectors: v,
        });
    }

    let off = |m: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += m[(i, j)] * m[(i, j)];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off(&m) <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let residual = off(&m);
        if residual > 1e-12 * scale {
            return Err(Error::NoConvergence {
                sweeps: JACOBI_MAX_SWEEPS,
                residual,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(SymEig { values, vectors })
}

/// `A^{-1/2}` for symmetric PSD `A`, with eigenvalues clamped below at `floor`.
pub fn inv_sqrt_sym(a: &DenseMatrix, floor: f64) -> Result<DenseMatrix> {
    if !(floor > 0.0) {
        return Err(Error::Config(format!("eigenvalue floor must be positive, got {floor}")));
    }
    let eig = sym_eig(a)?;
    Ok(eig.reconstruct_with(|l| 1.0 / l.max(floor).sqrt()))
}

/// Leading singular triple of a matrix.
#[derive(Debug, Clone)]
pub struct SingularPair {
    pub u: Vec<f64>,
    pub s: f64,
    pub v: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub const POWER_MAX_ITER: usize = 5000;
const POWER_SEED: u64 = 0x5eed_0001;

/// Leading singular pair by power iteration on `MᵀM`.
///
/// The start vector comes from a fixed seed so the result is deterministic.
/// The sign is chosen so the largest-magnitude entry of `u` is positive.
pub fn leading_singular_pair(m: &DenseMatrix) -> Result<SingularPair> {
    leading_singular_pair_with(m, POWER_MAX_ITER, 1e-13)
}

pub fn leading_singular_pair_with(
    m: &DenseMatrix,
    max_iter: usize,
    tol: f64,
) -> Result<SingularPair> {
    let fro = m.frobenius_norm();
    if !(fro >= 1e-12) {
        return Err(Error::Degenerate(format!(
            "Frobenius norm {fro:e} too small for a singular pair"
        )));
    }
    let mut rng = SeededRng::new(POWER_SEED);
    let mut v: Vec<f64> = (0..m.cols()).map(|_| rng.normal()).collect();
    normalize(&mut v);

    let mut s = 0.0;
    let mut u = vec![0.0; m.rows()];
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        u = m.matvec(&v)?;
        let su = norm2(&u);
        if su == 0.0 {
            // Start vector in the null space; restart from a fresh direction.
            v = (0..m.cols()).map(|_| rng.normal()).collect();
            normalize(&mut v);
            continue;
        }
        u.iter_mut().for_each(|x| *x /= su);
        let mut w = m.t_matvec(&u)?;
        let s_new = norm2(&w);
        w.iter_mut().for_each(|x| *x /= s_new);
        let delta: f64 = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        v = w;
        let done = delta <= tol && (s_new - s).abs() <= tol * s_new;
        s = s_new;
        if done {
            converged = true;
            break;
        }
    }
    // Final consistent u for the returned v.
    u = m.matvec(&v)?;
    s = norm2(&u);
    if s > 0.0 {
        u.iter_mut().for_each(|x| *x /= s);
    }

    let pivot = u
        .iter()
        .copied()
        .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
    if pivot < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(SingularPair {
        u,
        s,
        v,
        iterations,
        converged,
    })
}

pub(crate) fn normalize(v: &mut [f64]) -> f64 {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}
