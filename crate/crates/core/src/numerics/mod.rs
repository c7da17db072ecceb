//! Linear algebra, special functions and seeded sampling.

mod linalg;
mod matrix;
mod random;
mod special;

pub use linalg::{
    center_columns, cholesky, inv_sqrt_sym, leading_singular_pair, leading_singular_pair_with,
    solve_lower, solve_lower_mat, solve_lower_t, spd_inverse, sym_eig, SingularPair, SymEig,
    EIGEN_FLOOR, POWER_MAX_ITER,
};
#[allow(unused_imports)]
pub(crate) use linalg::normalize;
pub use matrix::{axpy, dot, norm2, DenseMatrix};
pub use random::{sample_mvn, SeededRng};
pub use special::{erf, erfc, normal_cdf, normal_pdf};
