//! Dense real linear algebra for tall-thin least-squares problems.

mod matrix;
mod qr;
mod spectral;

pub use matrix::{axpy, dot, norm2, DenseMatrix};
pub use qr::{
    orthonormal_basis, project_out, qr_factor, residual_norm, solve_exact_ls, QrFactors, RANK_TOL,
};
pub use spectral::{
    condition_number, gram_singular_values, spectral_norm, spectral_norm_sym,
    symmetric_eigenvalues, JACOBI_MAX_SWEEPS, JACOBI_TOL, POWER_MAX_ITER, POWER_TOL,
};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng;

/// Matrix of i.i.d. standard normal entries drawn from `seed`.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut r = rng::stream(seed, "gaussian-matrix", 0);
    DenseMatrix::from_fn(rows, cols, |_, _| r.sample(StandardNormal))
}

/// `max |U^T U - I|`
pub fn orthonormality_error(u: &DenseMatrix) -> f64 {
    let g = u.tr_matmul(u).expect("square Gram product");
    let mut worst = 0.0f64;
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}
