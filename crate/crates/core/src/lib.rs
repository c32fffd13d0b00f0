//! Sketch-and-solve least squares with the randomized Hadamard transform.
//!
//! Two solvers reduce an n x d problem `min ||A x - b||` to a much smaller one:
//! the first samples rows of `H D A` uniformly, the second multiplies `H D A`
//! by a sparse random sign matrix. Here `H` is the normalized Walsh-Hadamard
//! matrix and `D` a random +-1 diagonal; together they spread the energy of
//! the column space evenly over all rows, which is what makes uniform
//! sampling work.
//!
//! Besides the solvers the crate carries the diagnostics needed to check the
//! two structural conditions a sketch must satisfy (subspace embedding and
//! small cross term), and a sampled approximation of `A A^T` by column
//! sampling.

pub mod error;
pub mod hadamard;
pub mod linalg;
pub mod matmul;
pub mod rng;
pub mod sketch;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
