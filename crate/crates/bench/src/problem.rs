//! Synthetic least-squares problems with a prescribed condition number and
//! a prescribed fraction of `b` inside the column space.

use lsketch::linalg::{gaussian_matrix, norm2, orthonormal_basis, project_out};
use lsketch::rng::derive_seed;
use lsketch::solver::LsProblem;
use lsketch::DenseMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// Gaussian column space, geometric singular values.
    GaussianIncoherent,
    /// Column space concentrated on the first `d` rows.
    CoherentSpiked,
    /// All singular values 1 except the last, which is `1/kappa`.
    IllConditioned,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::GaussianIncoherent => "gaussian_incoherent",
            ProblemKind::CoherentSpiked => "coherent_spiked",
            ProblemKind::IllConditioned => "ill_conditioned",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::GaussianIncoherent, Self::CoherentSpiked, Self::IllConditioned]
            .into_iter()
            .find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub n: usize,
    pub d: usize,
    pub kappa_target: f64,
    pub gamma_target: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::InvalidSpec(msg));
        if self.d == 0 || self.n < self.d {
            return bad(format!("need n >= d >= 1, got n = {}, d = {}", self.n, self.d));
        }
        if !(self.kappa_target >= 1.0 && self.kappa_target.is_finite()) {
            return bad(format!("kappa_target = {} must be a finite value >= 1", self.kappa_target));
        }
        if self.d == 1 && self.kappa_target != 1.0 {
            return bad("a single column always has kappa = 1".into());
        }
        if !(self.gamma_target > 0.0 && self.gamma_target <= 1.0) {
            return bad(format!("gamma_target = {} outside (0, 1]", self.gamma_target));
        }
        if self.gamma_target < 1.0 && self.n == self.d {
            return bad("gamma_target < 1 needs n > d".into());
        }
        Ok(())
    }

    fn singular_values(&self) -> Vec<f64> {
        let d = self.d;
        match self.kind {
            ProblemKind::IllConditioned => {
                let mut s = vec![1.0; d];
                s[d - 1] = 1.0 / self.kappa_target;
                s
            }
            _ if d == 1 => vec![1.0],
            _ => (0..d).map(|i| self.kappa_target.powf(-(i as f64) / (d - 1) as f64)).collect(),
        }
    }
}

fn column_basis(spec: &ProblemSpec) -> Result<DenseMatrix> {
    let (n, d) = (spec.n, spec.d);
    let g = gaussian_matrix(n, d, derive_seed(spec.seed, "problem-u", 0));
    let g = match spec.kind {
        ProblemKind::CoherentSpiked => DenseMatrix::from_fn(n, d, |i, j| {
            let spike = if i == j { 1.0 } else { 0.0 };
            spike + 1e-3 * g[(i, j)]
        }),
        _ => g,
    };
    Ok(orthonormal_basis(&g)?)
}

/// `A = U diag(sigma) V^T` and `b = gamma u + sqrt(1 - gamma^2) w` with
/// `u` a unit vector in `range(A)` and `w` a unit vector orthogonal to it.
pub fn gen_problem(spec: &ProblemSpec) -> Result<LsProblem> {
    spec.validate()?;
    let (n, d) = (spec.n, spec.d);
    let u = column_basis(spec)?;
    let v = orthonormal_basis(&gaussian_matrix(d, d, derive_seed(spec.seed, "problem-v", 0)))?;
    let sigma = spec.singular_values();
    let us = DenseMatrix::from_fn(n, d, |i, j| u[(i, j)] * sigma[j]);
    let a = us.matmul(&v.transpose())?;

    let c = gaussian_matrix(d, 1, derive_seed(spec.seed, "problem-b", 0)).into_vec();
    let nc = norm2(&c);
    let inside = u.matvec(&c.iter().map(|x| x / nc).collect::<Vec<_>>())?;
    let gamma = spec.gamma_target;
    let b = if gamma < 1.0 {
        let g = gaussian_matrix(n, 1, derive_seed(spec.seed, "problem-b", 1)).into_vec();
        // A second pass removes what rounding left of the range component.
        let w = project_out(&u, &project_out(&u, &g)?)?;
        let nw = norm2(&w);
        let tail = (1.0 - gamma * gamma).sqrt();
        inside.iter().zip(&w).map(|(x, y)| gamma * x + tail * y / nw).collect()
    } else {
        inside
    };
    Ok(LsProblem::new(a, b)?)
}
