//! Seeded ensembles behind `lsketch verify`: how often each structural
//! property holds at a given size.

use std::time::{Duration, Instant};

use lsketch::hadamard::{apply_rht, partial_rht_rows, sample_signs};
use lsketch::linalg::{gaussian_matrix, gram_singular_values, orthonormal_basis, solve_exact_ls};
use lsketch::matmul::{
    c_lower_bound, check_bound_hypotheses, gram_error, rescale_to_unit_spectral_norm, sampled_gram, ColumnSampler,
};
use lsketch::sketch::{apply_sparse_projection, draw_sampling_plan, draw_sparse_projection, SketchParams};
use lsketch::solver::{sketch_solve_projection, sketch_solve_sampling, SolveOptions};

use crate::error::Result;
use crate::problem::{gen_problem, ProblemKind, ProblemSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub name: String,
    pub passes: usize,
    pub total: usize,
    /// Required pass rate.
    pub floor: f64,
}

impl EnsembleResult {
    pub fn rate(&self) -> f64 {
        self.passes as f64 / self.total as f64
    }

    pub fn ok(&self) -> bool {
        self.rate() >= self.floor
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub n: usize,
    pub d: usize,
    pub seeds: u64,
    pub seed: u64,
    pub epsilon: f64,
    /// Sketch sizes for the subspace embedding ensembles.
    pub embed_r: usize,
    pub embed_k: usize,
    /// Sketch sizes for the end-to-end solves.
    pub r: usize,
    pub k: usize,
}

impl VerifyOptions {
    pub fn new(n: usize, d: usize, seeds: u64, seed: u64) -> Self {
        VerifyOptions { n, d, seeds, seed, epsilon: 0.5, embed_r: 256, embed_k: 256, r: 256, k: 128 }
    }
}

fn count(seeds: impl Iterator<Item = u64>, mut pass: impl FnMut(u64) -> Result<bool>) -> Result<(usize, usize)> {
    let (mut passes, mut total) = (0, 0);
    for s in seeds {
        total += 1;
        if pass(s)? {
            passes += 1;
        }
    }
    Ok((passes, total))
}

fn min_sigma_sq(m: &lsketch::DenseMatrix) -> Result<f64> {
    let s = *gram_singular_values(m)?.last().unwrap();
    Ok(s * s)
}

pub fn run_ensembles(o: &VerifyOptions) -> Result<Vec<EnsembleResult>> {
    let (n, d) = (o.n, o.d);
    let seeds = || o.seed..o.seed + o.seeds;
    let u = orthonormal_basis(&gaussian_matrix(n, d, o.seed))?;
    let mut out = Vec::new();
    let mut push = |name: &str, (passes, total): (usize, usize), floor: f64| {
        out.push(EnsembleResult { name: name.into(), passes, total, floor });
    };

    let cap = 2.0 * d as f64 * (40.0 * n as f64 * d as f64).ln() / n as f64;
    push(
        "energy spreading: max row norm of H D U",
        count(seeds(), |s| {
            let hdu = apply_rht(&u, &sample_signs(n, s))?;
            Ok((0..n).all(|i| hdu.row(i).iter().map(|x| x * x).sum::<f64>() <= cap))
        })?,
        0.95,
    );

    let floor = std::f64::consts::FRAC_1_SQRT_2;
    push(
        "subspace embedding, row sampling",
        count(seeds(), |s| {
            let plan = draw_sampling_plan(n, o.embed_r, s)?;
            let xu = partial_rht_rows(&u, &sample_signs(n, s), plan.indices())?.scaled(plan.scale());
            Ok(min_sigma_sq(&xu)? >= floor)
        })?,
        0.9,
    );
    let q = lsketch::sketch::practical_q(n, d);
    push(
        "subspace embedding, sparse projection",
        count(seeds(), |s| {
            let t = draw_sparse_projection(o.embed_k, n, q, s)?;
            let xu = apply_sparse_projection(&t, &apply_rht(&u, &sample_signs(n, s))?)?;
            Ok(min_sigma_sq(&xu)? >= floor)
        })?,
        0.9,
    );

    let params = SketchParams::practical(n, d, o.epsilon)?.with_r(o.r).with_k(o.k);
    let opts = SolveOptions::with_diagnostics();
    for (name, projection) in [("row sampling", false), ("sparse projection", true)] {
        let mut violations = 0;
        let success = count(seeds(), |s| {
            let spec = ProblemSpec {
                kind: ProblemKind::GaussianIncoherent,
                n,
                d,
                kappa_target: 10.0,
                gamma_target: 0.9,
                seed: s,
            };
            let p = gen_problem(&spec)?;
            let out = if projection {
                sketch_solve_projection(&p, &params, s, &opts)?
            } else {
                sketch_solve_sampling(&p, &params, s, &opts)?
            };
            let z = out.z_exact.unwrap();
            let diag = out.diagnostics.as_ref().unwrap();
            if diag.embedding_ok && diag.cross_term_ok {
                let x = &p.exact()?.x;
                let dx: f64 = x.iter().zip(&out.x_tilde).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                if out.residual > (1.0 + o.epsilon) * z || dx > o.epsilon.sqrt() * z / diag.sigma_min {
                    violations += 1;
                }
            }
            Ok(out.residual <= (1.0 + o.epsilon) * z)
        })?;
        push(&format!("relative residual within 1 + eps, {name}"), success, 0.8);
        push(&format!("error bounds whenever both conditions hold, {name}"), (success.1 - violations, success.1), 1.0);
    }

    let (a, _) = rescale_to_unit_spectral_norm(&gaussian_matrix(8, 100, o.seed))?;
    check_bound_hypotheses(&a)?;
    let c = c_lower_bound(a.frobenius_norm().powi(2), 1.0, 0.5, 0.1)?;
    let sampler = ColumnSampler::norm_squared(&a, c)?;
    push(
        "column sampling spectral error <= 0.5",
        count(seeds(), |s| Ok(gram_error(&a, &sampled_gram(&a, &sampler, s)?)? <= 0.5))?,
        0.9,
    );
    Ok(out)
}

/// Median wall times of the row-sampling pipeline and of a full QR solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfResult {
    pub sketch: Duration,
    pub exact: Duration,
}

impl PerfResult {
    pub fn ok(&self) -> bool {
        self.sketch < self.exact
    }
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

pub fn perf_check(n: usize, d: usize, runs: usize, seed: u64) -> Result<PerfResult> {
    let spec = ProblemSpec { kind: ProblemKind::GaussianIncoherent, n, d, kappa_target: 10.0, gamma_target: 0.9, seed };
    let p = gen_problem(&spec)?;
    let params = SketchParams::practical(n, d, 0.5)?;
    let mut sketch = Vec::new();
    let mut exact = Vec::new();
    for i in 0..runs as u64 {
        let t = Instant::now();
        sketch_solve_sampling(&p, &params, seed + i, &SolveOptions::default())?;
        sketch.push(t.elapsed());
        let t = Instant::now();
        solve_exact_ls(p.a(), p.b())?;
        exact.push(t.elapsed());
    }
    Ok(PerfResult { sketch: median(sketch), exact: median(exact) })
}
