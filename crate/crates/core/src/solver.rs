//! Sketch-and-solve pipelines and their diagnostics.
//!
//! Both pipelines pad `(A, b)` to a power-of-two row count, flip row signs
//! with a random `D`, apply the normalized Hadamard transform `H`, compress
//! with a sketch `X`, and solve the small problem `min ||X H D (A x - b)||`.
//! The row-sampling pipeline never forms `H D A`: it draws the sample first
//! and evaluates only those rows.
//!
//! A sketch `X` applied to an orthonormal basis `U` of `range(A)` is good
//! when two conditions hold:
//!
//! * every singular value of `X U` satisfies `sigma^2 >= 1/sqrt(2)`, and
//! * `||(X U)^T X b_perp||^2 <= eps Z^2 / 2`, where `b_perp` is the part of
//!   `b` outside `range(A)` and `Z = ||b_perp||` the optimal residual.
//!
//! Whenever both hold, the sketched solution satisfies
//! `||A x~ - b|| <= (1 + eps) Z` and `||x_opt - x~|| <= sqrt(eps) Z / sigma_min(A)`
//! with certainty. [`Diagnostics`] reports both conditions for a run.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::hadamard::{apply_rht, partial_rht_rows, sample_signs, SignDiagonal};
use crate::linalg::{
    condition_number, dot, gram_singular_values, norm2, orthonormal_basis, project_out, qr_factor,
    residual_norm, solve_exact_ls, DenseMatrix,
};
use crate::rng;
use crate::sketch::{
    apply_sparse_projection, draw_sampling_plan, draw_sparse_projection, SamplingPlan, SketchParams,
    SparseProjection,
};

/// Stream label for the reseed after a rank-deficient sketch.
const RETRY: &str = "retry";

/// An overdetermined least-squares problem `min ||A x - b||_2`.
#[derive(Debug, Clone)]
pub struct LsProblem {
    a: DenseMatrix,
    b: Vec<f64>,
    /// `[A | b]` zero-padded to a power-of-two number of rows.
    augmented: OnceLock<DenseMatrix>,
    exact: OnceLock<Result<ExactSolution>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub x: Vec<f64>,
    /// `Z = min ||A x - b||`
    pub residual: f64,
}

impl LsProblem {
    pub fn new(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        if a.rows() < a.cols() {
            return Err(Error::DimensionMismatch(format!(
                "need n >= d, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side of length {} for {} rows",
                b.len(),
                a.rows()
            )));
        }
        if let Some(i) = b.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        Ok(LsProblem { a, b, augmented: OnceLock::new(), exact: OnceLock::new() })
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn d(&self) -> usize {
        self.a.cols()
    }

    pub fn padded_n(&self) -> usize {
        self.n().next_power_of_two()
    }

    pub fn is_padded(&self) -> bool {
        self.padded_n() != self.n()
    }

    fn augmented(&self) -> &DenseMatrix {
        self.augmented.get_or_init(|| pad_augmented(&self.a, &self.b))
    }

    /// QR solution of the full problem, computed once.
    pub fn exact(&self) -> Result<&ExactSolution> {
        self.exact
            .get_or_init(|| {
                let x = solve_exact_ls(&self.a, &self.b)?;
                let residual = residual_norm(&self.a, &x, &self.b)?;
                Ok(ExactSolution { x, residual })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `||A x - b||`
    pub fn residual(&self, x: &[f64]) -> Result<f64> {
        residual_norm(&self.a, x, &self.b)
    }
}

/// `[M | v]` with zero rows appended up to the next power of two.
fn pad_augmented(m: &DenseMatrix, v: &[f64]) -> DenseMatrix {
    let n = m.rows();
    let width = m.cols() + 1;
    let mut data = Vec::with_capacity(n.next_power_of_two() * width);
    for (i, &vi) in v.iter().enumerate() {
        data.extend_from_slice(m.row(i));
        data.push(vi);
    }
    data.resize(n.next_power_of_two() * width, 0.0);
    DenseMatrix::from_row_major(n.next_power_of_two(), width, data).expect("finite padded input")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerSolver {
    /// Householder QR on the sketched system.
    Qr,
    /// Conjugate gradients on the sketched normal equations.
    Cgnr { tol: f64, max_iter: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Build `U_A` and report both structural conditions. Costs `O(n d^2)`.
    pub diagnostics: bool,
    /// Also solve the full problem exactly and record `Z`.
    pub compute_exact: bool,
    pub inner: InnerSolver,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { diagnostics: false, compute_exact: false, inner: InnerSolver::Qr }
    }
}

impl SolveOptions {
    pub fn with_diagnostics() -> Self {
        SolveOptions { diagnostics: true, compute_exact: true, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SketchKind {
    Sampling,
    Projection,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub transform: Duration,
    pub sketch_apply: Duration,
    pub small_solve: Duration,
    pub total: Duration,
}

/// Singular values of `X U` and the cross term of one sketch.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub sigma_xu: Vec<f64>,
    /// `||(X U)^T X b_perp||^2`
    pub cross_term: f64,
    pub embedding_ok: bool,
    pub cross_term_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub sigma_xu: Vec<f64>,
    pub cross_term: f64,
    /// Optimal residual `||b_perp||`.
    pub z: f64,
    /// Fraction of `||b||` inside `range(A)`.
    pub gamma: f64,
    pub kappa: f64,
    pub sigma_min: f64,
    pub embedding_ok: bool,
    pub cross_term_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SketchOutcome {
    pub kind: SketchKind,
    pub x_tilde: Vec<f64>,
    /// `||A x~ - b||` on the original problem.
    pub residual: f64,
    pub z_exact: Option<f64>,
    pub timings: PhaseTimings,
    pub diagnostics: Option<Diagnostics>,
    pub params: SketchParams,
    pub seed: u64,
    /// Seed actually used for the random draws; differs from `seed` after a retry.
    pub effective_seed: u64,
    pub retries: u32,
}

fn retry_seed(seed: u64, attempt: u64) -> u64 {
    if attempt == 0 {
        seed
    } else {
        rng::derive_seed(seed, RETRY, attempt)
    }
}

/// Runs `attempt` with the base seed and, if the sketched system comes out
/// rank deficient, once more with a derived seed.
fn with_retry(seed: u64, mut attempt: impl FnMut(u64) -> Result<SketchOutcome>) -> Result<SketchOutcome> {
    match attempt(seed) {
        Err(Error::RankDeficient { .. }) => {
            let mut out = attempt(retry_seed(seed, 1))?;
            out.retries = 1;
            Ok(out)
        }
        other => other,
    }
}

/// Row-sampling sketch: `x~ = (S^T H D A)^+ S^T H D b` with `r = params.r`
/// rows drawn uniformly with replacement. With `r >= n` every row is kept
/// once instead.
pub fn sketch_solve_sampling(
    p: &LsProblem,
    params: &SketchParams,
    seed: u64,
    opts: &SolveOptions,
) -> Result<SketchOutcome> {
    params.validate_sampling(p.d())?;
    with_retry(seed, |s| {
        let signs = sample_signs(p.padded_n(), s);
        let plan = if params.r >= p.n() {
            // A full-size sketch keeps every row once and is exact.
            SamplingPlan::from_indices(p.padded_n(), (0..p.padded_n()).collect())?
        } else {
            draw_sampling_plan(p.padded_n(), params.r, s)?
        };
        let mut out = solve_sampled(p, &signs, &plan, params, opts)?;
        out.seed = seed;
        out.effective_seed = s;
        Ok(out)
    })
}

/// Row-sampling pipeline with given `D` and `S`.
pub fn solve_sampled(
    p: &LsProblem,
    signs: &SignDiagonal,
    plan: &SamplingPlan,
    params: &SketchParams,
    opts: &SolveOptions,
) -> Result<SketchOutcome> {
    let start = Instant::now();
    let aug = p.augmented();
    if plan.n() != aug.rows() {
        return Err(Error::DimensionMismatch(format!(
            "sampling plan over {} rows for padded problem with {} rows",
            plan.n(),
            aug.rows()
        )));
    }
    let rows = partial_rht_rows(aug, signs, plan.indices())?;
    let transformed = start.elapsed();

    let t = Instant::now();
    let sketched = rows.scaled(plan.scale());
    let sketch_apply = t.elapsed();

    let diag_sketch = |m: &DenseMatrix| -> Result<DenseMatrix> {
        Ok(partial_rht_rows(m, signs, plan.indices())?.scaled(plan.scale()))
    };
    finish(p, SketchKind::Sampling, sketched, transformed, sketch_apply, start, params, opts, diag_sketch, signs.seed())
}

/// Sparse-projection sketch: `x~ = (T H D A)^+ T H D b` with `T` k x n of
/// sparsity `q`.
pub fn sketch_solve_projection(
    p: &LsProblem,
    params: &SketchParams,
    seed: u64,
    opts: &SolveOptions,
) -> Result<SketchOutcome> {
    params.validate_projection(p.d())?;
    with_retry(seed, |s| {
        let signs = sample_signs(p.padded_n(), s);
        let t = draw_sparse_projection(params.k, p.padded_n(), params.q, s)?;
        let mut out = solve_projected(p, &signs, &t, params, opts)?;
        out.seed = seed;
        out.effective_seed = s;
        Ok(out)
    })
}

/// Sparse-projection pipeline with given `D` and `T`.
pub fn solve_projected(
    p: &LsProblem,
    signs: &SignDiagonal,
    proj: &SparseProjection,
    params: &SketchParams,
    opts: &SolveOptions,
) -> Result<SketchOutcome> {
    let start = Instant::now();
    let hd = apply_rht(p.augmented(), signs)?;
    let transformed = start.elapsed();

    let t = Instant::now();
    let sketched = apply_sparse_projection(proj, &hd)?;
    let sketch_apply = t.elapsed();

    let diag_sketch = |m: &DenseMatrix| -> Result<DenseMatrix> {
        apply_sparse_projection(proj, &apply_rht(m, signs)?)
    };
    finish(p, SketchKind::Projection, sketched, transformed, sketch_apply, start, params, opts, diag_sketch, signs.seed())
}

#[allow(clippy::too_many_arguments)]
fn finish(
    p: &LsProblem,
    kind: SketchKind,
    sketched: DenseMatrix,
    transform: Duration,
    sketch_apply: Duration,
    start: Instant,
    params: &SketchParams,
    opts: &SolveOptions,
    diag_sketch: impl Fn(&DenseMatrix) -> Result<DenseMatrix>,
    seed: Option<u64>,
) -> Result<SketchOutcome> {
    let t = Instant::now();
    let (xa, xb) = sketched.split_last_column();
    let x_tilde = match opts.inner {
        InnerSolver::Qr => solve_exact_ls(&xa, &xb)?,
        InnerSolver::Cgnr { tol, max_iter } => {
            // CGNR has no rank test of its own.
            qr_factor(&xa)?;
            cgnr_solve(&xa, &xb, tol, max_iter)?
        }
    };
    let small_solve = t.elapsed();
    let total = start.elapsed();

    let residual = p.residual(&x_tilde)?;
    let z_exact = if opts.compute_exact || opts.diagnostics {
        Some(p.exact()?.residual)
    } else {
        None
    };
    let diagnostics = if opts.diagnostics {
        Some(diagnose(p, params.epsilon, &diag_sketch)?)
    } else {
        None
    };

    let seed = seed.unwrap_or(0);
    Ok(SketchOutcome {
        kind,
        x_tilde,
        residual,
        z_exact,
        timings: PhaseTimings { transform, sketch_apply, small_solve, total },
        diagnostics,
        params: params.clone(),
        seed,
        effective_seed: seed,
        retries: 0,
    })
}

fn diagnose(
    p: &LsProblem,
    eps: f64,
    sketch: &impl Fn(&DenseMatrix) -> Result<DenseMatrix>,
) -> Result<Diagnostics> {
    let u = orthonormal_basis(p.a())?;
    let b_perp = project_out(&u, p.b())?;
    let z = norm2(&b_perp);
    let gamma = gamma_fraction(&u, p.b())?;
    let sv = gram_singular_values(p.a())?;
    let kappa = condition_number(p.a())?;

    let (xu, xb) = sketch(&pad_augmented(&u, &b_perp))?.split_last_column();
    let report = verify_conditions(&xu, &xb, z, eps)?;
    Ok(Diagnostics {
        sigma_xu: report.sigma_xu,
        cross_term: report.cross_term,
        z,
        gamma,
        kappa,
        sigma_min: *sv.last().unwrap(),
        embedding_ok: report.embedding_ok,
        cross_term_ok: report.cross_term_ok,
    })
}

/// Checks the two structural conditions for a sketched basis `X U` and
/// sketched residual direction `X b_perp`.
pub fn verify_conditions(xu: &DenseMatrix, xb_perp: &[f64], z: f64, eps: f64) -> Result<ConditionReport> {
    if xb_perp.len() != xu.rows() {
        return Err(Error::DimensionMismatch(format!(
            "sketched residual of length {} for {} sketched rows",
            xb_perp.len(),
            xu.rows()
        )));
    }
    if z < 0.0 {
        return Err(Error::InvalidParameter(format!("Z = {z} is negative")));
    }
    let sigma_xu = gram_singular_values(xu)?;
    let cross = xu.tr_matvec(xb_perp)?;
    let cross_term = dot(&cross, &cross);
    let smin = *sigma_xu.last().unwrap();
    Ok(ConditionReport {
        embedding_ok: smin * smin >= std::f64::consts::FRAC_1_SQRT_2,
        cross_term_ok: cross_term <= eps * z * z / 2.0,
        sigma_xu,
        cross_term,
    })
}

/// `gamma = ||U U^T b|| / ||b||` for orthonormal `U`.
pub fn gamma_fraction(u: &DenseMatrix, b: &[f64]) -> Result<f64> {
    let nb = norm2(b);
    if nb == 0.0 {
        return Err(Error::ZeroRhs);
    }
    Ok((norm2(&u.tr_matvec(b)?) / nb).clamp(0.0, 1.0))
}

/// Right-hand sides of the three error bounds that hold when both
/// structural conditions do.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBounds {
    /// `(1 + eps) Z`
    pub residual: f64,
    /// `sqrt(eps) kappa sqrt(gamma^-2 - 1) ||x_opt||`
    pub forward_gamma: f64,
    /// `sqrt(eps) Z / sigma_min(A)`
    pub forward_z: f64,
}

pub fn predicted_error_bounds(
    kappa: f64,
    gamma: f64,
    eps: f64,
    x_norm: f64,
    z: f64,
    sigma_min: f64,
) -> Result<ErrorBounds> {
    if gamma == 0.0 {
        return Err(Error::InvalidGamma);
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} outside (0, 1]")));
    }
    if kappa.is_nan() || kappa < 1.0 {
        return Err(Error::InvalidParameter(format!("kappa = {kappa} below 1")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidEpsilon { value: eps, range: "(0, 1)" });
    }
    let root = eps.sqrt();
    Ok(ErrorBounds {
        residual: (1.0 + eps) * z,
        forward_gamma: root * kappa * (1.0 / (gamma * gamma) - 1.0).max(0.0).sqrt() * x_norm,
        forward_z: root * z / sigma_min,
    })
}

/// Conjugate gradients on `M^T M x = M^T v` (CGLS form, never forming
/// `M^T M`). Stops when `||M^T (v - M x)|| <= tol ||M^T v||`.
pub fn cgnr_solve(m: &DenseMatrix, v: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let d = m.cols();
    let mut x = vec![0.0; d];
    let mut r = v.to_vec();
    let mut s = m.tr_matvec(&r)?;
    let target = tol * norm2(&s);
    let mut gamma = dot(&s, &s);
    if gamma.sqrt() <= target || gamma == 0.0 {
        return Ok(x);
    }
    let mut dir = s.clone();
    for _ in 0..max_iter {
        let q = m.matvec(&dir)?;
        let qq = dot(&q, &q);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        x.iter_mut().zip(&dir).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= alpha * qi);
        s = m.tr_matvec(&r)?;
        let next = dot(&s, &s);
        if next.sqrt() <= target {
            return Ok(x);
        }
        let beta = next / gamma;
        dir.iter_mut().zip(&s).for_each(|(pi, si)| *pi = si + beta * *pi);
        gamma = next;
    }
    Err(Error::ConvergenceFailure { what: "CGNR", iterations: max_iter })
}

/// Runs `trials` independent solves and keeps the one with the smallest true
/// residual (lowest trial index on ties). Trial 0 uses `seed` itself, so
/// `trials = 1` reproduces a plain solve.
pub fn best_of(
    trials: usize,
    seed: u64,
    mut solve: impl FnMut(u64) -> Result<SketchOutcome>,
) -> Result<SketchOutcome> {
    if trials == 0 {
        return Err(Error::InvalidParameter("best-of needs at least one trial".into()));
    }
    let mut best: Option<SketchOutcome> = None;
    for i in 0..trials as u64 {
        let s = if i == 0 { seed } else { rng::derive_seed(seed, rng::TRIAL, i) };
        let out = solve(s)?;
        if best.as_ref().is_none_or(|b| out.residual < b.residual) {
            best = Some(out);
        }
    }
    Ok(best.unwrap())
}

/// Number of best-of trials that drives failure probability `0.2` per trial
/// below `delta`: `ceil(ln(1/delta) / ln 5)`.
pub fn trials_for_failure_probability(delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} outside (0, 1)")));
    }
    Ok(((1.0 / delta).ln() / 5f64.ln()).ceil().max(1.0) as usize)
}
