//! Sketching operators and their sizes.
//!
//! Two operators are built here: the uniform row sampler `S^T` (r rows drawn
//! with replacement, each rescaled by `sqrt(n/r)`) and the sparse projection
//! `T` (k x n, each entry `+-1/sqrt(kq)` with probability `q/2` apiece and zero
//! otherwise).
//!
//! The worst-case sizes guaranteeing the error bounds carry large constants
//! (`48^2`, `118^2`, ...) and exceed `n` for any problem that fits in memory.
//! [`SketchParams::theory`] therefore clamps them at `n` and raises a flag,
//! while [`SketchParams::practical`] supplies sizes that work well in
//! practice.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{axpy, DenseMatrix};
use crate::rng;

/// Default `C_q` and `C_k`; the constants are unspecified in the bounds.
pub const DEFAULT_C_Q: f64 = 1.0;
pub const DEFAULT_C_K: f64 = 1.0;
/// `C_q` used by the practical sizes.
pub const PRACTICAL_C_Q: f64 = 0.1;
/// Above this sparsity every cell gets its own uniform draw; below it the
/// generator skips ahead geometrically between nonzeros.
pub const DENSE_DRAW_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeMode {
    TheoryFormula,
    UserOverride,
}

/// A sketch dimension with the unclamped formula value it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SketchSize {
    pub value: usize,
    pub formula: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionSize {
    pub q: f64,
    pub q_formula: f64,
    pub k: usize,
    pub k_formula: f64,
    /// `q` hit 1 or `k` exceeded `n`.
    pub clamped: bool,
}

fn check_dims(n: usize, d: usize) -> Result<()> {
    if d == 0 || d > n {
        return Err(Error::InvalidParameter(format!("need 1 <= d <= n, got n = {n}, d = {d}")));
    }
    Ok(())
}

fn check_eps(eps: f64, upper: f64, range: &'static str) -> Result<()> {
    if !(eps > 0.0 && eps < upper) {
        return Err(Error::InvalidEpsilon { value: eps, range });
    }
    Ok(())
}

/// `ln(40 n d)`, the log factor shared by all the size formulas.
fn log_term(n: usize, d: usize) -> f64 {
    (40.0 * n as f64 * d as f64).ln()
}

/// Number of sampled rows:
/// `max{48^2 d ln(40nd) ln(100^2 d ln(40nd)), 40 d ln(40nd) / eps}`, rounded
/// up and clamped to `n`.
pub fn sampling_size_r(n: usize, d: usize, eps: f64) -> Result<SketchSize> {
    check_dims(n, d)?;
    check_eps(eps, 1.0, "(0, 1)")?;
    let l = log_term(n, d);
    let d = d as f64;
    let embed = 48.0 * 48.0 * d * l * (100.0 * 100.0 * d * l).ln();
    let cross = 40.0 * d * l / eps;
    let formula = embed.max(cross).ceil();
    Ok(clamp_size(formula, n))
}

fn clamp_size(formula: f64, n: usize) -> SketchSize {
    if formula > n as f64 {
        SketchSize { value: n, formula, clamped: true }
    } else {
        SketchSize { value: formula as usize, formula, clamped: false }
    }
}

fn projection_formulas(n: usize, d: usize, eps: f64, c_q: f64, c_k: f64) -> ProjectionSize {
    let l = log_term(n, d);
    let nf = n as f64;
    let df = d as f64;
    let q_formula = c_q * df * l / nf * (2.0 * nf.ln() + 16.0 * df + 16.0);
    let k_formula = (c_k * (118.0 * 118.0 * df + 98.0 * 98.0)).max(60.0 * df / eps).ceil();
    let q = q_formula.min(1.0);
    let k = clamp_size(k_formula, n);
    ProjectionSize { q, q_formula, k: k.value, k_formula, clamped: q_formula >= 1.0 || k.clamped }
}

/// Sparsity and row count of the projection:
/// `q = C_q d ln(40nd) / n * (2 ln n + 16 d + 16)` capped at 1 and
/// `k = max{C_k (118^2 d + 98^2), 60 d / eps}` clamped to `n`.
pub fn projection_params(n: usize, d: usize, eps: f64, c_q: f64, c_k: f64) -> Result<ProjectionSize> {
    check_dims(n, d)?;
    check_eps(eps, 0.5, "(0, 1/2)")?;
    if !(c_q > 0.0 && c_k > 0.0) {
        return Err(Error::InvalidParameter(format!("C_q = {c_q}, C_k = {c_k} must be positive")));
    }
    Ok(projection_formulas(n, d, eps, c_q, c_k))
}

/// Row count for uniform sampling that works at desk scale:
/// `min(n, ceil(4 d ln(40nd)))`.
pub fn practical_r(n: usize, d: usize) -> usize {
    ((4.0 * d as f64 * log_term(n, d)).ceil() as usize).clamp(d, n)
}

/// `min(n, ceil(4 d / eps))`
pub fn practical_k(n: usize, d: usize, eps: f64) -> usize {
    ((4.0 * d as f64 / eps).ceil() as usize).clamp(d, n)
}

/// The `q` formula with `C_q = 0.1`, capped at 1.
pub fn practical_q(n: usize, d: usize) -> f64 {
    projection_formulas(n, d, 0.25, PRACTICAL_C_Q, DEFAULT_C_K).q
}

/// Sizes and constants for one sketch-and-solve run.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchParams {
    pub mode: SizeMode,
    pub epsilon: f64,
    /// Sampled rows (row-sampling solver).
    pub r: usize,
    /// Projection rows (sparse-projection solver).
    pub k: usize,
    /// Projection sparsity.
    pub q: f64,
    pub c_q: f64,
    pub c_k: f64,
    /// Some theory size had to be clamped to fit.
    pub clamped: bool,
}

impl SketchParams {
    /// Sizes from the worst-case formulas with the given constants.
    ///
    /// The `k` formula is well defined for any `eps`, but the projection
    /// bounds only cover `eps < 1/2`; the projection solver enforces that
    /// in this mode.
    pub fn theory(n: usize, d: usize, eps: f64, c_q: f64, c_k: f64) -> Result<Self> {
        let r = sampling_size_r(n, d, eps)?;
        if !(c_q > 0.0 && c_k > 0.0) {
            return Err(Error::InvalidParameter(format!("C_q = {c_q}, C_k = {c_k} must be positive")));
        }
        let p = projection_formulas(n, d, eps, c_q, c_k);
        Ok(SketchParams {
            mode: SizeMode::TheoryFormula,
            epsilon: eps,
            r: r.value,
            k: p.k,
            q: p.q,
            c_q,
            c_k,
            clamped: r.clamped || p.clamped,
        })
    }

    pub fn practical(n: usize, d: usize, eps: f64) -> Result<Self> {
        check_dims(n, d)?;
        check_eps(eps, 1.0, "(0, 1)")?;
        Ok(SketchParams {
            mode: SizeMode::UserOverride,
            epsilon: eps,
            r: practical_r(n, d),
            k: practical_k(n, d, eps),
            q: practical_q(n, d),
            c_q: PRACTICAL_C_Q,
            c_k: DEFAULT_C_K,
            clamped: false,
        })
    }

    pub fn with_r(mut self, r: usize) -> Self {
        self.r = r;
        self.mode = SizeMode::UserOverride;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self.mode = SizeMode::UserOverride;
        self
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = q;
        self.mode = SizeMode::UserOverride;
        self
    }

    pub(crate) fn validate_sampling(&self, d: usize) -> Result<()> {
        check_eps(self.epsilon, 1.0, "(0, 1)")?;
        if self.r < d {
            return Err(Error::InvalidParameter(format!("r = {} is below d = {d}", self.r)));
        }
        Ok(())
    }

    pub(crate) fn validate_projection(&self, d: usize) -> Result<()> {
        match self.mode {
            SizeMode::TheoryFormula => check_eps(self.epsilon, 0.5, "(0, 1/2)")?,
            SizeMode::UserOverride => check_eps(self.epsilon, 1.0, "(0, 1)")?,
        }
        if self.k < d {
            return Err(Error::InvalidParameter(format!("k = {} is below d = {d}", self.k)));
        }
        check_sparsity(self.q)
    }
}

fn check_sparsity(q: f64) -> Result<()> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidSparsity(q));
    }
    Ok(())
}

/// `S^T` in compact form: which rows to keep and the common rescaling.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    n: usize,
    indices: Vec<usize>,
    scale: f64,
}

impl SamplingPlan {
    /// A plan with explicit indices; used for degenerate and replayed sketches.
    pub fn from_indices(n: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter("sampling plan needs r >= 1".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, len: n });
        }
        let scale = (n as f64 / indices.len() as f64).sqrt();
        Ok(SamplingPlan { n, indices, scale })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// `sqrt(n / r)`
    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// `r` i.i.d. uniform row indices in `[0, n)`, with replacement.
pub fn draw_sampling_plan(n: usize, r: usize, seed: u64) -> Result<SamplingPlan> {
    if n == 0 || r == 0 {
        return Err(Error::InvalidParameter(format!("sampling plan needs n, r >= 1 (n = {n}, r = {r})")));
    }
    let mut g = rng::stream(seed, rng::SAMPLING, 0);
    let indices = (0..r).map(|_| g.random_range(0..n)).collect();
    SamplingPlan::from_indices(n, indices)
}

/// `S^T M`: the sampled rows of `M`, each multiplied by `sqrt(n/r)`.
pub fn apply_sampling(plan: &SamplingPlan, m: &DenseMatrix) -> Result<DenseMatrix> {
    if m.rows() != plan.n {
        return Err(Error::DimensionMismatch(format!(
            "sampling plan over {} rows applied to {} rows",
            plan.n,
            m.rows()
        )));
    }
    let mut data = Vec::with_capacity(plan.r() * m.cols());
    for &i in &plan.indices {
        data.extend(m.row(i).iter().map(|v| v * plan.scale));
    }
    DenseMatrix::from_row_major(plan.r(), m.cols(), data)
}

/// One nonzero of `T`; its magnitude is shared by the whole matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparseEntry {
    pub row: u32,
    pub col: u32,
    pub negative: bool,
}

/// The k x n sparse sign matrix `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseProjection {
    k: usize,
    n: usize,
    q: f64,
    magnitude: f64,
    entries: Vec<SparseEntry>,
    seed: u64,
}

impl SparseProjection {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `1/sqrt(kq)`
    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Nonzeros in row-major order.
    pub fn entries(&self) -> &[SparseEntry] {
        &self.entries
    }

    /// `(row, col, value)` triplets.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(move |e| (e.row as usize, e.col as usize, self.value(e)))
    }

    #[inline]
    fn value(&self, e: &SparseEntry) -> f64 {
        if e.negative {
            -self.magnitude
        } else {
            self.magnitude
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.k, self.n);
        for (i, j, v) in self.triplets() {
            t[(i, j)] = v;
        }
        t
    }
}

/// Draws `T` cell by cell in row-major order: nonzero with probability `q`,
/// fair sign, magnitude `1/sqrt(kq)`.
pub fn draw_sparse_projection(k: usize, n: usize, q: f64, seed: u64) -> Result<SparseProjection> {
    check_sparsity(q)?;
    if k == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!("projection needs k, n >= 1 (k = {k}, n = {n})")));
    }
    if k > u32::MAX as usize || n > u32::MAX as usize {
        return Err(Error::InvalidParameter("projection dimensions exceed u32".into()));
    }
    let mut g = rng::stream(seed, rng::PROJECTION, 0);
    let cells = k * n;
    let mut entries = Vec::with_capacity(((cells as f64) * q * 1.05) as usize + 16);
    let entry = |pos: usize, negative: bool| SparseEntry {
        row: (pos / n) as u32,
        col: (pos % n) as u32,
        negative,
    };

    if q > DENSE_DRAW_THRESHOLD {
        let half = q / 2.0;
        for row in 0..k as u32 {
            for col in 0..n as u32 {
                let u: f64 = g.random();
                if u < q {
                    entries.push(SparseEntry { row, col, negative: u >= half });
                }
            }
        }
    } else {
        // Gaps between nonzeros are geometric with success probability q.
        let log_miss = (-q).ln_1p();
        let mut pos = 0usize;
        loop {
            let u: f64 = 1.0 - g.random::<f64>();
            let skip = (u.ln() / log_miss).floor();
            if skip >= (cells - pos) as f64 {
                break;
            }
            pos += skip as usize;
            entries.push(entry(pos, g.random::<bool>()));
            pos += 1;
            if pos >= cells {
                break;
            }
        }
    }

    Ok(SparseProjection {
        k,
        n,
        q,
        magnitude: 1.0 / (k as f64 * q).sqrt(),
        entries,
        seed,
    })
}

/// `T M` in `O(nnz(T) d)`.
pub fn apply_sparse_projection(t: &SparseProjection, m: &DenseMatrix) -> Result<DenseMatrix> {
    if m.rows() != t.n {
        return Err(Error::DimensionMismatch(format!(
            "projection over {} columns applied to {} rows",
            t.n,
            m.rows()
        )));
    }
    let mut out = DenseMatrix::zeros(t.k, m.cols());
    for e in &t.entries {
        axpy(t.value(e), m.row(e.col as usize), out.row_mut(e.row as usize));
    }
    Ok(out)
}

/// `T x`
pub fn project_vector(t: &SparseProjection, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != t.n {
        return Err(Error::DimensionMismatch(format!(
            "projection over {} columns applied to vector of length {}",
            t.n,
            x.len()
        )));
    }
    let mut out = vec![0.0; t.k];
    for e in &t.entries {
        out[e.row as usize] += t.value(e) * x[e.col as usize];
    }
    Ok(out)
}
