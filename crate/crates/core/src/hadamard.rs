//! Normalized Walsh-Hadamard transform and the randomized transform `H D`.
//!
//! All transforms here use the same in-place butterfly schedule: stage `h`
//! (for `h = n/2, n/4, ..., 1`) replaces each pair of rows `(j, j + h)` inside
//! a block of `2h` rows by `(x_j + x_{j+h}, x_j - x_{j+h})`, and the result is
//! scaled by `n^{-1/2}` once at the end. Splitting on the leading index bit
//! first is what lets [`partial_rht_rows`] prune the butterflies whose
//! outputs are never read while doing bit-for-bit the same arithmetic on the
//! ones it keeps.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng;

/// Random +-1 diagonal `D`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignDiagonal {
    signs: Vec<i8>,
    seed: Option<u64>,
}

impl SignDiagonal {
    /// Explicit signs, e.g. all `+1` to strip the randomization.
    pub fn from_signs(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::InvalidParameter("empty sign diagonal".into()));
        }
        if let Some(i) = signs.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter(format!("sign {} at {i} is not +-1", signs[i])));
        }
        Ok(SignDiagonal { signs, seed: None })
    }

    pub fn ones(n: usize) -> Self {
        SignDiagonal { signs: vec![1; n], seed: None }
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// Seed the diagonal was drawn from, if it was drawn.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    #[inline]
    fn factor(&self, i: usize) -> f64 {
        f64::from(self.signs[i])
    }
}

/// `n` independent fair signs from `seed`.
pub fn sample_signs(n: usize, seed: u64) -> SignDiagonal {
    let mut r = rng::stream(seed, rng::SIGNS, 0);
    let signs = (0..n).map(|_| if r.random::<bool>() { 1 } else { -1 }).collect();
    SignDiagonal { signs, seed: Some(seed) }
}

fn check_pow2(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        Err(Error::NotPowerOfTwo(n))
    } else {
        Ok(())
    }
}

#[inline]
fn butterfly(top: &mut [f64], bottom: &mut [f64]) {
    for (a, b) in top.iter_mut().zip(bottom.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = x + y;
        *b = x - y;
    }
}

/// Unnormalized transform of a row-major block of `n` rows of `width` values;
/// every column is transformed independently.
fn fwht_rows_unscaled(buf: &mut [f64], width: usize) {
    let n = buf.len() / width;
    let mut h = n / 2;
    while h >= 1 {
        for block in buf.chunks_exact_mut(2 * h * width) {
            let (top, bottom) = block.split_at_mut(h * width);
            butterfly(top, bottom);
        }
        h /= 2;
    }
}

#[inline]
fn norm_scale(n: usize) -> f64 {
    1.0 / (n as f64).sqrt()
}

/// In-place normalized transform `x <- n^{-1/2} H_n x`.
pub fn fwht_in_place(x: &mut [f64]) -> Result<()> {
    check_pow2(x.len())?;
    fwht_rows_unscaled(x, 1);
    let s = norm_scale(x.len());
    x.iter_mut().for_each(|v| *v *= s);
    Ok(())
}

/// Normalized Walsh-Hadamard transform of `x`. The normalized matrix is
/// symmetric and orthogonal, so the transform is its own inverse.
pub fn fwht_normalized(x: &[f64]) -> Result<Vec<f64>> {
    let mut out = x.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

fn signed_copy(a: &DenseMatrix, d: &SignDiagonal) -> Result<Vec<f64>> {
    check_pow2(a.rows())?;
    if d.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "sign diagonal of length {} for {} rows",
            d.len(),
            a.rows()
        )));
    }
    let mut buf = a.as_slice().to_vec();
    for (i, row) in buf.chunks_exact_mut(a.cols()).enumerate() {
        if d.signs[i] < 0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok(buf)
}

/// `H D A`, transforming all columns at once.
pub fn apply_rht(a: &DenseMatrix, d: &SignDiagonal) -> Result<DenseMatrix> {
    let mut buf = signed_copy(a, d)?;
    fwht_rows_unscaled(&mut buf, a.cols());
    let s = norm_scale(a.rows());
    buf.iter_mut().for_each(|v| *v *= s);
    DenseMatrix::from_row_major(a.rows(), a.cols(), buf)
}

/// Applies `D` to a vector.
pub fn apply_signs(x: &[f64], d: &SignDiagonal) -> Result<Vec<f64>> {
    if d.len() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "sign diagonal of length {} for vector of length {}",
            d.len(),
            x.len()
        )));
    }
    Ok(x.iter().enumerate().map(|(i, v)| d.factor(i) * v).collect())
}

/// Rows `rows` of `H D A`, in the order requested (duplicates allowed).
///
/// Only butterflies that feed a requested output are evaluated, which costs
/// `O(n d log r)` for `r` distinct rows instead of `O(n d log n)`. When more
/// than a quarter of the rows are wanted the full transform is cheaper and is
/// used instead. Either way the values are bit-identical to slicing
/// [`apply_rht`].
pub fn partial_rht_rows(a: &DenseMatrix, d: &SignDiagonal, rows: &[usize]) -> Result<DenseMatrix> {
    let n = a.rows();
    let width = a.cols();
    if let Some(&bad) = rows.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    if rows.is_empty() {
        return Err(Error::InvalidParameter("no rows requested".into()));
    }
    let mut buf = signed_copy(a, d)?;

    let mut wanted = rows.to_vec();
    wanted.sort_unstable();
    wanted.dedup();

    let s = norm_scale(n);
    let mut out = Vec::with_capacity(rows.len() * width);
    if wanted.len() > n / 4 {
        fwht_rows_unscaled(&mut buf, width);
        for &i in rows {
            out.extend(buf[i * width..(i + 1) * width].iter().map(|v| v * s));
        }
    } else {
        let mut computed = Vec::with_capacity(wanted.len() * width);
        pruned_transform(&mut buf, width, &wanted, 0, &mut computed);
        for &i in rows {
            let slot = wanted.binary_search(&i).expect("requested row was computed");
            out.extend(computed[slot * width..(slot + 1) * width].iter().map(|v| v * s));
        }
    }
    DenseMatrix::from_row_major(rows.len(), width, out)
}

/// Recursive pruned butterfly over `seg` (a power-of-two block of rows).
/// `wanted` holds sorted, distinct row offsets relative to `offset`; the
/// unscaled output rows are appended to `out` in ascending order.
fn pruned_transform(seg: &mut [f64], width: usize, wanted: &[usize], offset: usize, out: &mut Vec<f64>) {
    let m = seg.len() / width;
    if m == 1 {
        out.extend_from_slice(seg);
        return;
    }
    let h = m / 2;
    let split = wanted.partition_point(|&i| i - offset < h);
    let (lo, hi) = wanted.split_at(split);
    let (top, bottom) = seg.split_at_mut(h * width);
    match (lo.is_empty(), hi.is_empty()) {
        (false, false) => butterfly(top, bottom),
        (false, true) => {
            for (a, b) in top.iter_mut().zip(bottom.iter()) {
                *a += *b;
            }
        }
        (true, false) => {
            for (a, b) in top.iter().zip(bottom.iter_mut()) {
                *b = *a - *b;
            }
        }
        (true, true) => return,
    }
    if !lo.is_empty() {
        pruned_transform(top, width, lo, offset, out);
    }
    if !hi.is_empty() {
        pruned_transform(bottom, width, hi, offset + h, out);
    }
}

/// `(A, b)` zero-padded to a power-of-two number of rows.
#[derive(Debug, Clone)]
pub struct PaddedProblem {
    pub original_n: usize,
    pub padded_n: usize,
    pub a_pad: DenseMatrix,
    pub b_pad: Vec<f64>,
}

/// Appends zero rows to `A` and zeros to `b` up to the next power of two.
/// Zero rows add nothing to `||A x - b||`, so solutions and residuals carry
/// over unchanged.
pub fn pad_pow2(a: &DenseMatrix, b: &[f64]) -> Result<PaddedProblem> {
    let n = a.rows();
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side of length {} for {n} rows",
            b.len()
        )));
    }
    let padded_n = n.next_power_of_two();
    let (a_pad, b_pad) = if padded_n == n {
        (a.clone(), b.to_vec())
    } else {
        let mut data = a.as_slice().to_vec();
        data.resize(padded_n * a.cols(), 0.0);
        let mut bp = b.to_vec();
        bp.resize(padded_n, 0.0);
        (DenseMatrix::from_row_major(padded_n, a.cols(), data)?, bp)
    };
    Ok(PaddedProblem { original_n: n, padded_n, a_pad, b_pad })
}
