use super::matrix::{axpy, dot, norm2, DenseMatrix};
use crate::error::{Error, Result};

/// Diagonal entries of `R` at or below this fraction of the largest one mark
/// the input as rank deficient.
pub const RANK_TOL: f64 = 1e-12;

/// Thin QR factors of a tall matrix: `A = Q R` with `Q` n x d and `R` d x d.
#[derive(Debug, Clone)]
pub struct QrFactors {
    pub q_thin: DenseMatrix,
    /// Upper triangular with a nonnegative diagonal; entries below the
    /// diagonal are exact zeros.
    pub r_upper: DenseMatrix,
}

impl QrFactors {
    /// Solves `R x = Q^T b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let qtb = self.q_thin.tr_matvec(b)?;
        Ok(back_substitute(&self.r_upper, &qtb))
    }
}

/// Householder QR of a tall matrix (`rows >= cols`).
///
/// Fails with [`Error::RankDeficient`] when some `|R_ii|` falls to
/// `RANK_TOL * max_j |R_jj|`; there is no pivoting and no pseudo-rank fallback.
pub fn qr_factor(a: &DenseMatrix) -> Result<QrFactors> {
    let (n, d) = a.shape();
    if n < d {
        return Err(Error::DimensionMismatch(format!(
            "QR needs rows >= cols, got {n}x{d}"
        )));
    }
    let mut w = a.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut s = vec![0.0; d];

    for k in 0..d {
        let mut v: Vec<f64> = (k..n).map(|i| w[(i, k)]).collect();
        let norm_x = norm2(&v);
        if norm_x == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if v[0] > 0.0 { -norm_x } else { norm_x };
        v[0] -= alpha;
        let vv = dot(&v, &v);
        if vv == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        // W[k.., k..] -= (2 / v'v) v (v' W[k.., k..])
        let tail = &mut s[k..];
        tail.iter_mut().for_each(|x| *x = 0.0);
        for (off, &vi) in v.iter().enumerate() {
            axpy(vi, &w.row(k + off)[k..], tail);
        }
        let beta = 2.0 / vv;
        for (off, &vi) in v.iter().enumerate() {
            axpy(-beta * vi, tail, &mut w.row_mut(k + off)[k..]);
        }
        w[(k, k)] = alpha;
        for i in k + 1..n {
            w[(i, k)] = 0.0;
        }
        reflectors.push(v);
    }

    let mut r = DenseMatrix::from_fn(d, d, |i, j| if j >= i { w[(i, j)] } else { 0.0 });

    // Q = H_0 H_1 ... H_{d-1} [I_d; 0]
    let mut q = DenseMatrix::from_fn(n, d, |i, j| if i == j { 1.0 } else { 0.0 });
    for k in (0..d).rev() {
        let v = &reflectors[k];
        if v.is_empty() {
            continue;
        }
        let vv = dot(v, v);
        let tail = &mut s[..];
        tail.iter_mut().for_each(|x| *x = 0.0);
        for (off, &vi) in v.iter().enumerate() {
            axpy(vi, q.row(k + off), tail);
        }
        let beta = 2.0 / vv;
        for (off, &vi) in v.iter().enumerate() {
            axpy(-beta * vi, tail, q.row_mut(k + off));
        }
    }

    for k in 0..d {
        if r[(k, k)] < 0.0 {
            for j in k..d {
                r[(k, j)] = -r[(k, j)];
            }
            for i in 0..n {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }

    let max_diag = (0..d).fold(0.0f64, |m, i| m.max(r[(i, i)].abs()));
    if let Some(index) = (0..d).find(|&i| r[(i, i)].abs() <= RANK_TOL * max_diag || max_diag == 0.0) {
        return Err(Error::RankDeficient { index, value: r[(index, index)].abs(), max: max_diag });
    }

    Ok(QrFactors { q_thin: q, r_upper: r })
}

fn back_substitute(r: &DenseMatrix, y: &[f64]) -> Vec<f64> {
    let d = r.cols();
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let row = r.row(i);
        let s: f64 = (i + 1..d).map(|j| row[j] * x[j]).sum();
        x[i] = (y[i] - s) / row[i];
    }
    x
}

/// Minimizer of `||A x - b||_2` for full-column-rank `A`.
pub fn solve_exact_ls(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side of length {} for {} rows",
            b.len(),
            a.rows()
        )));
    }
    qr_factor(a)?.solve(b)
}

/// `||A x - b||_2`
pub fn residual_norm(a: &DenseMatrix, x: &[f64], b: &[f64]) -> Result<f64> {
    let ax = a.matvec(x)?;
    if b.len() != ax.len() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side of length {} for {} rows",
            b.len(),
            ax.len()
        )));
    }
    Ok(ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
}

/// An orthonormal basis for `range(A)`, taken from the thin QR factor.
///
/// This is not the left singular basis, but the two differ by a d x d
/// rotation, so singular values of `X U` for any sketch `X`, and every
/// projection onto the column space, come out the same.
pub fn orthonormal_basis(a: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(qr_factor(a)?.q_thin)
}

/// `b - U (U^T b)`: the component of `b` orthogonal to the columns of `U`.
pub fn project_out(u: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let coeffs = u.tr_matvec(b)?;
    let mut out = b.to_vec();
    for (i, o) in out.iter_mut().enumerate() {
        *o -= dot(u.row(i), &coeffs);
    }
    Ok(out)
}
