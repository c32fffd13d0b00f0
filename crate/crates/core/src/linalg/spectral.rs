use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{norm2, DenseMatrix};
use crate::error::{Error, Result};
use crate::rng;

pub const JACOBI_MAX_SWEEPS: usize = 30;
pub const JACOBI_TOL: f64 = 1e-12;
pub const POWER_MAX_ITER: usize = 1000;
pub const POWER_TOL: f64 = 1e-6;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
///
/// Sweeps stop once the off-diagonal Frobenius mass is at most
/// `JACOBI_TOL * ||G||_F`.
pub fn symmetric_eigenvalues(g: &DenseMatrix) -> Result<Vec<f64>> {
    let n = g.rows();
    if g.cols() != n {
        return Err(Error::DimensionMismatch(format!("eigenvalues of a {}x{} matrix", n, g.cols())));
    }
    let asym = g.asymmetry();
    if asym > 1e-10 * g.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let mut a = g.clone();
    let total = a.frobenius_norm();
    let off = |a: &DenseMatrix| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&a) > JACOBI_TOL * total {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::ConvergenceFailure { what: "Jacobi eigensolver", iterations: sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + tau.hypot(1.0));
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                // A <- J^T A J, J the rotation in the (p, q) plane.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(eig)
}

/// Singular values of a tall matrix, descending, from the eigenvalues of the
/// d x d Gram matrix `M^T M`.
///
/// Squaring costs half the working precision on the small end of the
/// spectrum; for the diagnostics these feed that is acceptable.
pub fn gram_singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    if m.rows() < m.cols() {
        return Err(Error::DimensionMismatch(format!(
            "gram_singular_values needs rows >= cols, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let gram = m.tr_matmul(m)?;
    let gram = symmetrize(&gram);
    Ok(symmetric_eigenvalues(&gram)?.into_iter().map(|l| l.max(0.0).sqrt()).collect())
}

fn symmetrize(g: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(g.rows(), g.cols(), |i, j| 0.5 * (g[(i, j)] + g[(j, i)]))
}

/// `sigma_max / sigma_min` of a full-column-rank matrix.
pub fn condition_number(a: &DenseMatrix) -> Result<f64> {
    let sv = gram_singular_values(a)?;
    let (max, min) = (sv[0], *sv.last().unwrap());
    if min <= 1e-12 * max || max == 0.0 {
        return Err(Error::RankDeficient { index: sv.len() - 1, value: min, max });
    }
    Ok(max / min)
}

/// Largest singular value of any matrix, through the Gram matrix of its
/// thinner orientation.
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    if a.rows() >= a.cols() {
        Ok(gram_singular_values(a)?[0])
    } else {
        Ok(gram_singular_values(&a.transpose())?[0])
    }
}

/// `max |lambda|` of a symmetric matrix by power iteration from a seeded
/// random start.
///
/// Iteration stops once the relative change of `||M v||` drops below
/// `POWER_TOL * (1 - rho)`, where `rho` is the observed contraction of
/// successive changes. Nearly degenerate top magnitudes make `rho` approach 1;
/// in that case the estimate is already within the gap, and reaching the
/// iteration cap with a change under `POWER_TOL` is accepted.
pub fn spectral_norm_sym(m: &DenseMatrix) -> Result<f64> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::DimensionMismatch(format!("spectral_norm_sym of {}x{}", n, m.cols())));
    }
    let asym = m.asymmetry();
    if asym > 1e-10 * m.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    if m.max_abs() == 0.0 {
        return Ok(0.0);
    }

    let mut rng = rng::stream(0x005e_ed0f_0001, rng::POWER, n as u64);
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut est = 0.0;
    let mut prev_change = f64::INFINITY;
    let mut last_rel = f64::INFINITY;
    for _ in 0..POWER_MAX_ITER {
        let w = m.matvec(&v)?;
        let nw = norm2(&w);
        if nw == 0.0 {
            // v landed in the null space; the top eigenvalue has been lost.
            v = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            let nv = norm2(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            continue;
        }
        let change = (nw - est).abs();
        est = nw;
        v = w.into_iter().map(|x| x / nw).collect();
        last_rel = change / est;
        let rho = if prev_change.is_finite() && prev_change > 0.0 {
            (change / prev_change).min(0.99)
        } else {
            0.99
        };
        prev_change = change;
        if last_rel <= POWER_TOL * (1.0 - rho) {
            return Ok(est);
        }
    }
    if last_rel <= POWER_TOL {
        Ok(est)
    } else {
        Err(Error::ConvergenceFailure { what: "power iteration", iterations: POWER_MAX_ITER })
    }
}
