//! Approximating `A A^T` by `C C^T`, where `C` holds `c` columns of `A`
//! sampled i.i.d. with probabilities `p_i` and rescaled by `1/sqrt(c p_i)`.
//!
//! With `||A||_2 <= 1`, `p_i >= beta ||A^(i)||^2 / ||A||_F^2` and
//! `c >= 96 ||A||_F^2 / (beta eps^2) ln(96 ||A||_F^2 / (beta eps^2 sqrt(delta)))`,
//! the spectral error `||A A^T - C C^T||_2` is at most `eps` with probability
//! at least `1 - delta`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, spectral_norm_sym, DenseMatrix};
use crate::rng;

/// Sampling distribution over the columns of `A` plus the number of draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSampler {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    c: usize,
    beta: f64,
    /// `max_i ||A^(i)|| / sqrt(p_i)` over columns with `p_i > 0`.
    max_scaled_norm: f64,
}

fn column_norms_sq(a: &DenseMatrix) -> Vec<f64> {
    let mut norms = vec![0.0; a.cols()];
    for i in 0..a.rows() {
        for (acc, v) in norms.iter_mut().zip(a.row(i)) {
            *acc += v * v;
        }
    }
    norms
}

/// Norm-squared column probabilities `p_i = ||A^(i)||^2 / ||A||_F^2`. These
/// meet the floor `p_i >= beta ||A^(i)||^2 / ||A||_F^2` for every
/// `beta` in `(0, 1]`.
pub fn column_probabilities(a: &DenseMatrix, beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let norms = column_norms_sq(a);
    let total: f64 = norms.iter().sum();
    if total == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(norms.into_iter().map(|v| v / total).collect())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParameter(format!("beta = {beta} outside (0, 1]")));
    }
    Ok(())
}

impl ColumnSampler {
    /// Validates `probs` against `A`: nonnegative, summing to 1 within 1e-12,
    /// and above the `beta` floor for every column.
    pub fn new(a: &DenseMatrix, probs: Vec<f64>, c: usize, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if c == 0 {
            return Err(Error::InvalidParameter("c must be at least 1".into()));
        }
        if probs.len() != a.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for {} columns",
                probs.len(),
                a.cols()
            )));
        }
        if let Some(i) = probs.iter().position(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidParameter(format!("p[{i}] = {} is not a probability", probs[i])));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("probabilities sum to {sum}")));
        }
        let norms = column_norms_sq(a);
        let total: f64 = norms.iter().sum();
        if total == 0.0 {
            return Err(Error::ZeroMatrix);
        }
        let mut max_scaled_sq = 0.0f64;
        for (i, (&p, &nrm)) in probs.iter().zip(&norms).enumerate() {
            let floor = beta * nrm / total;
            // Relative slack for the rounding in p_i = nrm / total.
            if p < floor * (1.0 - 1e-12) {
                return Err(Error::ProbabilityFloor { index: i, prob: p, floor });
            }
            if p > 0.0 {
                max_scaled_sq = max_scaled_sq.max(nrm / p);
            }
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(ColumnSampler { probs, cumulative, c, beta, max_scaled_norm: max_scaled_sq.sqrt() })
    }

    /// Exact norm-squared probabilities (`beta = 1`).
    pub fn norm_squared(a: &DenseMatrix, c: usize) -> Result<Self> {
        let probs = column_probabilities(a, 1.0)?;
        Self::new(a, probs, c, 1.0)
    }

    /// Uniform probabilities `1/n`, with the largest `beta` they satisfy.
    pub fn uniform(a: &DenseMatrix, c: usize) -> Result<Self> {
        let n = a.cols();
        let norms = column_norms_sq(a);
        let total: f64 = norms.iter().sum();
        if total == 0.0 {
            return Err(Error::ZeroMatrix);
        }
        let p = 1.0 / n as f64;
        let beta = norms
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|&v| p * total / v)
            .fold(f64::INFINITY, f64::min)
            .min(1.0);
        Self::new(a, vec![p; n], c, beta)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `M = max_i ||A^(i)|| / sqrt(p_i)`, the bound on a single rescaled draw.
    pub fn max_scaled_norm(&self) -> f64 {
        self.max_scaled_norm
    }

    /// `(2c)^2 exp(-c eps^2 / (16 M^2 + 8 M^2 eps))`: the failure probability
    /// bound for spectral error `eps` (can exceed 1).
    pub fn failure_bound(&self, eps: f64) -> f64 {
        let c = self.c as f64;
        let m2 = self.max_scaled_norm * self.max_scaled_norm;
        (2.0 * c).powi(2) * (-c * eps * eps / (16.0 * m2 + 8.0 * m2 * eps)).exp()
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().unwrap();
        let u = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.probs.len() - 1)
    }

    /// The `c` sampled column indices for `seed`, by inverse CDF.
    pub fn draw_indices(&self, seed: u64) -> Vec<usize> {
        let mut g = rng::stream(seed, rng::COLUMNS, 0);
        (0..self.c).map(|_| self.draw(&mut g)).collect()
    }
}

/// Materialized `C = A S`: column `t` is `A^(i_t) / sqrt(c p_{i_t})`.
pub fn exactly_c(a: &DenseMatrix, sampler: &ColumnSampler, seed: u64) -> Result<DenseMatrix> {
    check_sampler(a, sampler)?;
    let idx = sampler.draw_indices(seed);
    let c = sampler.c as f64;
    let scales: Vec<f64> = idx.iter().map(|&i| 1.0 / (c * sampler.probs[i]).sqrt()).collect();
    Ok(DenseMatrix::from_fn(a.rows(), idx.len(), |r, t| a[(r, idx[t])] * scales[t]))
}

/// `C C^T` accumulated one rank-one term per draw, without forming `C`.
/// Uses the same draws as [`exactly_c`] for the same seed.
pub fn sampled_gram(a: &DenseMatrix, sampler: &ColumnSampler, seed: u64) -> Result<DenseMatrix> {
    check_sampler(a, sampler)?;
    let m = a.rows();
    let c = sampler.c as f64;
    let mut acc = DenseMatrix::zeros(m, m);
    let mut col = vec![0.0; m];
    for i in sampler.draw_indices(seed) {
        let w = 1.0 / (c * sampler.probs[i]);
        for (r, v) in col.iter_mut().enumerate() {
            *v = a[(r, i)];
        }
        for r in 0..m {
            let s = w * col[r];
            for t in r..m {
                acc[(r, t)] += s * col[t];
            }
        }
    }
    for r in 0..m {
        for t in 0..r {
            acc[(r, t)] = acc[(t, r)];
        }
    }
    Ok(acc)
}

fn check_sampler(a: &DenseMatrix, sampler: &ColumnSampler) -> Result<()> {
    if sampler.probs.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "sampler over {} columns for a matrix with {} columns",
            sampler.probs.len(),
            a.cols()
        )));
    }
    Ok(())
}

/// Smallest `c` meeting the sample-size bound. Requires `||A||_F^2 >= 1/24`.
pub fn c_lower_bound(frob_sq: f64, beta: f64, eps: f64, delta: f64) -> Result<usize> {
    check_beta(beta)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidEpsilon { value: eps, range: "(0, 1)" });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} outside (0, 1)")));
    }
    if frob_sq.is_nan() || frob_sq < 1.0 / 24.0 {
        return Err(Error::FrobeniusTooSmall(frob_sq));
    }
    let eta = 96.0 * frob_sq / (beta * eps * eps);
    Ok((eta * (eta / delta.sqrt()).ln()).ceil() as usize)
}

/// `A A^T` with exact symmetry.
pub fn gram_outer(a: &DenseMatrix) -> DenseMatrix {
    let m = a.rows();
    let mut g = DenseMatrix::zeros(m, m);
    for r in 0..m {
        for t in r..m {
            let v: f64 = a.row(r).iter().zip(a.row(t)).map(|(x, y)| x * y).sum();
            g[(r, t)] = v;
            g[(t, r)] = v;
        }
    }
    g
}

/// `||A A^T - C C^T||_2`
pub fn matmul_error(a: &DenseMatrix, c: &DenseMatrix) -> Result<f64> {
    if a.rows() != c.rows() {
        return Err(Error::DimensionMismatch(format!(
            "A has {} rows, C has {}",
            a.rows(),
            c.rows()
        )));
    }
    gram_error(a, &gram_outer(c))
}

/// `||A A^T - G||_2` for an accumulated estimate `G` of `A A^T`.
pub fn gram_error(a: &DenseMatrix, gram: &DenseMatrix) -> Result<f64> {
    let exact = gram_outer(a);
    spectral_norm_sym(&exact.sub(gram)?)
}

/// `A / (||A||_2 (1 + 1e-10))`, returned with the divisor, so that the
/// result has spectral norm strictly below 1.
pub fn rescale_to_unit_spectral_norm(a: &DenseMatrix) -> Result<(DenseMatrix, f64)> {
    let s = spectral_norm(a)?;
    if s == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let factor = s * (1.0 + 1e-10);
    Ok((a.scaled(1.0 / factor), factor))
}

/// Rejects inputs outside the hypotheses of the sample-size bound:
/// `||A||_2 <= 1` (to 1e-8) and `||A||_F^2 >= 1/24`.
pub fn check_bound_hypotheses(a: &DenseMatrix) -> Result<()> {
    let s = spectral_norm(a)?;
    if s > 1.0 + 1e-8 {
        return Err(Error::SpectralNormTooLarge(s));
    }
    let f = a.frobenius_norm().powi(2);
    if f < 1.0 / 24.0 {
        return Err(Error::FrobeniusTooSmall(f));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_matrix;

    #[test]
    fn equal_columns_give_uniform_probabilities() {
        let a = DenseMatrix::from_rows(&[vec![1.0, -1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let p = column_probabilities(&a, 1.0).unwrap();
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn norm_squared_probabilities() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(column_probabilities(&a, 1.0).unwrap(), vec![0.2, 0.8]);
        let p = column_probabilities(&gaussian_matrix(5, 40, 1), 0.5).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert_eq!(column_probabilities(&DenseMatrix::zeros(2, 2), 1.0), Err(Error::ZeroMatrix));
    }

    #[test]
    fn floor_violations_are_rejected() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert!(ColumnSampler::new(&a, vec![0.5, 0.5], 10, 0.5).is_ok());
        assert!(matches!(
            ColumnSampler::new(&a, vec![0.5, 0.5], 10, 1.0),
            Err(Error::ProbabilityFloor { index: 1, .. })
        ));
        let u = ColumnSampler::uniform(&a, 10).unwrap();
        assert!((u.beta() - 0.625).abs() < 1e-15);
        assert!(ColumnSampler::new(&a, vec![0.5, 0.6], 10, 0.1).is_err());
    }

    #[test]
    fn single_column_is_exact() {
        let a = DenseMatrix::column_vector(&[1.0, 2.0, -3.0]);
        let s = ColumnSampler::norm_squared(&a, 7).unwrap();
        let c = exactly_c(&a, &s, 4).unwrap();
        assert_eq!(c.cols(), 7);
        for t in 0..7 {
            for r in 0..3 {
                assert!((c[(r, t)] - a[(r, 0)] / 7f64.sqrt()).abs() < 1e-15);
            }
        }
        assert!(matmul_error(&a, &c).unwrap() < 1e-12);
        assert!(gram_error(&a, &sampled_gram(&a, &s, 4).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn error_extremes() {
        let a = gaussian_matrix(4, 9, 2);
        assert_eq!(matmul_error(&a, &a).unwrap(), 0.0);
        let zero = DenseMatrix::zeros(4, 1);
        let s = spectral_norm(&a).unwrap();
        assert!((matmul_error(&a, &zero).unwrap() - s * s).abs() <= 1e-6 * s * s);
    }

    #[test]
    fn streaming_matches_materialized() {
        let a = gaussian_matrix(5, 30, 3);
        let s = ColumnSampler::norm_squared(&a, 200).unwrap();
        let c = exactly_c(&a, &s, 11).unwrap();
        let g = sampled_gram(&a, &s, 11).unwrap();
        assert!(g.sub(&gram_outer(&c)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn sample_size_bound() {
        // 96 * 4 / 0.25 = 1536; ceil(1536 ln(1536 / sqrt(0.1))) = 13038
        assert_eq!(c_lower_bound(4.0, 1.0, 0.5, 0.1).unwrap(), 13_038);
        let c1 = c_lower_bound(2.0, 1.0, 0.5, 0.1).unwrap();
        let c2 = c_lower_bound(4.0, 1.0, 0.5, 0.1).unwrap();
        assert!(c2 > 2 * c1);
        assert!(matches!(c_lower_bound(1.0 / 48.0, 1.0, 0.5, 0.1), Err(Error::FrobeniusTooSmall(_))));
    }

    #[test]
    fn hypotheses_and_rescaling() {
        let a = gaussian_matrix(8, 100, 5);
        assert!(matches!(check_bound_hypotheses(&a), Err(Error::SpectralNormTooLarge(_))));
        let (scaled, factor) = rescale_to_unit_spectral_norm(&a).unwrap();
        assert!(factor > 1.0);
        assert!(spectral_norm(&scaled).unwrap() < 1.0);
        check_bound_hypotheses(&scaled).unwrap();
        let tiny = DenseMatrix::from_rows(&[vec![0.1, 0.0], vec![0.0, 0.1]]).unwrap();
        assert!(matches!(check_bound_hypotheses(&tiny), Err(Error::FrobeniusTooSmall(_))));
    }

    #[test]
    fn zero_probability_columns_are_never_drawn() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0, 0.0, 3.0]]).unwrap();
        let s = ColumnSampler::norm_squared(&a, 5000).unwrap();
        let idx = s.draw_indices(1);
        assert!(idx.iter().all(|&i| i == 1 || i == 3));
        assert_eq!(idx, s.draw_indices(1));
    }
}
