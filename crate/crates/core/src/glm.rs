//! Maximum-likelihood logistic regression by iteratively reweighted least
//! squares, with Wald intervals.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::model::{inv_logit, softplus};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GlmError {
    #[error("design has {rows} rows but y has {n} entries")]
    LengthMismatch { rows: usize, n: usize },
    #[error("need at least as many observations ({n}) as columns ({cols})")]
    TooFewRows { n: usize, cols: usize },
    #[error("design matrix contains non-finite values")]
    NonFinite,
}

/// Coefficients larger than this on the logit scale are treated as
/// diverging.
pub const SEPARATION_LIMIT: f64 = 30.0;
pub const SCORE_TOL: f64 = 1e-8;
pub const MAX_ITER: usize = 100;
const STEP_TOL: f64 = 1e-6;
const Z_975: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub ci95: Vec<(f64, f64)>,
    pub converged: bool,
    pub n_iterations: usize,
    /// Largest absolute score component at the returned coefficients.
    pub max_score: f64,
    /// Set when the fit stopped for a reason other than convergence.
    pub diagnostic: Option<String>,
}

impl LogisticFit {
    /// Fitted probabilities for the rows of `w`.
    pub fn fitted(&self, w: &DMatrix<f64>) -> Vec<f64> {
        let beta = DVector::from_column_slice(&self.coefficients);
        (w * beta).iter().map(|&eta| inv_logit(eta)).collect()
    }
}

fn neg_loglik(y: &[bool], eta: &DVector<f64>) -> f64 {
    y.iter()
        .zip(eta.iter())
        .map(|(&yi, &e)| if yi { softplus(-e) } else { softplus(e) })
        .sum()
}

/// Fits `P(y = 1) = inv_logit(W beta)`. `w` should contain an intercept
/// column.
pub fn fit_logistic(y: &[bool], w: &DMatrix<f64>) -> Result<LogisticFit, GlmError> {
    let (n, cols) = w.shape();
    if n != y.len() {
        return Err(GlmError::LengthMismatch {
            rows: n,
            n: y.len(),
        });
    }
    if n < cols || cols == 0 {
        return Err(GlmError::TooFewRows { n, cols });
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(GlmError::NonFinite);
    }
    let yv = DVector::from_iterator(n, y.iter().map(|&b| if b { 1.0 } else { 0.0 }));

    let mut beta = DVector::zeros(cols);
    let mut eta = w * &beta;
    let mut nll = neg_loglik(y, &eta);
    let mut diagnostic = None;
    let mut converged = false;
    let mut iterations = 0;
    let mut info: DMatrix<f64>;
    let mut score;

    loop {
        let mu = eta.map(inv_logit);
        let weights = mu.map(|m| m * (1.0 - m));
        score = w.tr_mul(&(&yv - &mu));
        let mut ww = w.clone();
        for (mut row, &wt) in ww.row_iter_mut().zip(weights.iter()) {
            row *= wt;
        }
        info = w.tr_mul(&ww);

        let Some(chol) = info.clone().cholesky() else {
            diagnostic = Some("information matrix is singular".into());
            break;
        };
        let step = chol.solve(&score);
        // Under separation the score vanishes while Newton steps stay O(1),
        // so a small score alone is not enough.
        if score.amax() < SCORE_TOL && step.amax() < STEP_TOL * (1.0 + beta.amax()) {
            converged = true;
            break;
        }
        if iterations == MAX_ITER {
            diagnostic = Some(format!("no convergence after {MAX_ITER} iterations"));
            break;
        }
        iterations += 1;

        // Newton step, halved while the likelihood gets worse.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = &beta + &step * t;
            let cand_eta = w * &cand;
            let cand_nll = neg_loglik(y, &cand_eta);
            if cand_nll <= nll + 1e-12 * nll.abs().max(1.0) {
                beta = cand;
                eta = cand_eta;
                nll = cand_nll;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            diagnostic = Some("line search failed".into());
            break;
        }
        if beta.amax() > SEPARATION_LIMIT {
            diagnostic = Some(format!(
                "coefficients diverging (|coef| > {SEPARATION_LIMIT}); the data are likely separated"
            ));
            let mu = eta.map(inv_logit);
            score = w.tr_mul(&(&yv - &mu));
            break;
        }
    }

    let covariance = info.clone().try_inverse();
    let standard_errors: Vec<f64> = match &covariance {
        Some(c) => (0..cols).map(|j| c[(j, j)].max(0.0).sqrt()).collect(),
        None => vec![f64::INFINITY; cols],
    };
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let ci95 = coefficients
        .iter()
        .zip(&standard_errors)
        .map(|(&c, &se)| (c - Z_975 * se, c + Z_975 * se))
        .collect();
    Ok(LogisticFit {
        coefficients,
        standard_errors,
        ci95,
        converged,
        n_iterations: iterations,
        max_score: score.amax(),
        diagnostic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn intercept(n: usize) -> DMatrix<f64> {
        DMatrix::from_element(n, 1, 1.0)
    }

    #[test]
    fn intercept_only_gives_logit_of_proportion() {
        let y: Vec<bool> = (0..100).map(|i| i < 27).collect();
        let fit = fit_logistic(&y, &intercept(100)).unwrap();
        assert!(fit.converged);
        assert!(fit.max_score < 1e-6);
        assert!((fit.coefficients[0] - (0.27f64 / 0.73).ln()).abs() < 1e-10);
        // SE of the logit is 1 / sqrt(n p (1 - p)).
        let se = 1.0 / (100.0f64 * 0.27 * 0.73).sqrt();
        assert!((fit.standard_errors[0] - se).abs() < 1e-10);
        let (lo, hi) = fit.ci95[0];
        assert_eq!(lo, fit.coefficients[0] - 1.96 * fit.standard_errors[0]);
        assert_eq!(hi, fit.coefficients[0] + 1.96 * fit.standard_errors[0]);
    }

    #[test]
    fn constant_outcome_reports_separation() {
        for v in [true, false] {
            let fit = fit_logistic(&vec![v; 40], &intercept(40)).unwrap();
            assert!(!fit.converged);
            assert!(fit.diagnostic.is_some());
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(fit_logistic(&[true, false], &intercept(3)).is_err());
        assert!(fit_logistic(&[true], &DMatrix::from_element(1, 2, 1.0)).is_err());
        let mut w = intercept(2);
        w[(0, 0)] = f64::NAN;
        assert!(fit_logistic(&[true, false], &w).is_err());
    }

    fn simulate(n: usize, coefs: &[f64], seed: u64) -> (Vec<bool>, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = coefs.len();
        let w = DMatrix::from_fn(n, k, |_, j| {
            if j == 0 {
                1.0
            } else {
                rng.sample(StandardNormal)
            }
        });
        let y = (0..n)
            .map(|i| {
                let eta: f64 = (0..k).map(|j| w[(i, j)] * coefs[j]).sum();
                rng.random::<f64>() < inv_logit(eta)
            })
            .collect();
        (y, w)
    }

    #[test]
    fn recovers_simulated_coefficients() {
        let truth = [-1.0, 1.05];
        let (y, w) = simulate(5000, &truth, 3);
        let fit = fit_logistic(&y, &w).unwrap();
        assert!(fit.converged);
        for j in 0..2 {
            assert!((fit.coefficients[j] - truth[j]).abs() < 3.0 * fit.standard_errors[j]);
        }
    }

    #[test]
    fn rescaling_a_column() {
        let (y, w) = simulate(800, &[0.3, -0.54, 1.05], 9);
        let base = fit_logistic(&y, &w).unwrap();
        let c = 7.5;
        let mut w2 = w.clone();
        w2.column_mut(2).scale_mut(c);
        let scaled = fit_logistic(&y, &w2).unwrap();
        assert!((scaled.coefficients[2] * c - base.coefficients[2]).abs() < 1e-8);
        assert!((scaled.standard_errors[2] * c - base.standard_errors[2]).abs() < 1e-8);
        for (a, b) in base.fitted(&w).iter().zip(scaled.fitted(&w2)) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
