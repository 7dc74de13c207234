//! The zero-inflated Bernoulli model.
//!
//! An observation is zero either structurally (the unit was never exposed,
//! probability `1 - omega`) or by chance (exposed but no event, probability
//! `omega * (1 - p)`). Without covariates only the product `omega * p` is
//! identified by the likelihood; the priors in [`PriorConfig`] separate the
//! two. With covariates both probabilities get their own logit-linear model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

fn check_probability(name: &str, v: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter(format!(
            "{name} must be a probability in [0, 1], got {v}"
        )))
    }
}

/// Exposure probability `omega` and event probability among the exposed `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZibParams {
    omega: f64,
    p: f64,
}

impl ZibParams {
    pub fn new(omega: f64, p: f64) -> Result<Self, ModelError> {
        check_probability("omega", omega)?;
        check_probability("p", p)?;
        Ok(Self { omega, p })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Marginal probability of a one, `omega * p`.
    pub fn success_probability(&self) -> f64 {
        self.omega * self.p
    }

    /// Probability mass of outcome `y`. The zero mass is computed as the
    /// complement of the one mass so the pair sums to one exactly.
    pub fn mass(&self, y: bool) -> f64 {
        let one = self.omega * self.p;
        if y {
            one
        } else {
            1.0 - one
        }
    }

    /// Mass of zero written as structural plus sampling zeros.
    pub fn mass_zero_decomposed(&self) -> (f64, f64) {
        (1.0 - self.omega, self.omega * (1.0 - self.p))
    }
}

/// How the coefficient prior scales are treated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaMode {
    /// Prior standard deviations held at the configured values.
    Fixed,
    /// Both standard deviations get a half-normal(0, `scale`) prior and are
    /// sampled on the log scale.
    Hyperprior { scale: f64 },
}

/// Uniform box prior for the no-covariate model plus normal priors for the
/// regression coefficients of the covariate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub coef_sigma_theta: f64,
    pub coef_sigma_beta: f64,
    pub sigma_mode: SigmaMode,
}

pub const DEFAULT_COEF_SIGMA: f64 = 5.0;
pub const DEFAULT_HYPERPRIOR_SCALE: f64 = 2.5;

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            omega_lo: 0.0,
            omega_hi: 0.5,
            p_lo: 0.5,
            p_hi: 1.0,
            coef_sigma_theta: DEFAULT_COEF_SIGMA,
            coef_sigma_beta: DEFAULT_COEF_SIGMA,
            sigma_mode: SigmaMode::Fixed,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let boxes = [
            ("omega", self.omega_lo, self.omega_hi),
            ("p", self.p_lo, self.p_hi),
        ];
        for (name, lo, hi) in boxes {
            if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                return Err(ModelError::InvalidParameter(format!(
                    "{name} prior support must satisfy 0 <= lo < hi <= 1, got [{lo}, {hi}]"
                )));
            }
        }
        let scales = [
            ("coef_sigma_theta", self.coef_sigma_theta),
            ("coef_sigma_beta", self.coef_sigma_beta),
        ];
        for (name, v) in scales {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if let SigmaMode::Hyperprior { scale } = self.sigma_mode {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(ModelError::InvalidParameter(format!(
                    "hyperprior scale must be positive, got {scale}"
                )));
            }
        }
        Ok(())
    }

    pub fn with_omega_box(mut self, lo: f64, hi: f64) -> Self {
        self.omega_lo = lo;
        self.omega_hi = hi;
        self
    }

    pub fn with_p_box(mut self, lo: f64, hi: f64) -> Self {
        self.p_lo = lo;
        self.p_hi = hi;
        self
    }

    pub fn hyperprior(&self) -> bool {
        matches!(self.sigma_mode, SigmaMode::Hyperprior { .. })
    }
}

/// Sample size and number of ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SufficientStats {
    n: u64,
    s: u64,
}

impl SufficientStats {
    pub fn new(n: u64, s: u64) -> Result<Self, ModelError> {
        if s > n {
            return Err(ModelError::InvalidData(format!(
                "success count {s} exceeds sample size {n}"
            )));
        }
        Ok(Self { n, s })
    }

    pub fn from_outcomes(y: &[bool]) -> Self {
        Self {
            n: y.len() as u64,
            s: y.iter().filter(|&&v| v).count() as u64,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn s(&self) -> u64 {
        self.s
    }
}

/// Outcomes with the covariates of the exposure part (`x`, one row per
/// observation, no intercept column) and of the event part (`z`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<bool>,
    x: DMatrix<f64>,
    z: DMatrix<f64>,
    x_names: Vec<String>,
    z_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        y: Vec<bool>,
        x: DMatrix<f64>,
        z: DMatrix<f64>,
        x_names: Vec<String>,
        z_names: Vec<String>,
    ) -> Result<Self, ModelError> {
        let n = y.len();
        if x.nrows() != n || z.nrows() != n {
            return Err(ModelError::DimensionMismatch(format!(
                "outcome has {n} rows, covariate matrices have {} and {}",
                x.nrows(),
                z.nrows()
            )));
        }
        if x_names.len() != x.ncols() || z_names.len() != z.ncols() {
            return Err(ModelError::DimensionMismatch(
                "column names do not match covariate matrix widths".into(),
            ));
        }
        if x.iter().chain(z.iter()).any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidData("covariates must be finite".into()));
        }
        Ok(Self {
            y,
            x,
            z,
            x_names,
            z_names,
        })
    }

    /// Outcomes without covariates (intercept-only on both sides).
    pub fn intercept_only(y: Vec<bool>) -> Self {
        let n = y.len();
        Self {
            y,
            x: DMatrix::zeros(n, 0),
            z: DMatrix::zeros(n, 0),
            x_names: Vec::new(),
            z_names: Vec::new(),
        }
    }

    /// Like [`Dataset::new`] but also requires at least one observation.
    pub fn non_empty(
        y: Vec<bool>,
        x: DMatrix<f64>,
        z: DMatrix<f64>,
        x_names: Vec<String>,
        z_names: Vec<String>,
    ) -> Result<Self, ModelError> {
        if y.is_empty() {
            return Err(ModelError::InvalidData(
                "at least one observation is required".into(),
            ));
        }
        Self::new(y, x, z, x_names, z_names)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.z.ncols()
    }

    pub fn y(&self) -> &[bool] {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn x_names(&self) -> &[String] {
        &self.x_names
    }

    pub fn z_names(&self) -> &[String] {
        &self.z_names
    }

    pub fn stats(&self) -> SufficientStats {
        SufficientStats::from_outcomes(&self.y)
    }

    /// Rows `idx` only, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            y: idx.iter().map(|&i| self.y[i]).collect(),
            x: self.x.select_rows(idx),
            z: self.z.select_rows(idx),
            x_names: self.x_names.clone(),
            z_names: self.z_names.clone(),
        }
    }
}

/// Regression coefficients: `theta` for the exposure logit, `beta` for the
/// event logit. Index 0 of each block is the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefVector {
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
}

impl CoefVector {
    pub fn new(theta: Vec<f64>, beta: Vec<f64>) -> Result<Self, ModelError> {
        if theta.is_empty() || beta.is_empty() {
            return Err(ModelError::InvalidParameter(
                "both coefficient blocks need at least an intercept".into(),
            ));
        }
        if theta.iter().chain(beta.iter()).any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidParameter(
                "coefficients must be finite".into(),
            ));
        }
        Ok(Self { theta, beta })
    }

    pub fn zeros(k: usize, q: usize) -> Self {
        Self {
            theta: vec![0.0; k + 1],
            beta: vec![0.0; q + 1],
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.theta.iter().chain(self.beta.iter()).copied().collect()
    }

    pub fn k(&self) -> usize {
        self.theta.len() - 1
    }

    pub fn q(&self) -> usize {
        self.beta.len() - 1
    }
}

/// `ln(x / (1 - x))`.
pub fn logit(x: f64) -> Result<f64, ModelError> {
    if !(x > 0.0 && x < 1.0) {
        return Err(ModelError::InvalidParameter(format!(
            "logit requires 0 < x < 1, got {x}"
        )));
    }
    Ok((x / (1.0 - x)).ln())
}

pub fn inv_logit(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `ln inv_logit(t)`.
pub(crate) fn ln_inv_logit(t: f64) -> f64 {
    -softplus(-t)
}

/// Log-likelihood of `s` ones in `n` draws of `Bernoulli(omega * p)`.
/// Returns `-inf` when the data are impossible under the parameters.
pub fn loglik_nocov(stats: SufficientStats, params: ZibParams) -> f64 {
    let t = params.success_probability();
    let ones = stats.s as f64;
    let zeros = (stats.n - stats.s) as f64;
    let mut ll = 0.0;
    if stats.s > 0 {
        ll += ones * t.ln();
    }
    if stats.n > stats.s {
        ll += zeros * (-t).ln_1p();
    }
    if ll.is_nan() {
        f64::NEG_INFINITY
    } else {
        ll
    }
}

/// Coordinate layout of the flattened covariate-model parameter vector:
/// `theta` (k+1), `beta` (q+1), then `ln sigma_theta`, `ln sigma_beta` when
/// the hyperprior is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CovLayout {
    pub k: usize,
    pub q: usize,
    pub hyper: bool,
}

impl CovLayout {
    pub fn for_data(data: &Dataset, prior: &PriorConfig) -> Self {
        Self {
            k: data.k(),
            q: data.q(),
            hyper: prior.hyperprior(),
        }
    }

    pub fn dim(&self) -> usize {
        self.k + self.q + 2 + if self.hyper { 2 } else { 0 }
    }

    pub fn beta_offset(&self) -> usize {
        self.k + 1
    }

    pub fn names(&self, x_names: &[String], z_names: &[String]) -> Vec<String> {
        let mut out = Vec::with_capacity(self.dim());
        out.push("theta0".to_string());
        for (j, name) in x_names.iter().enumerate().take(self.k) {
            out.push(if name.is_empty() {
                format!("theta{}", j + 1)
            } else {
                format!("theta.{name}")
            });
        }
        out.push("beta0".to_string());
        for (j, name) in z_names.iter().enumerate().take(self.q) {
            out.push(if name.is_empty() {
                format!("beta{}", j + 1)
            } else {
                format!("beta.{name}")
            });
        }
        if self.hyper {
            out.push("log_sigma_theta".into());
            out.push("log_sigma_beta".into());
        }
        out
    }

    /// Positional names `theta0..thetak, beta0..betaq`.
    pub fn generic_names(&self) -> Vec<String> {
        let mut out: Vec<String> = (0..=self.k).map(|j| format!("theta{j}")).collect();
        out.extend((0..=self.q).map(|j| format!("beta{j}")));
        if self.hyper {
            out.push("log_sigma_theta".into());
            out.push("log_sigma_beta".into());
        }
        out
    }

    pub fn check(&self, params: &[f64]) -> Result<(), ModelError> {
        if params.len() != self.dim() {
            return Err(ModelError::DimensionMismatch(format!(
                "expected {} parameters (k={}, q={}, hyperprior={}), got {}",
                self.dim(),
                self.k,
                self.q,
                self.hyper,
                params.len()
            )));
        }
        Ok(())
    }

    /// Flattens coefficients, appending log prior scales in hyperprior mode.
    pub fn pack(&self, coefs: &CoefVector, prior: &PriorConfig) -> Result<Vec<f64>, ModelError> {
        if coefs.k() != self.k || coefs.q() != self.q {
            return Err(ModelError::DimensionMismatch(format!(
                "coefficients have k={}, q={} but data have k={}, q={}",
                coefs.k(),
                coefs.q(),
                self.k,
                self.q
            )));
        }
        let mut v = coefs.flatten();
        if self.hyper {
            v.push(prior.coef_sigma_theta.ln());
            v.push(prior.coef_sigma_beta.ln());
        }
        Ok(v)
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn ln_normal(x: f64, sigma: f64) -> f64 {
    -0.5 * (x / sigma).powi(2) - sigma.ln() - LN_SQRT_2PI
}

fn ln_half_normal(x: f64, scale: f64) -> f64 {
    std::f64::consts::LN_2 + ln_normal(x, scale)
}

/// Linear predictors `theta0 + X theta_rest` and `beta0 + Z beta_rest`.
fn linear_predictors(data: &Dataset, theta: &[f64], beta: &[f64]) -> (DVector<f64>, DVector<f64>) {
    let mut eta_w = data.x() * DVector::from_column_slice(&theta[1..]);
    eta_w.add_scalar_mut(theta[0]);
    let mut eta_p = data.z() * DVector::from_column_slice(&beta[1..]);
    eta_p.add_scalar_mut(beta[0]);
    (eta_w, eta_p)
}

/// `ln P(y | eta_w, eta_p)` for one observation.
#[inline]
fn ln_obs(y: bool, a: f64, b: f64) -> f64 {
    if y {
        ln_inv_logit(a) + ln_inv_logit(b)
    } else {
        // 1 - s(a)s(b) = (1 + e^a + e^b) / ((1 + e^a)(1 + e^b))
        ln_sum_exp3(0.0, a, b) - softplus(a) - softplus(b)
    }
}

#[inline]
fn ln_sum_exp3(u: f64, v: f64, w: f64) -> f64 {
    let m = u.max(v).max(w);
    m + ((u - m).exp() + (v - m).exp() + (w - m).exp()).ln()
}

fn prior_scales(params: &[f64], layout: &CovLayout, prior: &PriorConfig) -> (f64, f64) {
    if layout.hyper {
        let n = params.len();
        (params[n - 2].exp(), params[n - 1].exp())
    } else {
        (prior.coef_sigma_theta, prior.coef_sigma_beta)
    }
}

/// Log prior of the flattened parameter vector, including the hyperprior
/// and the log-scale Jacobian when enabled.
fn log_prior(params: &[f64], layout: &CovLayout, prior: &PriorConfig) -> f64 {
    let (sig_t, sig_b) = prior_scales(params, layout, prior);
    let bo = layout.beta_offset();
    let theta = &params[..bo];
    let beta = &params[bo..bo + layout.q + 1];
    let mut lp: f64 = theta.iter().map(|&t| ln_normal(t, sig_t)).sum::<f64>()
        + beta.iter().map(|&b| ln_normal(b, sig_b)).sum::<f64>();
    if let SigmaMode::Hyperprior { scale } = prior.sigma_mode {
        lp += ln_half_normal(sig_t, scale) + sig_t.ln();
        lp += ln_half_normal(sig_b, scale) + sig_b.ln();
    }
    lp
}

/// Unnormalised log posterior of the covariate model on the flattened
/// parameter vector (see [`CovLayout`]).
pub fn log_posterior_flat(
    data: &Dataset,
    params: &[f64],
    prior: &PriorConfig,
) -> Result<f64, ModelError> {
    let layout = CovLayout::for_data(data, prior);
    layout.check(params)?;
    let bo = layout.beta_offset();
    let theta = &params[..bo];
    let beta = &params[bo..bo + layout.q + 1];
    let (eta_w, eta_p) = linear_predictors(data, theta, beta);
    let ll: f64 = data
        .y()
        .iter()
        .zip(eta_w.iter().zip(eta_p.iter()))
        .map(|(&y, (&a, &b))| ln_obs(y, a, b))
        .sum();
    Ok(ll + log_prior(params, &layout, prior))
}

/// Log posterior of the covariate model at `coefs`; in hyperprior mode the
/// prior scales are taken from `prior.coef_sigma_*`.
pub fn log_posterior_cov(
    data: &Dataset,
    coefs: &CoefVector,
    prior: &PriorConfig,
) -> Result<f64, ModelError> {
    let layout = CovLayout::for_data(data, prior);
    log_posterior_flat(data, &layout.pack(coefs, prior)?, prior)
}

/// Analytic gradient of [`log_posterior_flat`].
pub fn grad_log_posterior_flat(
    data: &Dataset,
    params: &[f64],
    prior: &PriorConfig,
) -> Result<Vec<f64>, ModelError> {
    let layout = CovLayout::for_data(data, prior);
    layout.check(params)?;
    let bo = layout.beta_offset();
    let theta = &params[..bo];
    let beta = &params[bo..bo + layout.q + 1];
    let (eta_w, eta_p) = linear_predictors(data, theta, beta);

    // d loglik / d eta for both predictors
    let mut g_a = DVector::zeros(data.n());
    let mut g_b = DVector::zeros(data.n());
    for (i, &y) in data.y().iter().enumerate() {
        let (a, b) = (eta_w[i], eta_p[i]);
        let (sa, sb) = (inv_logit(a), inv_logit(b));
        if y {
            g_a[i] = 1.0 - sa;
            g_b[i] = 1.0 - sb;
        } else {
            let m = a.max(b).max(0.0);
            let (e0, ea, eb) = ((-m).exp(), (a - m).exp(), (b - m).exp());
            let denom = e0 + ea + eb;
            g_a[i] = ea / denom - sa;
            g_b[i] = eb / denom - sb;
        }
    }

    let (sig_t, sig_b) = prior_scales(params, &layout, prior);
    let mut grad = vec![0.0; layout.dim()];
    grad[0] = g_a.sum() - theta[0] / (sig_t * sig_t);
    let gx = data.x().tr_mul(&g_a);
    for j in 0..layout.k {
        grad[1 + j] = gx[j] - theta[1 + j] / (sig_t * sig_t);
    }
    grad[bo] = g_b.sum() - beta[0] / (sig_b * sig_b);
    let gz = data.z().tr_mul(&g_b);
    for j in 0..layout.q {
        grad[bo + 1 + j] = gz[j] - beta[1 + j] / (sig_b * sig_b);
    }
    if let SigmaMode::Hyperprior { scale } = prior.sigma_mode {
        let n = grad.len();
        let ss_t: f64 = theta.iter().map(|t| t * t).sum();
        let ss_b: f64 = beta.iter().map(|b| b * b).sum();
        let s2 = scale * scale;
        grad[n - 2] = ss_t / (sig_t * sig_t) - theta.len() as f64 - sig_t * sig_t / s2 + 1.0;
        grad[n - 1] = ss_b / (sig_b * sig_b) - beta.len() as f64 - sig_b * sig_b / s2 + 1.0;
    }
    Ok(grad)
}

pub fn grad_log_posterior_cov(
    data: &Dataset,
    coefs: &CoefVector,
    prior: &PriorConfig,
) -> Result<Vec<f64>, ModelError> {
    let layout = CovLayout::for_data(data, prior);
    grad_log_posterior_flat(data, &layout.pack(coefs, prior)?, prior)
}

/// Result of [`find_map`].
#[derive(Debug, Clone, PartialEq)]
pub struct MapEstimate {
    pub params: Vec<f64>,
    pub log_posterior: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Posterior mode of the covariate model by quasi-Newton (BFGS) ascent with
/// a backtracking line search, starting from `start` (or the origin).
///
/// In hyperprior mode the joint density is unbounded as the coefficients
/// and their scales shrink to zero, so there is no proper mode to find; use
/// the fixed-scale mode as a starting point instead.
pub fn find_map(
    data: &Dataset,
    prior: &PriorConfig,
    start: Option<&[f64]>,
    max_iter: usize,
) -> Result<MapEstimate, ModelError> {
    let layout = CovLayout::for_data(data, prior);
    let d = layout.dim();
    let mut x = match start {
        Some(s) => {
            layout.check(s)?;
            DVector::from_column_slice(s)
        }
        None => {
            let mut v = DVector::zeros(d);
            if layout.hyper {
                v[d - 2] = prior.coef_sigma_theta.ln();
                v[d - 1] = prior.coef_sigma_beta.ln();
            }
            v
        }
    };
    let f = |v: &DVector<f64>| log_posterior_flat(data, v.as_slice(), prior);
    let g = |v: &DVector<f64>| {
        grad_log_posterior_flat(data, v.as_slice(), prior).map(DVector::from_vec)
    };

    let mut fx = f(&x)?;
    let mut gx = g(&x)?;
    // inverse Hessian approximation of the negated objective
    let mut h_inv = DMatrix::<f64>::identity(d, d);
    let tol = 1e-9;
    let mut iterations = 0;
    let mut converged = gx.amax() < tol;
    while !converged && iterations < max_iter {
        iterations += 1;
        let mut dir = &h_inv * &gx;
        if dir.dot(&gx) <= 0.0 {
            h_inv = DMatrix::identity(d, d);
            dir = gx.clone();
        }
        let slope = dir.dot(&gx);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = &x + &dir * step;
            let fc = f(&cand)?;
            if fc.is_finite() && fc >= fx + 1e-4 * step * slope {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            break;
        };
        let g_new = g(&x_new)?;
        let s = &x_new - &x;
        // gradient of the negated objective changes by -(g_new - g)
        let yv = &gx - &g_new;
        let sy = s.dot(&yv);
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(d, d);
            let left = &eye - &s * yv.transpose() * rho;
            let right = &eye - &yv * s.transpose() * rho;
            h_inv = &left * &h_inv * &right + &s * s.transpose() * rho;
        }
        x = x_new;
        fx = f_new;
        gx = g_new;
        converged = gx.amax() < tol;
    }
    Ok(MapEstimate {
        grad_norm: gx.norm(),
        params: x.as_slice().to_vec(),
        log_posterior: fx,
        iterations,
        converged,
    })
}
