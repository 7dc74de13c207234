//! Closed-form posterior marginals of the no-covariate model.
//!
//! With uniform priors on a box `[omega_lo, omega_hi] x [p_lo, p_hi]` the
//! substitution `t = p * omega` turns the inner integral of the joint kernel
//! `(p omega)^s (1 - p omega)^(n - s)` into a difference of two incomplete
//! beta functions with shape `(s + 1, n - s + 1)`:
//!
//! ```text
//! f(omega) ~ [F(p_hi omega) - F(p_lo omega)] / omega
//! f(p)     ~ [F(omega_hi p) - F(omega_lo p)] / p
//! ```
//!
//! The kernels are evaluated in log space, normalised by adaptive quadrature
//! and tabulated on a refined grid for CDF and quantile queries.

use serde::Serialize;
use thiserror::Error;

use crate::model::{ModelError, PriorConfig, SufficientStats};
use crate::specfun::{self, BetaShape, SpecFunError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numeric(#[from] SpecFunError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("normalisation mismatch: grid {grid} vs quadrature {quadrature}")]
    Normalisation { grid: f64, quadrature: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Omega,
    P,
}

impl Param {
    pub fn name(&self) -> &'static str {
        match self {
            Param::Omega => "omega",
            Param::P => "p",
        }
    }

    /// Prior support of this parameter.
    pub fn support(&self, prior: &PriorConfig) -> (f64, f64) {
        match self {
            Param::Omega => (prior.omega_lo, prior.omega_hi),
            Param::P => (prior.p_lo, prior.p_hi),
        }
    }

    /// Support of the other parameter, which becomes the multiplier range
    /// after substitution.
    fn partner_support(&self, prior: &PriorConfig) -> (f64, f64) {
        match self {
            Param::Omega => (prior.p_lo, prior.p_hi),
            Param::P => (prior.omega_lo, prior.omega_hi),
        }
    }
}

/// Kernel evaluations closer than this to zero are taken at this point; the
/// limit there is finite.
const ZERO_CLAMP: f64 = 1e-12;

/// `ln(F(u) - F(l))` for `l <= u`, choosing the tail that avoids cancellation.
fn ln_cdf_difference(l: f64, u: f64, shape: BetaShape) -> f64 {
    if u <= l {
        return f64::NEG_INFINITY;
    }
    let (ln_fl, ln_ql) = specfun::tails_unchecked(l, shape);
    let (ln_fu, ln_qu) = specfun::tails_unchecked(u, shape);
    if ln_fl < -std::f64::consts::LN_2 {
        if ln_fu == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        ln_fu + specfun::ln_one_minus_exp((ln_fl - ln_fu).min(0.0))
    } else {
        if ln_ql == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        ln_ql + specfun::ln_one_minus_exp((ln_qu - ln_ql).min(0.0))
    }
}

fn ln_kernel(stats: SufficientStats, prior: &PriorConfig, which: Param, x: f64) -> f64 {
    let x = x.max(ZERO_CLAMP);
    let (m_lo, m_hi) = which.partner_support(prior);
    let shape = BetaShape::from_counts(stats.n(), stats.s());
    let u = (m_hi * x).min(1.0);
    let l = (m_lo * x).min(1.0);
    ln_cdf_difference(l, u, shape) - x.ln()
}

fn check_point(prior: &PriorConfig, which: Param, x: f64) -> Result<(), AnalyticError> {
    prior.validate()?;
    let (lo, hi) = which.support(prior);
    if !(x > 0.0 && x > lo && x <= hi) {
        return Err(AnalyticError::Domain(format!(
            "{} must lie in ({lo}, {hi}] and be positive, got {x}",
            which.name()
        )));
    }
    Ok(())
}

/// Log of the unnormalised marginal kernel of `omega`.
pub fn ln_unnorm_marginal_omega(
    stats: SufficientStats,
    prior: &PriorConfig,
    omega: f64,
) -> Result<f64, AnalyticError> {
    check_point(prior, Param::Omega, omega)?;
    Ok(ln_kernel(stats, prior, Param::Omega, omega))
}

/// `[F(p_hi omega) - F(p_lo omega)] / omega`, with `F` the
/// `Beta(s + 1, n - s + 1)` CDF.
pub fn unnorm_marginal_omega(
    stats: SufficientStats,
    prior: &PriorConfig,
    omega: f64,
) -> Result<f64, AnalyticError> {
    ln_unnorm_marginal_omega(stats, prior, omega).map(f64::exp)
}

pub fn ln_unnorm_marginal_p(
    stats: SufficientStats,
    prior: &PriorConfig,
    p: f64,
) -> Result<f64, AnalyticError> {
    check_point(prior, Param::P, p)?;
    Ok(ln_kernel(stats, prior, Param::P, p))
}

/// `[F(omega_hi p) - F(omega_lo p)] / p`.
pub fn unnorm_marginal_p(
    stats: SufficientStats,
    prior: &PriorConfig,
    p: f64,
) -> Result<f64, AnalyticError> {
    ln_unnorm_marginal_p(stats, prior, p).map(f64::exp)
}

/// Median, central 95% interval and mean of a one-dimensional posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PosteriorSummary {
    pub median: f64,
    pub q025: f64,
    pub q975: f64,
    pub mean: f64,
}

const BASE_INTERVALS: usize = 2048;
const GRID_REL_TOL: f64 = 1e-9;
const QUAD_TOL: f64 = 1e-10;
const MAX_REFINE_PASSES: usize = 30;

/// Normalised marginal posterior of `omega` or `p`.
///
/// The density is exact (kernel over quadrature normaliser); the CDF is the
/// cumulative Simpson integral over an adaptively refined grid, completed
/// inside a cell by a Simpson rule on the partial cell.
#[derive(Debug, Clone)]
pub struct MarginalPosterior {
    param: Param,
    stats: SufficientStats,
    prior: PriorConfig,
    lo: f64,
    hi: f64,
    /// Kernel shift applied before exponentiation.
    ln_shift: f64,
    /// Integral of the shifted kernel over the support.
    norm_const: f64,
    nodes: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
}

impl MarginalPosterior {
    pub fn param(&self) -> Param {
        self.param
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Normalising constant of the unnormalised kernel on the log scale.
    pub fn ln_norm_const(&self) -> f64 {
        self.ln_shift + self.norm_const.ln()
    }

    /// Grid of `(value, density)` pairs.
    pub fn grid(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.density.iter().copied())
    }

    pub fn grid_len(&self) -> usize {
        self.nodes.len()
    }

    fn shifted_kernel(&self, x: f64) -> f64 {
        (ln_kernel(self.stats, &self.prior, self.param, x) - self.ln_shift).exp()
    }

    /// Normalised density; zero outside the support.
    pub fn density(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        self.shifted_kernel(x) / self.norm_const
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let i = self.nodes.partition_point(|&v| v <= x) - 1;
        let a = self.nodes[i];
        if x == a {
            return self.cdf[i];
        }
        let mid = 0.5 * (a + x);
        let partial = (x - a) / 6.0 * (self.density[i] + 4.0 * self.density(mid) + self.density(x));
        (self.cdf[i] + partial).clamp(self.cdf[i], self.cdf[i + 1])
    }

    pub fn quantile(&self, prob: f64) -> Result<f64, AnalyticError> {
        if !(0.0..=1.0).contains(&prob) {
            return Err(AnalyticError::Domain(format!(
                "probability must lie in [0, 1], got {prob}"
            )));
        }
        // bracket on the grid first, then bisect inside one cell
        let j = self.cdf.partition_point(|&c| c < prob);
        let (a, b) = if j == 0 {
            (self.lo, self.lo)
        } else if j >= self.nodes.len() {
            (self.hi, self.hi)
        } else {
            (self.nodes[j - 1], self.nodes[j])
        };
        Ok(specfun::invert_monotone(|x| self.cdf(x), prob, a, b)?)
    }

    /// Posterior mean by quadrature of `x * density(x)`.
    pub fn mean(&self) -> Result<f64, AnalyticError> {
        let mut total = 0.0;
        // per-cell integration over a coarse partition of the grid keeps the
        // adaptive rule from skipping sharp features
        let step = (self.nodes.len() / 64).max(1);
        let mut i = 0;
        while i + 1 < self.nodes.len() {
            let j = (i + step).min(self.nodes.len() - 1);
            let tol = QUAD_TOL * (self.nodes[j] - self.nodes[i]) / (self.hi - self.lo);
            total += integrate_lenient(|x| x * self.density(x), self.nodes[i], self.nodes[j], tol)?;
            i = j;
        }
        Ok(total)
    }
}

/// Adaptive quadrature that accepts a result whose achieved error is still
/// tiny even if the requested tolerance was not met.
fn integrate_lenient<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64, SpecFunError> {
    match specfun::integrate(f, lo, hi, tol) {
        Err(SpecFunError::NoConvergence {
            estimate,
            achieved_error,
        }) if achieved_error <= 1e3 * tol => Ok(estimate),
        other => other,
    }
}

/// Builds the normalised marginal of `which`.
pub fn build_marginal(
    stats: SufficientStats,
    prior: &PriorConfig,
    which: Param,
) -> Result<MarginalPosterior, AnalyticError> {
    prior.validate()?;
    let (lo, hi) = which.support(prior);
    let ln_k = |x: f64| ln_kernel(stats, prior, which, x);

    // Uniform base grid; its maximum fixes the scale for exponentiation.
    let base: Vec<f64> = (0..=BASE_INTERVALS)
        .map(|i| {
            if i == BASE_INTERVALS {
                hi
            } else {
                lo + (hi - lo) * i as f64 / BASE_INTERVALS as f64
            }
        })
        .collect();
    let base_ln: Vec<f64> = base.iter().map(|&x| ln_k(x)).collect();
    let ln_shift = base_ln.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !ln_shift.is_finite() {
        return Err(AnalyticError::Domain(
            "posterior kernel vanishes on the whole support".into(),
        ));
    }
    let k = |x: f64| (ln_k(x) - ln_shift).exp();

    let mut nodes = base;
    let mut values: Vec<f64> = base_ln.iter().map(|&v| (v - ln_shift).exp()).collect();
    let mut mids: Vec<f64> = nodes.windows(2).map(|w| k(0.5 * (w[0] + w[1]))).collect();

    // Split cells whose Simpson and trapezoid estimates disagree until the
    // total stops moving.
    let mut previous = simpson_total(&nodes, &values, &mids);
    for _ in 0..MAX_REFINE_PASSES {
        let cell_tol = GRID_REL_TOL * previous / nodes.len() as f64;
        let mut new_nodes = Vec::with_capacity(nodes.len());
        let mut new_values = Vec::with_capacity(nodes.len());
        let mut new_mids = Vec::with_capacity(nodes.len());
        let mut split_any = false;
        for i in 0..nodes.len() - 1 {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let h = b - a;
            let simpson = h / 6.0 * (values[i] + 4.0 * mids[i] + values[i + 1]);
            let trapezoid = h / 2.0 * (values[i] + values[i + 1]);
            new_nodes.push(a);
            new_values.push(values[i]);
            if (simpson - trapezoid).abs() > cell_tol && h > 1e-13 {
                let m = 0.5 * (a + b);
                new_mids.push(k(0.5 * (a + m)));
                new_nodes.push(m);
                new_values.push(mids[i]);
                new_mids.push(k(0.5 * (m + b)));
                split_any = true;
            } else {
                new_mids.push(mids[i]);
            }
        }
        new_nodes.push(*nodes.last().unwrap());
        new_values.push(*values.last().unwrap());
        nodes = new_nodes;
        values = new_values;
        mids = new_mids;
        let total = simpson_total(&nodes, &values, &mids);
        let converged = (total - previous).abs() <= GRID_REL_TOL * total;
        previous = total;
        if !split_any || converged {
            break;
        }
    }

    let norm_const = integrate_lenient(k, lo, hi, QUAD_TOL)?;
    if !(norm_const > 0.0) {
        return Err(AnalyticError::Domain(
            "posterior kernel integrates to zero".into(),
        ));
    }
    if ((previous - norm_const) / norm_const).abs() > 1e-8 {
        return Err(AnalyticError::Normalisation {
            grid: previous,
            quadrature: norm_const,
        });
    }

    let density: Vec<f64> = values.iter().map(|v| v / norm_const).collect();
    let mut cdf = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    cdf.push(0.0);
    for i in 0..nodes.len() - 1 {
        let h = nodes[i + 1] - nodes[i];
        acc += h / 6.0 * (values[i] + 4.0 * mids[i] + values[i + 1]);
        cdf.push(acc / norm_const);
    }
    // pin the endpoint; the discrepancy is below the normalisation check above
    let last = *cdf.last().unwrap();
    for c in cdf.iter_mut() {
        *c /= last;
    }

    Ok(MarginalPosterior {
        param: which,
        stats,
        prior: *prior,
        lo,
        hi,
        ln_shift,
        norm_const,
        nodes,
        density,
        cdf,
    })
}

fn simpson_total(nodes: &[f64], values: &[f64], mids: &[f64]) -> f64 {
    (0..nodes.len() - 1)
        .map(|i| (nodes[i + 1] - nodes[i]) / 6.0 * (values[i] + 4.0 * mids[i] + values[i + 1]))
        .sum()
}

/// Median, 2.5% and 97.5% quantiles and mean.
pub fn summarize(marg: &MarginalPosterior) -> Result<PosteriorSummary, AnalyticError> {
    Ok(PosteriorSummary {
        median: marg.quantile(0.5)?,
        q025: marg.quantile(0.025)?,
        q975: marg.quantile(0.975)?,
        mean: marg.mean()?,
    })
}

/// Both marginals and their summaries.
#[derive(Debug, Clone)]
pub struct NoCovFit {
    pub stats: SufficientStats,
    pub omega: MarginalPosterior,
    pub p: MarginalPosterior,
    pub omega_summary: PosteriorSummary,
    pub p_summary: PosteriorSummary,
}

pub fn fit_nocov(stats: SufficientStats, prior: &PriorConfig) -> Result<NoCovFit, AnalyticError> {
    let omega = build_marginal(stats, prior, Param::Omega)?;
    let p = build_marginal(stats, prior, Param::P)?;
    Ok(NoCovFit {
        stats,
        omega_summary: summarize(&omega)?,
        p_summary: summarize(&p)?,
        omega,
        p,
    })
}

/// One row of the prior/posterior density table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityRow {
    pub param: Param,
    pub value: f64,
    pub prior_density: f64,
    pub posterior_density: f64,
}

pub const DEFAULT_PLOT_POINTS: usize = 4001;

/// Prior and posterior densities of both parameters on `points` equally
/// spaced values spanning each prior support (endpoints included).
pub fn density_grids_for_plotting(
    stats: SufficientStats,
    prior: &PriorConfig,
    points: usize,
) -> Result<Vec<DensityRow>, AnalyticError> {
    if points < 2 {
        return Err(AnalyticError::Domain(
            "need at least two grid points".into(),
        ));
    }
    let mut rows = Vec::with_capacity(2 * points);
    for which in [Param::Omega, Param::P] {
        let marg = build_marginal(stats, prior, which)?;
        let (lo, hi) = which.support(prior);
        let prior_density = 1.0 / (hi - lo);
        for i in 0..points {
            let value = if i + 1 == points {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (points - 1) as f64
            };
            rows.push(DensityRow {
                param: which,
                value,
                prior_density,
                posterior_density: marg.density(value),
            });
        }
    }
    Ok(rows)
}

/// Writes the density table as CSV with header
/// `param,value,prior_density,posterior_density`.
pub fn write_density_csv<W: std::io::Write>(
    rows: &[DensityRow],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "param,value,prior_density,posterior_density")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.param.name(),
            r.value,
            r.prior_density,
            r.posterior_density
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn stats(n: u64, s: u64) -> SufficientStats {
        SufficientStats::new(n, s).unwrap()
    }

    /// Composite Gauss-Legendre nodes on [-1, 1] (Newton on P_n).
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    }

    fn composite_gl<F: Fn(f64) -> f64>(
        f: F,
        lo: f64,
        hi: f64,
        panels: usize,
        rule: &[(f64, f64)],
    ) -> f64 {
        let h = (hi - lo) / panels as f64;
        let mut acc = 0.0;
        for j in 0..panels {
            let a = lo + h * j as f64;
            for &(x, w) in rule {
                acc += w * f(a + 0.5 * h * (x + 1.0));
            }
        }
        acc * 0.5 * h
    }

    #[test]
    fn flat_kernels_without_data() {
        let prior = PriorConfig::default();
        let st = stats(0, 0);
        assert_abs_diff_eq!(
            unnorm_marginal_omega(st, &prior, 0.3).unwrap(),
            0.5,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            unnorm_marginal_omega(st, &prior, 0.01).unwrap(),
            0.5,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            unnorm_marginal_p(st, &prior, 0.7).unwrap(),
            0.5,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            unnorm_marginal_p(st, &prior, 0.95).unwrap(),
            0.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn kernel_domain_errors() {
        let prior = PriorConfig::default();
        let st = stats(3, 1);
        assert!(unnorm_marginal_omega(st, &prior, 0.0).is_err());
        assert!(unnorm_marginal_omega(st, &prior, -0.1).is_err());
        assert!(unnorm_marginal_omega(st, &prior, 0.6).is_err());
        assert!(unnorm_marginal_p(st, &prior, 0.4).is_err());
        assert!(unnorm_marginal_p(st, &prior, 0.0).is_err());
    }

    #[test]
    fn all_ones_push_omega_up() {
        let prior = PriorConfig::default();
        let st = stats(10, 10);
        let mut last = 0.0;
        for i in 1..=100 {
            let w = 0.5 * i as f64 / 100.0;
            let v = unnorm_marginal_omega(st, &prior, w).unwrap();
            assert!(v > last, "not increasing at {w}");
            last = v;
        }
    }

    /// Oracle: integrate the joint kernel over the partner parameter directly.
    fn ln_oracle_marginal(n: u64, s: u64, which: Param, x: f64, prior: &PriorConfig) -> f64 {
        let rule = gauss_legendre(20);
        let (a, b) = which.partner_support(prior);
        let (s, f) = (s as f64, (n - s) as f64);
        let ln_joint = |y: f64| {
            let t = x * y;
            let left = if s > 0.0 { s * t.ln() } else { 0.0 };
            let right = if f > 0.0 { f * (-t).ln_1p() } else { 0.0 };
            left + right
        };
        // scale by the integrand maximum on a fine scan to stay in range
        let scan: f64 = (0..=400)
            .map(|i| ln_joint(a + (b - a) * i as f64 / 400.0))
            .fold(f64::NEG_INFINITY, f64::max);
        let integral = composite_gl(|y| (ln_joint(y) - scan).exp(), a, b, 200, &rule);
        integral.ln() + scan
    }

    #[test]
    fn omega_kernel_matches_quadrature_oracle() {
        let prior = PriorConfig::default();
        let st = stats(1564, 433);
        let mut ratios = Vec::new();
        for i in 1..=50 {
            let w = 0.5 * i as f64 / 50.0;
            let ours = ln_unnorm_marginal_omega(st, &prior, w).unwrap();
            let oracle = ln_oracle_marginal(1564, 433, Param::Omega, w, &prior);
            ratios.push(ours - oracle);
        }
        let c = ratios[ratios.len() / 2];
        for (i, r) in ratios.iter().enumerate() {
            assert!(
                (r - c).abs() <= 1e-6,
                "point {i}: log-ratio offset {}",
                r - c
            );
        }
        // the fitted constant is -ln B(s + 1, n - s + 1)
        assert_abs_diff_eq!(c, -specfun::ln_beta(434.0, 1132.0), epsilon = 1e-7);
    }

    #[test]
    fn p_kernel_matches_quadrature_oracle() {
        let prior = PriorConfig::default();
        let st = stats(1564, 433);
        let mut offsets = Vec::new();
        for i in 1..=50 {
            let p = 0.5 + 0.5 * i as f64 / 50.0;
            let ours = ln_unnorm_marginal_p(st, &prior, p).unwrap();
            let oracle = ln_oracle_marginal(1564, 433, Param::P, p, &prior);
            offsets.push(ours - oracle);
        }
        let c = offsets[25];
        for r in &offsets {
            assert!((r - c).abs() <= 1e-6);
        }
    }

    #[test]
    fn all_zeros_push_p_down() {
        let prior = PriorConfig::default();
        let st = stats(5, 0);
        let mut last = f64::INFINITY;
        for i in 0..=100 {
            let p = 0.5 + 0.5 * i as f64 / 100.0;
            let p = p.max(0.5 + 1e-9);
            let v = unnorm_marginal_p(st, &prior, p).unwrap();
            let oracle = ln_oracle_marginal(5, 0, Param::P, p, &prior).exp();
            assert!(v < last);
            // same shape as the oracle up to the constant B(1, 6) = 1/6
            assert_abs_diff_eq!(v, oracle * 6.0, epsilon = 1e-10);
            last = v;
        }
    }

    #[test]
    fn prior_is_recovered_without_data() {
        let prior = PriorConfig::default();
        let m = build_marginal(stats(0, 0), &prior, Param::Omega).unwrap();
        for &x in &[0.0, 0.1, 0.25, 0.49, 0.5] {
            assert_abs_diff_eq!(m.density(x), 2.0, epsilon = 1e-10);
        }
        let s = summarize(&m).unwrap();
        assert_abs_diff_eq!(s.median, 0.25, epsilon = 1e-9);
        assert_abs_diff_eq!(s.q025, 0.0125, epsilon = 1e-9);
        assert_abs_diff_eq!(s.q975, 0.4875, epsilon = 1e-9);
        assert_abs_diff_eq!(s.mean, 0.25, epsilon = 1e-9);
    }

    #[test]
    fn application_marginal_is_normalised() {
        let prior = PriorConfig::default();
        let m = build_marginal(stats(1564, 433), &prior, Param::Omega).unwrap();
        let total = specfun::integrate(|x| m.density(x), 0.0, 0.5, 1e-9);
        let total = match total {
            Ok(v) => v,
            Err(SpecFunError::NoConvergence { estimate, .. }) => estimate,
            Err(e) => panic!("{e}"),
        };
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
        let (mode, _) = m.grid().fold((0.0, f64::NEG_INFINITY), |acc, (x, d)| {
            if d > acc.1 {
                (x, d)
            } else {
                acc
            }
        });
        assert!(mode > 0.27 && mode < 0.49, "mode {mode}");
    }

    #[test]
    fn cdf_matches_independent_simpson_sums() {
        let prior = PriorConfig::default();
        let st = stats(20, 10);
        let m = build_marginal(st, &prior, Param::P).unwrap();
        // oracle: fine composite Simpson on the oracle marginal
        let n = 20_000;
        let (lo, hi) = (0.5, 1.0);
        let h = (hi - lo) / n as f64;
        let dens: Vec<f64> = (0..=n)
            .map(|i| ln_oracle_marginal(20, 10, Param::P, lo + h * i as f64, &prior).exp())
            .collect();
        let mut cum = vec![0.0; n / 2 + 1];
        for j in 1..=n / 2 {
            let i = 2 * j;
            cum[j] = cum[j - 1] + h / 3.0 * (dens[i - 2] + 4.0 * dens[i - 1] + dens[i]);
        }
        let total = cum[n / 2];
        for j in (0..=n / 2).step_by(250) {
            let x = lo + 2.0 * h * j as f64;
            assert!(
                (m.cdf(x) - cum[j] / total).abs() <= 1e-7,
                "x={x}: {} vs {}",
                m.cdf(x),
                cum[j] / total
            );
        }
    }

    #[test]
    fn quantiles_are_consistent_with_cdf() {
        let prior = PriorConfig::default();
        for (n, s) in [(1564, 433), (30, 3), (200, 150), (7, 0)] {
            for which in [Param::Omega, Param::P] {
                let m = build_marginal(stats(n, s), &prior, which).unwrap();
                let summary = summarize(&m).unwrap();
                assert!((m.cdf(summary.median) - 0.5).abs() <= 1e-8);
                assert!(summary.q025 <= summary.median && summary.median <= summary.q975);
                let (lo, hi) = m.support();
                assert!(lo <= summary.q025 && summary.q975 <= hi);
                assert!(summary.mean > lo && summary.mean < hi);
            }
        }
    }

    #[test]
    fn application_summaries() {
        let fit = fit_nocov(stats(1564, 433), &PriorConfig::default()).unwrap();
        let w = fit.omega_summary;
        assert!((w.median - 0.37).abs() <= 0.01, "{w:?}");
        assert!((w.q025 - 0.27).abs() <= 0.01, "{w:?}");
        assert!((w.q975 - 0.49).abs() <= 0.01, "{w:?}");
        let p = fit.p_summary;
        assert!((p.median - 0.74).abs() <= 0.02, "{p:?}");
        assert!((p.q025 - 0.55).abs() <= 0.02, "{p:?}");
        assert!((p.q975 - 0.99).abs() <= 0.02, "{p:?}");
    }

    #[test]
    fn interval_shrinks_with_sample_size() {
        // truth omega = 0.3, p = 0.8 -> t = 0.24
        let prior = PriorConfig::default().with_p_box(0.5, 1.0);
        let mut widths = Vec::new();
        for n in [500u64, 5000, 50_000] {
            let s = (0.24 * n as f64).round() as u64;
            let m = build_marginal(stats(n, s), &prior, Param::Omega).unwrap();
            let sm = summarize(&m).unwrap();
            widths.push(sm.q975 - sm.q025);
        }
        assert!(widths[0] > widths[1] && widths[1] > widths[2], "{widths:?}");
    }

    fn trapezoid(rows: &[DensityRow], which: Param, f: impl Fn(&DensityRow) -> f64) -> f64 {
        let sel: Vec<&DensityRow> = rows.iter().filter(|r| r.param == which).collect();
        sel.windows(2)
            .map(|w| 0.5 * (w[1].value - w[0].value) * (f(w[0]) + f(w[1])))
            .sum()
    }

    #[test]
    fn density_grid_without_data_equals_prior() {
        let rows = density_grids_for_plotting(stats(0, 0), &PriorConfig::default(), 101).unwrap();
        assert_eq!(rows.len(), 202);
        for r in &rows {
            assert_abs_diff_eq!(r.prior_density, r.posterior_density, epsilon = 1e-10);
        }
    }

    #[test]
    fn density_grid_shows_learning() {
        let rows = density_grids_for_plotting(
            stats(1564, 433),
            &PriorConfig::default(),
            DEFAULT_PLOT_POINTS,
        )
        .unwrap();
        for which in [Param::Omega, Param::P] {
            assert!(rows
                .iter()
                .all(|r| r.posterior_density >= 0.0 && r.prior_density >= 0.0));
            let post = trapezoid(&rows, which, |r| r.posterior_density);
            let prior = trapezoid(&rows, which, |r| r.prior_density);
            assert!((post - 1.0).abs() <= 1e-6, "{which:?}: {post}");
            assert!((prior - 1.0).abs() <= 1e-6);
            let tv = 0.5
                * trapezoid(&rows, which, |r| {
                    (r.posterior_density - r.prior_density).abs()
                });
            assert!(tv > 0.1, "{which:?}: tv {tv}");
        }
    }

    #[test]
    fn density_csv_layout() {
        let rows = density_grids_for_plotting(stats(4, 1), &PriorConfig::default(), 3).unwrap();
        let mut buf = Vec::new();
        write_density_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "param,value,prior_density,posterior_density");
        assert_eq!(lines.len(), 7);
        assert!(lines[1].starts_with("omega,0,2,"));
        assert!(lines[6].starts_with("p,1,2,"));
    }

    #[test]
    fn generalised_prior_box() {
        // omega on [0, 1], p fixed near 1 collapses to a beta posterior
        let prior = PriorConfig::default()
            .with_omega_box(0.0, 1.0)
            .with_p_box(0.999_999, 1.0);
        let st = stats(40, 12);
        let m = build_marginal(st, &prior, Param::Omega).unwrap();
        let beta = BetaShape::new(13.0, 29.0).unwrap();
        for &x in &[0.1, 0.2, 0.3, 0.45, 0.6] {
            assert!((m.cdf(x) - specfun::reg_inc_beta(x, beta).unwrap()).abs() < 1e-5);
        }
    }
}
