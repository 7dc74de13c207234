//! Posterior sampling for both model variants, with diagnostics and
//! summaries.

mod diagnostics;
mod sampler;
mod transform;

pub use diagnostics::{
    diagnose, effective_sample_size, mcse_quantile, quantile_sorted, split_rhat, Diagnostics,
    STUCK_HIGH, STUCK_LOW,
};
pub use sampler::{sample, AdaptationRecord, ChainConfig, ChainDraws, MIN_WARMUP};
pub use transform::{transform_back, transform_to_unconstrained, Support};

use thiserror::Error;

use crate::analytic::PosteriorSummary;
use crate::model::{
    self, CovLayout, Dataset, MapEstimate, ModelError, PriorConfig, SigmaMode, SufficientStats,
    ZibParams,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McmcError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid support {0}")]
    InvalidSupport(String),
    #[error("value {value} is outside its support")]
    OutOfSupport { value: f64 },
    #[error("expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("chain {chain}: no finite starting point after {attempts} attempts")]
    InitializationFailed { chain: usize, attempts: usize },
    #[error("invalid draws: {0}")]
    InvalidDraws(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Pooled median, 2.5%/97.5% percentiles and mean of every parameter.
pub fn summarize_draws(draws: &ChainDraws) -> Vec<PosteriorSummary> {
    (0..draws.n_params())
        .map(|j| {
            let pooled = draws.pooled(j);
            let sorted = diagnostics::sorted_copy(&pooled);
            PosteriorSummary {
                median: quantile_sorted(&sorted, 0.5),
                q025: quantile_sorted(&sorted, 0.025),
                q975: quantile_sorted(&sorted, 0.975),
                mean: pooled.iter().sum::<f64>() / pooled.len() as f64,
            }
        })
        .collect()
}

/// Coordinates `(t, lambda)` for the no-covariate posterior, with
/// `t = omega * p` and `lambda` the relative position of `omega` along the
/// segment of the prior box on which `omega * p = t`. The likelihood depends
/// on `t` alone, so the narrow ridge of the `(omega, p)` posterior becomes
/// an axis of the sampling box.
#[derive(Debug, Clone, Copy)]
struct RidgeCoords {
    prior: PriorConfig,
}

impl RidgeCoords {
    fn t_range(&self) -> (f64, f64) {
        (
            self.prior.omega_lo * self.prior.p_lo,
            self.prior.omega_hi * self.prior.p_hi,
        )
    }

    /// Range of `omega` on the segment `omega * p = t`.
    fn omega_range(&self, t: f64) -> (f64, f64) {
        let pr = &self.prior;
        let lo = pr.omega_lo.max(t / pr.p_hi);
        let hi = if pr.p_lo > 0.0 {
            pr.omega_hi.min(t / pr.p_lo)
        } else {
            pr.omega_hi
        };
        (lo, hi)
    }

    fn to_params(&self, t: f64, lambda: f64) -> (f64, f64) {
        let (a, b) = self.omega_range(t);
        let omega = a + lambda * (b - a);
        let p = (t / omega).clamp(self.prior.p_lo, self.prior.p_hi);
        (omega, p)
    }

    /// `ln |d(omega, p) / d(t, lambda)|`.
    fn ln_jacobian(&self, t: f64, omega: f64) -> f64 {
        let (a, b) = self.omega_range(t);
        (b - a).ln() - omega.ln()
    }
}

/// Samples `(omega, p)` of the no-covariate model under the uniform box
/// prior. Chains run in the coordinates described on [`RidgeCoords`] and
/// the draws are mapped back, so every draw lies inside the box.
pub fn sample_nocov(
    stats: SufficientStats,
    prior: &PriorConfig,
    config: &ChainConfig,
) -> Result<ChainDraws, McmcError> {
    prior.validate()?;
    let coords = RidgeCoords { prior: *prior };
    let (t_lo, t_hi) = coords.t_range();
    let supports = [Support::interval(t_lo, t_hi)?, Support::interval(0.0, 1.0)?];
    let target = move |x: &[f64]| {
        let (omega, p) = coords.to_params(x[0], x[1]);
        match ZibParams::new(omega, p) {
            Ok(params) => model::loglik_nocov(stats, params) + coords.ln_jacobian(x[0], omega),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let draws = sample(
        &target,
        &supports,
        vec!["t".into(), "lambda".into()],
        None,
        config,
    )?;
    Ok(draws.map_params(vec!["omega".into(), "p".into()], |x| {
        let (omega, p) = coords.to_params(x[0], x[1]);
        vec![omega, p]
    }))
}

/// Output of [`sample_cov`].
#[derive(Debug, Clone)]
pub struct CovFit {
    pub draws: ChainDraws,
    pub map: MapEstimate,
    pub layout: CovLayout,
}

pub const MAP_MAX_STEPS: usize = 500;

/// Samples the covariate model, starting every chain from a jittered
/// posterior mode. In hyperprior mode the start is the mode at the
/// configured fixed scales, extended with their logarithms.
pub fn sample_cov(
    data: &Dataset,
    prior: &PriorConfig,
    config: &ChainConfig,
) -> Result<CovFit, McmcError> {
    prior.validate()?;
    let layout = CovLayout::for_data(data, prior);
    let fixed = PriorConfig {
        sigma_mode: SigmaMode::Fixed,
        ..*prior
    };
    let mut map = model::find_map(data, &fixed, None, MAP_MAX_STEPS)?;
    if layout.hyper {
        map.params.push(prior.coef_sigma_theta.ln());
        map.params.push(prior.coef_sigma_beta.ln());
        map.log_posterior = model::log_posterior_flat(data, &map.params, prior)?;
    }
    let supports = vec![Support::Real; layout.dim()];
    let target = |x: &[f64]| model::log_posterior_flat(data, x, prior).unwrap_or(f64::NEG_INFINITY);
    let names = layout.names(data.x_names(), data.z_names());
    let draws = sample(&target, &supports, names, Some(&map.params), config)?;
    Ok(CovFit { draws, map, layout })
}
