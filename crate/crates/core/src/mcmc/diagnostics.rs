//! Convergence diagnostics: split R-hat, effective sample size and Monte
//! Carlo standard errors of quantiles.

use serde::Serialize;

use super::{ChainDraws, McmcError};
use crate::specfun::{self, BetaShape};

/// Per-parameter and per-chain diagnostics of one sampler run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub rhat: Vec<f64>,
    pub ess: Vec<f64>,
    /// Parameter never moved (zero variance across all draws).
    pub constant: Vec<bool>,
    /// Post-warmup acceptance below 0.05 or above 0.95.
    pub divergent_or_stuck: Vec<bool>,
}

impl Diagnostics {
    pub fn max_rhat(&self) -> f64 {
        self.rhat.iter().copied().fold(1.0, f64::max)
    }

    pub fn min_ess(&self) -> f64 {
        self.ess.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// No parameter above `rhat_limit` and no stuck chain.
    pub fn converged(&self, rhat_limit: f64) -> bool {
        self.rhat.iter().all(|&r| r <= rhat_limit) && !self.divergent_or_stuck.iter().any(|&s| s)
    }
}

pub const STUCK_LOW: f64 = 0.05;
pub const STUCK_HIGH: f64 = 0.95;

pub fn diagnose(draws: &ChainDraws) -> Result<Diagnostics, McmcError> {
    if draws.n_chains() < 2 {
        return Err(McmcError::InvalidDraws(format!(
            "need at least 2 chains, got {}",
            draws.n_chains()
        )));
    }
    if draws.iterations() < 4 {
        return Err(McmcError::InvalidDraws(format!(
            "need at least 4 draws per chain, got {}",
            draws.iterations()
        )));
    }
    let mut rhat = Vec::with_capacity(draws.n_params());
    let mut ess = Vec::with_capacity(draws.n_params());
    let mut constant = Vec::with_capacity(draws.n_params());
    for j in 0..draws.n_params() {
        let chains = draws.param_chains(j);
        let is_const = is_constant(&chains);
        constant.push(is_const);
        if is_const {
            rhat.push(1.0);
            ess.push((draws.n_chains() * draws.iterations()) as f64);
        } else {
            rhat.push(split_rhat(&chains));
            ess.push(effective_sample_size(&chains));
        }
    }
    let divergent_or_stuck = draws
        .accept_rate()
        .iter()
        .map(|&a| a.is_finite() && !(STUCK_LOW..=STUCK_HIGH).contains(&a))
        .collect();
    Ok(Diagnostics {
        rhat,
        ess,
        constant,
        divergent_or_stuck,
    })
}

fn is_constant(chains: &[Vec<f64>]) -> bool {
    let first = chains[0][0];
    chains.iter().flatten().all(|&v| v == first)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Halves every chain (dropping the middle draw of odd-length chains).
fn split(chains: &[Vec<f64>]) -> Vec<&[f64]> {
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let half = c.len() / 2;
        out.push(&c[..half]);
        out.push(&c[c.len() - half..]);
    }
    out
}

/// Split R-hat: `sqrt(var_plus / W)` on half-chains, with
/// `var_plus = (n - 1)/n W + B/n`.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let halves = split(chains);
    let n = halves[0].len() as f64;
    let means: Vec<f64> = halves.iter().map(|c| mean(c)).collect();
    let within = mean(&halves.iter().map(|c| sample_var(c)).collect::<Vec<_>>());
    let between = n * sample_var(&means);
    if within <= 0.0 {
        return if between > 0.0 { f64::INFINITY } else { 1.0 };
    }
    let var_plus = (n - 1.0) / n * within + between / n;
    (var_plus / within).sqrt()
}

/// Biased autocovariance at `lag` (divides by the chain length).
fn autocov(x: &[f64], m: f64, lag: usize) -> f64 {
    let n = x.len();
    x[..n - lag]
        .iter()
        .zip(&x[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum::<f64>()
        / n as f64
}

/// Multi-chain effective sample size on split chains, Geyer's initial
/// positive sequence made monotone, capped at `N log10 N`.
pub fn effective_sample_size(chains: &[Vec<f64>]) -> f64 {
    let halves = split(chains);
    let m = halves.len();
    let n = halves[0].len();
    let total = (m * n) as f64;
    let means: Vec<f64> = halves.iter().map(|c| mean(c)).collect();
    let acov0: Vec<f64> = halves
        .iter()
        .zip(&means)
        .map(|(c, &mu)| autocov(c, mu, 0))
        .collect();
    let chain_var: Vec<f64> = acov0
        .iter()
        .map(|a| a * n as f64 / (n as f64 - 1.0))
        .collect();
    let mean_var = mean(&chain_var);
    let mut var_plus = mean_var * (n as f64 - 1.0) / n as f64;
    if m > 1 {
        var_plus += sample_var(&means);
    }
    if !(var_plus > 0.0) {
        return total;
    }
    let rho = |lag: usize| -> f64 {
        let acov_mean = halves
            .iter()
            .zip(&means)
            .map(|(c, &mu)| autocov(c, mu, lag))
            .sum::<f64>()
            / m as f64;
        1.0 - (mean_var - acov_mean) / var_plus
    };

    let mut rho_hat = vec![0.0; n + 2];
    let mut rho_even = 1.0;
    rho_hat[0] = rho_even;
    let mut rho_odd = rho(1);
    rho_hat[1] = rho_odd;
    let mut t = 1;
    while t + 4 < n && rho_even + rho_odd > 0.0 {
        rho_even = rho(t + 1);
        rho_odd = rho(t + 2);
        if rho_even + rho_odd >= 0.0 {
            rho_hat[t + 1] = rho_even;
            rho_hat[t + 2] = rho_odd;
        }
        t += 2;
    }
    let max_t = t;
    if rho_even > 0.0 {
        rho_hat[max_t + 1] = rho_even;
    }
    let mut s = 1;
    while s + 3 <= max_t {
        if rho_hat[s + 1] + rho_hat[s + 2] > rho_hat[s - 1] + rho_hat[s] {
            rho_hat[s + 1] = 0.5 * (rho_hat[s - 1] + rho_hat[s]);
            rho_hat[s + 2] = rho_hat[s + 1];
        }
        s += 2;
    }
    let tau = -1.0 + 2.0 * rho_hat[..max_t].iter().sum::<f64>() + rho_hat[max_t + 1];
    (total / tau).min(total * total.log10())
}

/// Quantile of sorted data with linear interpolation between order
/// statistics (`h = (N - 1) prob`).
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub(crate) fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Monte Carlo standard error of the `prob` quantile, from the effective
/// sample size of the indicator `x <= q` and beta quantiles of the implied
/// binomial uncertainty mapped back through the empirical distribution.
///
/// Returns `None` when the indicator is constant.
pub fn mcse_quantile(chains: &[Vec<f64>], prob: f64) -> Option<f64> {
    let pooled: Vec<f64> = chains.concat();
    let sorted = sorted_copy(&pooled);
    let q = quantile_sorted(&sorted, prob);
    let indicator: Vec<Vec<f64>> = chains
        .iter()
        .map(|c| c.iter().map(|&v| if v <= q { 1.0 } else { 0.0 }).collect())
        .collect();
    if is_constant(&indicator) {
        return None;
    }
    let ess = effective_sample_size(&indicator);
    let shape = BetaShape::new(ess * prob + 1.0, ess * (1.0 - prob) + 1.0).ok()?;
    let beta_q = |p: f64| {
        specfun::invert_monotone(
            |x| specfun::reg_inc_beta(x, shape).unwrap_or(f64::NAN),
            p,
            0.0,
            1.0,
        )
    };
    let a = beta_q(0.158_655_3).ok()?;
    let b = beta_q(0.841_344_7).ok()?;
    let s = sorted.len();
    let i1 = ((a * s as f64).floor() as usize).clamp(1, s) - 1;
    let i2 = ((b * s as f64).ceil() as usize).clamp(1, s) - 1;
    Some(0.5 * (sorted[i2] - sorted[i1]))
}
