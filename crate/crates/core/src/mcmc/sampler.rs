//! Adaptive random-walk Metropolis.
//!
//! Each chain works on the unconstrained scale with a Jacobian-corrected
//! target. During warmup the proposal covariance tracks the running empirical
//! covariance of the chain (scaled by `2.38^2 / d`) and a global step-size
//! multiplier is tuned towards the target acceptance rate. Both are frozen
//! when warmup ends.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::transform::{transform_back, transform_to_unconstrained, Support};
use super::McmcError;
use crate::exec::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    pub n_chains: usize,
    /// Post-warmup draws per chain.
    pub iterations: usize,
    pub warmup: usize,
    pub seed: u64,
    pub target_accept: f64,
    pub init_jitter: f64,
    pub execution: Execution,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            n_chains: 4,
            iterations: 2000,
            warmup: 1000,
            seed: 20_190_301,
            target_accept: 0.30,
            init_jitter: 0.5,
            execution: Execution::Parallel,
        }
    }
}

pub const MIN_WARMUP: usize = 100;
const INIT_ATTEMPTS: usize = 100;

impl ChainConfig {
    pub fn validate(&self) -> Result<(), McmcError> {
        let bad = |m: String| Err(McmcError::InvalidConfig(m));
        if self.n_chains == 0 {
            return bad("n_chains must be positive".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be positive".into());
        }
        if self.warmup < MIN_WARMUP {
            return bad(format!(
                "warmup must be at least {MIN_WARMUP}, got {}",
                self.warmup
            ));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return bad(format!(
                "target_accept must lie in (0, 1), got {}",
                self.target_accept
            ));
        }
        if !(self.init_jitter.is_finite() && self.init_jitter > 0.0) {
            return bad(format!(
                "init_jitter must be positive, got {}",
                self.init_jitter
            ));
        }
        Ok(())
    }
}

/// Frozen proposal of one chain, plus an update counter that must stay at
/// zero once sampling has started.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationRecord {
    pub step_scale: f64,
    /// Lower Cholesky factor of the proposal covariance (step scale
    /// included) when warmup ended, column-major.
    pub proposal_chol: Vec<f64>,
    pub post_warmup_updates: usize,
    /// Proposal factor observed at the last post-warmup iteration.
    pub proposal_chol_at_end: Vec<f64>,
}

/// Draws on the constrained scale, `chains x iterations x params`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    param_names: Vec<String>,
    n_chains: usize,
    iterations: usize,
    draws: Vec<f64>,
    accept_rate: Vec<f64>,
    adaptation: Vec<AdaptationRecord>,
}

impl ChainDraws {
    /// Assembles draws from per-chain matrices (`iterations x params`, row
    /// major). Mostly for tests and external draws.
    pub fn from_chains(
        param_names: Vec<String>,
        chains: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, McmcError> {
        let n_chains = chains.len();
        let iterations = chains.first().map_or(0, |c| c.len());
        let d = param_names.len();
        let mut draws = Vec::with_capacity(n_chains * iterations * d);
        for c in &chains {
            if c.len() != iterations {
                return Err(McmcError::InvalidDraws(
                    "chains have different lengths".into(),
                ));
            }
            for row in c {
                if row.len() != d {
                    return Err(McmcError::Dimension {
                        expected: d,
                        got: row.len(),
                    });
                }
                draws.extend_from_slice(row);
            }
        }
        Ok(Self {
            param_names,
            n_chains,
            iterations,
            draws,
            accept_rate: vec![f64::NAN; n_chains],
            adaptation: Vec::new(),
        })
    }

    /// Attaches per-chain acceptance rates to externally assembled draws.
    pub fn with_accept_rates(mut self, rates: Vec<f64>) -> Result<Self, McmcError> {
        if rates.len() != self.n_chains {
            return Err(McmcError::Dimension {
                expected: self.n_chains,
                got: rates.len(),
            });
        }
        self.accept_rate = rates;
        Ok(self)
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn n_chains(&self) -> usize {
        self.n_chains
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn n_params(&self) -> usize {
        self.param_names.len()
    }

    pub fn accept_rate(&self) -> &[f64] {
        &self.accept_rate
    }

    pub fn adaptation(&self) -> &[AdaptationRecord] {
        &self.adaptation
    }

    pub fn get(&self, chain: usize, iter: usize, param: usize) -> f64 {
        self.draws[(chain * self.iterations + iter) * self.n_params() + param]
    }

    /// One vector per chain for parameter `param`.
    pub fn param_chains(&self, param: usize) -> Vec<Vec<f64>> {
        (0..self.n_chains)
            .map(|c| {
                (0..self.iterations)
                    .map(|i| self.get(c, i, param))
                    .collect()
            })
            .collect()
    }

    /// All draws of `param`, chains concatenated.
    pub fn pooled(&self, param: usize) -> Vec<f64> {
        self.param_chains(param).concat()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|n| n == name)
    }

    pub fn raw(&self) -> &[f64] {
        &self.draws
    }

    /// Applies `f` to every draw, e.g. to move from sampling coordinates to
    /// model parameters. Acceptance rates and adaptation records are kept.
    pub fn map_params<F>(self, param_names: Vec<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let d = self.n_params();
        let mut draws = Vec::with_capacity(self.n_chains * self.iterations * param_names.len());
        for row in self.draws.chunks(d) {
            let mapped = f(row);
            assert_eq!(
                mapped.len(),
                param_names.len(),
                "mapped draw has the wrong length"
            );
            draws.extend(mapped);
        }
        Self {
            param_names,
            draws,
            ..self
        }
    }
}

struct ChainOutput {
    draws: Vec<f64>,
    accept_rate: f64,
    adaptation: AdaptationRecord,
}

/// Runs `config.n_chains` independent adaptive Metropolis chains on
/// `target`, a log density over the constrained parameters.
///
/// `init` is the constrained starting point shared by all chains before
/// jitter; it defaults to the midpoint of each support.
pub fn sample<F>(
    target: &F,
    supports: &[Support],
    param_names: Vec<String>,
    init: Option<&[f64]>,
    config: &ChainConfig,
) -> Result<ChainDraws, McmcError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let d = supports.len();
    if d == 0 {
        return Err(McmcError::InvalidConfig("nothing to sample".into()));
    }
    if param_names.len() != d {
        return Err(McmcError::Dimension {
            expected: d,
            got: param_names.len(),
        });
    }
    let start: Vec<f64> = match init {
        Some(x) => transform_to_unconstrained(x, supports)?,
        None => {
            let mids: Vec<f64> = supports.iter().map(Support::midpoint).collect();
            transform_to_unconstrained(&mids, supports)?
        }
    };

    let outputs = exec::map_indexed(config.execution, config.n_chains, |chain| {
        run_chain(target, supports, &start, config, chain)
    });
    let mut draws = Vec::with_capacity(config.n_chains * config.iterations * d);
    let mut accept_rate = Vec::with_capacity(config.n_chains);
    let mut adaptation = Vec::with_capacity(config.n_chains);
    for out in outputs {
        let out = out?;
        draws.extend(out.draws);
        accept_rate.push(out.accept_rate);
        adaptation.push(out.adaptation);
    }
    Ok(ChainDraws {
        param_names,
        n_chains: config.n_chains,
        iterations: config.iterations,
        draws,
        accept_rate,
        adaptation,
    })
}

/// Welford accumulator for the warmup covariance.
struct RunningCov {
    count: usize,
    mean: DVector<f64>,
    m2: DMatrix<f64>,
}

impl RunningCov {
    fn new(d: usize) -> Self {
        Self {
            count: 0,
            mean: DVector::zeros(d),
            m2: DMatrix::zeros(d, d),
        }
    }

    fn push(&mut self, x: &DVector<f64>) {
        self.count += 1;
        let delta = x - &self.mean;
        self.mean += &delta / self.count as f64;
        let delta2 = x - &self.mean;
        self.m2 += &delta * delta2.transpose();
    }

    /// Sample covariance shrunk towards a small multiple of the identity.
    fn regularised(&self) -> DMatrix<f64> {
        let n = self.count as f64;
        let d = self.mean.len();
        let cov = &self.m2 / (n - 1.0);
        cov * (n / (n + 5.0)) + DMatrix::identity(d, d) * (1e-3 * 5.0 / (n + 5.0))
    }
}

struct Proposal {
    chol: DMatrix<f64>,
    frozen: bool,
    post_warmup_updates: usize,
}

impl Proposal {
    fn set(&mut self, chol: DMatrix<f64>) {
        if self.frozen {
            self.post_warmup_updates += 1;
        }
        self.chol = chol;
    }
}

fn run_chain<F>(
    target: &F,
    supports: &[Support],
    start: &[f64],
    config: &ChainConfig,
    chain: usize,
) -> Result<ChainOutput, McmcError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = supports.len();
    let mut rng = ChaCha8Rng::seed_from_u64(exec::mix_seed(config.seed, chain as u64));
    let log_density = |u: &[f64]| -> f64 {
        let (x, jac) = transform_back(u, supports);
        let lp = target(&x);
        if lp.is_nan() {
            f64::NEG_INFINITY
        } else {
            lp + jac
        }
    };

    let mut current = None;
    for _ in 0..INIT_ATTEMPTS {
        let u: Vec<f64> = start
            .iter()
            .map(|&s| s + config.init_jitter * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let lp = log_density(&u);
        if lp.is_finite() {
            current = Some((DVector::from_vec(u), lp));
            break;
        }
    }
    let Some((mut u, mut lp)) = current else {
        return Err(McmcError::InitializationFailed {
            chain,
            attempts: INIT_ATTEMPTS,
        });
    };

    let base_scale = 2.38 / (d as f64).sqrt();
    let mut proposal = Proposal {
        chol: DMatrix::identity(d, d) * 0.1,
        frozen: false,
        post_warmup_updates: 0,
    };
    let mut ln_step = 0.0f64;
    let mut cov = RunningCov::new(d);
    let collect_from = config.warmup / 4;
    let update_every = 25;
    let min_samples = (2 * d + 10).max(20);

    let mut draws = Vec::with_capacity(config.iterations * d);
    let mut accepted = 0usize;
    let mut noise = DVector::zeros(d);
    let mut frozen_snapshot = Vec::new();
    let mut end_snapshot = Vec::new();
    let total = config.warmup + config.iterations;
    for iter in 0..total {
        let warm = iter < config.warmup;
        if iter == config.warmup {
            proposal.frozen = true;
            frozen_snapshot = (&proposal.chol * ln_step.exp()).as_slice().to_vec();
        }
        for z in noise.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        let step = ln_step.exp();
        let cand = &u + (&proposal.chol * &noise) * step;
        let lp_cand = log_density(cand.as_slice());
        let log_ratio = lp_cand - lp;
        let accept_prob = if log_ratio >= 0.0 {
            1.0
        } else {
            log_ratio.exp()
        };
        let uniform: f64 = rng.random();
        if uniform < accept_prob {
            u = cand;
            lp = lp_cand;
            if !warm {
                accepted += 1;
            }
        }

        if warm {
            let gain = 1.0 / ((iter + 1) as f64).powf(0.6);
            ln_step += gain * (accept_prob - config.target_accept);
            ln_step = ln_step.clamp(-30.0, 10.0);
            if iter >= collect_from {
                cov.push(&u);
                if cov.count >= min_samples && cov.count.is_multiple_of(update_every) {
                    if let Some(l) = cov.regularised().cholesky() {
                        proposal.set(l.l() * base_scale);
                    }
                }
            }
        } else {
            let (x, _) = transform_back(u.as_slice(), supports);
            draws.extend_from_slice(&x);
            if iter + 1 == total {
                end_snapshot = (&proposal.chol * step).as_slice().to_vec();
            }
        }
    }

    Ok(ChainOutput {
        draws,
        accept_rate: accepted as f64 / config.iterations as f64,
        adaptation: AdaptationRecord {
            step_scale: ln_step.exp(),
            proposal_chol: frozen_snapshot,
            post_warmup_updates: proposal.post_warmup_updates,
            proposal_chol_at_end: end_snapshot,
        },
    })
}
