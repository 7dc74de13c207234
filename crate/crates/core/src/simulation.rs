//! Synthetic data and the replication harness for simulation studies.
//!
//! A scenario fixes the true parameters, the sample size and the number of
//! replicates. Each replicate draws a fresh dataset, fits it (closed form
//! without covariates, MCMC with covariates) and records medians and 95%
//! intervals, which are then averaged over replicates.

use std::io::{self, Write};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::analytic::{self, AnalyticError, PosteriorSummary};
use crate::exec::{map_indexed, mix_seed};
use crate::mcmc::{self, ChainConfig, McmcError};
use crate::model::{
    inv_logit, CoefVector, CovLayout, Dataset, ModelError, PriorConfig, SufficientStats, ZibParams,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("empty value list for {0}")]
    EmptyGrid(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Mcmc(#[from] McmcError),
}

/// Draws `n` rows of the covariate model. Per row: `k` exposure covariates,
/// then `q` event covariates (all standard normal), then the latent
/// exposure, then the event. Only the outcome is kept.
pub fn generate_zib_cov<R: Rng + ?Sized>(coefs: &CoefVector, n: usize, rng: &mut R) -> Dataset {
    let (k, q) = (coefs.k(), coefs.q());
    let mut x = DMatrix::zeros(n, k);
    let mut z = DMatrix::zeros(n, q);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let mut eta_w = coefs.theta[0];
        for j in 0..k {
            let v: f64 = rng.sample(StandardNormal);
            x[(i, j)] = v;
            eta_w += coefs.theta[j + 1] * v;
        }
        let mut eta_p = coefs.beta[0];
        for j in 0..q {
            let v: f64 = rng.sample(StandardNormal);
            z[(i, j)] = v;
            eta_p += coefs.beta[j + 1] * v;
        }
        let exposed = rng.random::<f64>() < inv_logit(eta_w);
        let event = rng.random::<f64>() < inv_logit(eta_p);
        y.push(exposed && event);
    }
    let x_names = (1..=k).map(|j| format!("x{j}")).collect();
    let z_names = (1..=q).map(|j| format!("z{j}")).collect();
    Dataset::new(y, x, z, x_names, z_names).expect("generated shapes are consistent")
}

/// Number of ones in `n` draws without covariates.
pub fn generate_zib_nocov<R: Rng + ?Sized>(
    params: ZibParams,
    n: u64,
    rng: &mut R,
) -> SufficientStats {
    let s = Binomial::new(n, params.success_probability())
        .expect("success probability lies in [0, 1]")
        .sample(rng);
    SufficientStats::new(n, s).expect("s <= n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    Cov,
    Nocov,
}

impl SimMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SimMode::Cov => "cov",
            SimMode::Nocov => "nocov",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Truth {
    Cov(CoefVector),
    Nocov(ZibParams),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimScenario {
    pub truth: Truth,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl SimScenario {
    pub fn mode(&self) -> SimMode {
        match self.truth {
            Truth::Cov(_) => SimMode::Cov,
            Truth::Nocov(_) => SimMode::Nocov,
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        match &self.truth {
            Truth::Cov(c) => CovLayout {
                k: c.k(),
                q: c.q(),
                hyper: false,
            }
            .generic_names(),
            Truth::Nocov(_) => vec!["omega".into(), "p".into()],
        }
    }

    pub fn true_values(&self) -> Vec<f64> {
        match &self.truth {
            Truth::Cov(c) => c.flatten(),
            Truth::Nocov(p) => vec![p.omega(), p.p()],
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.replicates == 0 {
            return Err(SimError::InvalidScenario(
                "replicates must be positive".into(),
            ));
        }
        if self.n == 0 {
            return Err(SimError::InvalidScenario(
                "sample size must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub scenario: SimScenario,
    pub param_names: Vec<String>,
    pub avg_median: Vec<f64>,
    pub avg_q025: Vec<f64>,
    pub avg_q975: Vec<f64>,
    pub coverage95: Vec<f64>,
    pub n_failed: usize,
}

/// Stream offset separating the data RNG from the chain RNGs of a replicate.
const DATA_STREAM: u64 = u64::MAX;

fn replicate(
    scenario: &SimScenario,
    r: usize,
    prior: &PriorConfig,
    chains: &ChainConfig,
) -> Result<Vec<PosteriorSummary>, String> {
    let rep_seed = mix_seed(scenario.seed, r as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(rep_seed, DATA_STREAM));
    match &scenario.truth {
        Truth::Nocov(params) => {
            let stats = generate_zib_nocov(*params, scenario.n as u64, &mut rng);
            let fit =
                analytic::fit_nocov(stats, prior).map_err(|e: AnalyticError| e.to_string())?;
            Ok(vec![fit.omega_summary, fit.p_summary])
        }
        Truth::Cov(coefs) => {
            let data = generate_zib_cov(coefs, scenario.n, &mut rng);
            let config = ChainConfig {
                seed: rep_seed,
                ..*chains
            };
            let fit = mcmc::sample_cov(&data, prior, &config).map_err(|e| e.to_string())?;
            let diag = mcmc::diagnose(&fit.draws).map_err(|e| e.to_string())?;
            if !diag.converged(RHAT_LIMIT) {
                return Err(format!(
                    "max R-hat {:.3}, stuck chains {:?}",
                    diag.max_rhat(),
                    diag.divergent_or_stuck
                ));
            }
            let mut summaries = mcmc::summarize_draws(&fit.draws);
            summaries.truncate(coefs.theta.len() + coefs.beta.len());
            Ok(summaries)
        }
    }
}

pub const RHAT_LIMIT: f64 = 1.1;

/// Runs all replicates of one scenario. Replicate `r` is seeded from
/// `(scenario.seed, r)` only, so results do not depend on scheduling.
pub fn run_scenario(
    scenario: &SimScenario,
    prior: &PriorConfig,
    chains: &ChainConfig,
) -> Result<SimResult, SimError> {
    scenario.validate()?;
    prior.validate()?;
    chains.validate()?;
    if let Truth::Cov(c) = &scenario.truth {
        CoefVector::new(c.theta.clone(), c.beta.clone())?;
    }
    let outcomes = map_indexed(chains.execution, scenario.replicates, |r| {
        replicate(scenario, r, prior, chains)
    });

    let names = scenario.param_names();
    let truth = scenario.true_values();
    let d = names.len();
    let mut sums = vec![[0.0f64; 3]; d];
    let mut covered = vec![0usize; d];
    let mut ok = 0usize;
    let mut n_failed = 0usize;
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(summaries) => {
                ok += 1;
                for (j, s) in summaries.iter().enumerate() {
                    sums[j][0] += s.median;
                    sums[j][1] += s.q025;
                    sums[j][2] += s.q975;
                    if s.q025 <= truth[j] && truth[j] <= s.q975 {
                        covered[j] += 1;
                    }
                }
            }
            Err(msg) => {
                n_failed += 1;
                log::warn!(
                    "{} scenario (n={}, seed={}): replicate {r} excluded: {msg}",
                    scenario.mode().as_str(),
                    scenario.n,
                    scenario.seed
                );
            }
        }
    }
    let denom = ok as f64;
    let col = |i: usize| sums.iter().map(|s| s[i] / denom).collect::<Vec<_>>();
    Ok(SimResult {
        scenario: scenario.clone(),
        param_names: names,
        avg_median: col(0),
        avg_q025: col(1),
        avg_q975: col(2),
        coverage95: covered.iter().map(|&c| c as f64 / denom).collect(),
        n_failed,
    })
}

/// Value lists whose Cartesian product defines the scenarios of a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum GridValues {
    Cov {
        theta0: Vec<f64>,
        theta1: Vec<f64>,
        theta2: Vec<f64>,
        beta0: Vec<f64>,
        beta1: Vec<f64>,
        beta2: Vec<f64>,
    },
    Nocov {
        omega: Vec<f64>,
        p: Vec<f64>,
    },
}

impl GridValues {
    /// Exposure and event coefficients of the standard covariate study grid.
    pub fn study_cov() -> Self {
        GridValues::Cov {
            theta0: vec![-0.5, -1.0, -2.0],
            theta1: vec![-2.0, -3.0, -4.0],
            theta2: vec![-3.0],
            beta0: vec![0.5, 1.0, 2.0],
            beta1: vec![2.0, 3.0, 4.0],
            beta2: vec![3.0],
        }
    }

    /// Exposure and event probabilities of the standard no-covariate study grid.
    pub fn study_nocov() -> Self {
        GridValues::Nocov {
            omega: vec![0.1, 0.2, 0.3, 0.4],
            p: vec![0.6, 0.7, 0.8, 0.9],
        }
    }

    pub fn mode(&self) -> SimMode {
        match self {
            GridValues::Cov { .. } => SimMode::Cov,
            GridValues::Nocov { .. } => SimMode::Nocov,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub values: GridValues,
    pub n: Vec<usize>,
    pub replicates: usize,
    /// Every cell uses this seed, so a cell's result does not depend on the
    /// rest of the grid.
    pub seed: u64,
}

fn product(lists: &[(&'static str, &[f64])]) -> Result<Vec<Vec<f64>>, SimError> {
    let mut out = vec![Vec::new()];
    for (name, list) in lists {
        if list.is_empty() {
            return Err(SimError::EmptyGrid(name));
        }
        out = out
            .into_iter()
            .flat_map(|prefix| {
                list.iter().map(move |&v| {
                    let mut row = prefix.clone();
                    row.push(v);
                    row
                })
            })
            .collect();
    }
    Ok(out)
}

impl GridSpec {
    /// Scenarios in grid order: sample size outermost, then the value lists
    /// in declaration order with the last varying fastest.
    pub fn scenarios(&self) -> Result<Vec<SimScenario>, SimError> {
        if self.n.is_empty() {
            return Err(SimError::EmptyGrid("n"));
        }
        let truths: Vec<Truth> = match &self.values {
            GridValues::Cov {
                theta0,
                theta1,
                theta2,
                beta0,
                beta1,
                beta2,
            } => product(&[
                ("theta0", theta0),
                ("theta1", theta1),
                ("theta2", theta2),
                ("beta0", beta0),
                ("beta1", beta1),
                ("beta2", beta2),
            ])?
            .into_iter()
            .map(|v| CoefVector::new(v[..3].to_vec(), v[3..].to_vec()).map(Truth::Cov))
            .collect::<Result<_, _>>()?,
            GridValues::Nocov { omega, p } => product(&[("omega", omega), ("p", p)])?
                .into_iter()
                .map(|v| ZibParams::new(v[0], v[1]).map(Truth::Nocov))
                .collect::<Result<_, _>>()?,
        };
        let mut out = Vec::with_capacity(self.n.len() * truths.len());
        for &n in &self.n {
            for truth in &truths {
                out.push(SimScenario {
                    truth: truth.clone(),
                    n,
                    replicates: self.replicates,
                    seed: self.seed,
                });
            }
        }
        Ok(out)
    }
}

/// Runs every cell of the grid; rows come back in grid order. `on_cell` is
/// called as each cell finishes (in completion order).
pub fn run_grid<F>(
    grid: &GridSpec,
    prior: &PriorConfig,
    chains: &ChainConfig,
    on_cell: F,
) -> Result<Vec<SimResult>, SimError>
where
    F: Fn(usize, &SimResult) + Sync + Send,
{
    let scenarios = grid.scenarios()?;
    map_indexed(chains.execution, scenarios.len(), |i| {
        let res = run_scenario(&scenarios[i], prior, chains)?;
        on_cell(i, &res);
        Ok(res)
    })
    .into_iter()
    .collect()
}

/// Writes one CSV row per cell. All rows must come from the same mode.
pub fn write_results_csv<W: Write>(results: &[SimResult], mut out: W) -> io::Result<()> {
    let Some(first) = results.first() else {
        return writeln!(out, "mode,n,replicates,n_failed");
    };
    let names = &first.param_names;
    let mut header = vec!["mode".to_string(), "n".into(), "replicates".into()];
    for prefix in ["true", "median", "q025", "q975", "coverage"] {
        header.extend(names.iter().map(|name| format!("{prefix}_{name}")));
    }
    header.push("n_failed".into());
    writeln!(out, "{}", header.join(","))?;
    for r in results {
        if &r.param_names != names {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                "results with different parameters cannot share a table",
            ));
        }
        let mut row = vec![
            r.scenario.mode().as_str().to_string(),
            r.scenario.n.to_string(),
            r.scenario.replicates.to_string(),
        ];
        for block in [
            &r.scenario.true_values(),
            &r.avg_median,
            &r.avg_q025,
            &r.avg_q975,
            &r.coverage95,
        ] {
            row.extend(block.iter().map(|v| v.to_string()));
        }
        row.push(r.n_failed.to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
