use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Deserialize;
use serde_json::{json, Map, Value};
use zib_core::analytic::{self, density_grids_for_plotting, write_density_csv};
use zib_core::mcmc::{self, ChainConfig};
use zib_core::model::{DEFAULT_COEF_SIGMA, DEFAULT_HYPERPRIOR_SCALE};
use zib_core::simulation::{self, GridSpec, GridValues, SimResult, RHAT_LIMIT};
use zib_core::{Dataset, Execution, PosteriorSummary, PriorConfig, SigmaMode};

use crate::args::{
    ChainArgs, FitArgs, Format, ModeArg, PosteriorArgs, PriorArgs, SigmaModeArg, SimulateArgs,
};
use crate::data;
use crate::error::CliError;
use crate::output::{emit, json_bytes};

fn build_prior(args: &PriorArgs) -> Result<PriorConfig, CliError> {
    let mut prior = PriorConfig::default();
    if let Some((lo, hi)) = args.omega_prior {
        prior = prior.with_omega_box(lo, hi);
    }
    if let Some((lo, hi)) = args.p_prior {
        prior = prior.with_p_box(lo, hi);
    }
    let sigma = args.coef_sigma.unwrap_or(DEFAULT_COEF_SIGMA);
    prior.coef_sigma_theta = sigma;
    prior.coef_sigma_beta = sigma;
    prior.sigma_mode = match (
        args.sigma_mode.unwrap_or(SigmaModeArg::Fixed),
        args.hyper_scale,
    ) {
        (SigmaModeArg::Fixed, Some(_)) => {
            return Err(CliError::Usage(
                "--hyper-scale requires --sigma-mode hyper".into(),
            ))
        }
        (SigmaModeArg::Fixed, None) => SigmaMode::Fixed,
        (SigmaModeArg::Hyper, scale) => SigmaMode::Hyperprior {
            scale: scale.unwrap_or(DEFAULT_HYPERPRIOR_SCALE),
        },
    };
    prior.validate()?;
    Ok(prior)
}

fn build_chains(args: &ChainArgs) -> Result<ChainConfig, CliError> {
    let defaults = ChainConfig::default();
    let config = ChainConfig {
        n_chains: args.chains.unwrap_or(defaults.n_chains),
        iterations: args.iter.unwrap_or(defaults.iterations),
        warmup: args.warmup.unwrap_or(defaults.warmup),
        seed: args.seed.unwrap_or(defaults.seed),
        execution: Execution::Parallel,
        ..defaults
    };
    config.validate()?;
    Ok(config)
}

fn prior_json(prior: &PriorConfig) -> Value {
    let mut doc = json!({
        "omega": [prior.omega_lo, prior.omega_hi],
        "p": [prior.p_lo, prior.p_hi],
        "coef_sigma": prior.coef_sigma_theta,
    });
    match prior.sigma_mode {
        SigmaMode::Fixed => doc["sigma_mode"] = json!("fixed"),
        SigmaMode::Hyperprior { scale } => {
            doc["sigma_mode"] = json!("hyper");
            doc["hyper_scale"] = json!(scale);
        }
    }
    doc
}

fn summary_json(s: &PosteriorSummary) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("median".into(), json!(s.median));
    m.insert("q025".into(), json!(s.q025));
    m.insert("q975".into(), json!(s.q975));
    m.insert("mean".into(), json!(s.mean));
    m
}

/// One row per parameter: name, summary and, for sampled fits, R-hat and ESS.
struct Row {
    name: String,
    summary: PosteriorSummary,
    rhat: Option<f64>,
    ess: Option<f64>,
}

fn rows_csv(rows: &[Row]) -> Vec<u8> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("param,median,q025,q975,mean,rhat,ess\n");
    for r in rows {
        let s = &r.summary;
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.name,
            s.median,
            s.q025,
            s.q975,
            s.mean,
            opt(r.rhat),
            opt(r.ess)
        ));
    }
    out.into_bytes()
}

fn rows_json(rows: &[Row]) -> (Value, Value) {
    let mut params = Map::new();
    for r in rows {
        let mut m = summary_json(&r.summary);
        if let Some(v) = r.rhat {
            m.insert("rhat".into(), json!(v));
        }
        if let Some(v) = r.ess {
            m.insert("ess".into(), json!(v));
        }
        params.insert(r.name.clone(), Value::Object(m));
    }
    let order = rows.iter().map(|r| json!(r.name)).collect();
    (Value::Object(params), Value::Array(order))
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let prior = build_prior(&args.prior)?;
    let chains = build_chains(&args.chains)?;
    let data = data::load(&args.data)?;
    let format = args.output.format.unwrap_or(Format::Json);
    let stats = data.stats();

    if data.k() == 0 && data.q() == 0 {
        let res = analytic::fit_nocov(stats, &prior)?;
        let rows = [
            Row {
                name: "omega".into(),
                summary: res.omega_summary,
                rhat: None,
                ess: None,
            },
            Row {
                name: "p".into(),
                summary: res.p_summary,
                rhat: None,
                ess: None,
            },
        ];
        let bytes = match format {
            Format::Csv => rows_csv(&rows),
            Format::Json => {
                let (params, order) = rows_json(&rows);
                json_bytes(&json!({
                    "method": "analytic",
                    "n": stats.n(),
                    "s": stats.s(),
                    "prior": prior_json(&prior),
                    "parameters": params,
                    "parameter_order": order,
                }))
            }
        };
        return emit(args.output.out.as_deref(), &bytes);
    }

    fit_cov(&data, &prior, &chains, format, args.output.out.as_deref())
}

fn fit_cov(
    data: &Dataset,
    prior: &PriorConfig,
    chains: &ChainConfig,
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let res = mcmc::sample_cov(data, prior, chains)?;
    let diag = mcmc::diagnose(&res.draws)?;
    let rows: Vec<Row> = mcmc::summarize_draws(&res.draws)
        .into_iter()
        .enumerate()
        .map(|(j, summary)| Row {
            name: res.draws.param_names()[j].clone(),
            summary,
            rhat: Some(diag.rhat[j]),
            ess: Some(diag.ess[j]),
        })
        .collect();
    let converged = diag.converged(RHAT_LIMIT);
    let stuck: Vec<usize> = diag
        .divergent_or_stuck
        .iter()
        .enumerate()
        .filter_map(|(c, &s)| s.then_some(c))
        .collect();

    let bytes = match format {
        Format::Csv => rows_csv(&rows),
        Format::Json => {
            let (params, order) = rows_json(&rows);
            let stats = data.stats();
            json_bytes(&json!({
                "method": "mcmc",
                "n": stats.n(),
                "s": stats.s(),
                "prior": prior_json(prior),
                "sampler": {
                    "chains": chains.n_chains,
                    "iter": chains.iterations,
                    "warmup": chains.warmup,
                    "seed": chains.seed,
                },
                "parameters": params,
                "parameter_order": order,
                "diagnostics": {
                    "max_rhat": diag.max_rhat(),
                    "min_ess": diag.min_ess(),
                    "accept_rate": res.draws.accept_rate(),
                    "stuck_chains": stuck,
                    "rhat_limit": RHAT_LIMIT,
                    "converged": converged,
                },
            }))
        }
    };
    // Results are written even without convergence so they can be inspected.
    emit(out, &bytes)?;
    if !converged {
        return Err(CliError::NotConverged(format!(
            "max R-hat {:.3} (limit {RHAT_LIMIT}), stuck chains {stuck:?}",
            diag.max_rhat()
        )));
    }
    Ok(())
}

pub fn posterior(args: &PosteriorArgs) -> Result<(), CliError> {
    if !args.data.zi_cols.is_empty() || !args.data.nzi_cols.is_empty() {
        return Err(CliError::Usage(
            "posterior density grids are only available without covariates".into(),
        ));
    }
    let prior = build_prior(&args.prior)?;
    let data = data::load(&args.data)?;
    let rows = density_grids_for_plotting(data.stats(), &prior, args.points)?;
    let bytes = match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            write_density_csv(&rows, &mut buf).expect("writing to memory");
            buf
        }
        Format::Json => json_bytes(&serde_json::to_value(&rows).expect("plain data")),
    };
    emit(args.output.out.as_deref(), &bytes)
}

/// Grid settings read from `--config`. Flags override every field.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimConfig {
    mode: Option<ModeArg>,
    n: Option<Vec<usize>>,
    replicates: Option<usize>,
    seed: Option<u64>,
    chains: Option<usize>,
    iter: Option<usize>,
    warmup: Option<usize>,
    omega: Option<Vec<f64>>,
    p: Option<Vec<f64>>,
    theta0: Option<Vec<f64>>,
    theta1: Option<Vec<f64>>,
    theta2: Option<Vec<f64>>,
    beta0: Option<Vec<f64>>,
    beta1: Option<Vec<f64>>,
    beta2: Option<Vec<f64>>,
    omega_prior: Option<(f64, f64)>,
    p_prior: Option<(f64, f64)>,
    coef_sigma: Option<f64>,
    sigma_mode: Option<SigmaModeArg>,
    hyper_scale: Option<f64>,
}

fn read_config(path: &Path) -> Result<SimConfig, CliError> {
    let fail = |msg: String| CliError::Config {
        path: path.to_path_buf(),
        msg,
    };
    let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
    // toml error messages span several lines; keep the first one.
    toml::from_str(&text).map_err(|e| fail(e.to_string().lines().next().unwrap_or("").to_string()))
}

pub const DEFAULT_SIM_N: [usize; 2] = [500, 1500];
pub const DEFAULT_REPLICATES: usize = 100;

/// Merges flags over the config file over defaults.
fn grid_from(
    args: &SimulateArgs,
    cfg: SimConfig,
) -> Result<(GridSpec, PriorConfig, ChainConfig), CliError> {
    let mode = args.mode.or(cfg.mode).unwrap_or(ModeArg::Nocov);
    let pick = |flag: &Option<Vec<f64>>, file: Option<Vec<f64>>| flag.clone().or(file);
    let omega = pick(&args.omega, cfg.omega);
    let p = pick(&args.p, cfg.p);
    let cov_lists = [
        pick(&args.theta0, cfg.theta0),
        pick(&args.theta1, cfg.theta1),
        pick(&args.theta2, cfg.theta2),
        pick(&args.beta0, cfg.beta0),
        pick(&args.beta1, cfg.beta1),
        pick(&args.beta2, cfg.beta2),
    ];

    let values = match mode {
        ModeArg::Nocov => {
            if cov_lists.iter().any(Option::is_some) {
                return Err(CliError::Usage("coefficient lists need --mode cov".into()));
            }
            let GridValues::Nocov { omega: o, p: pp } = GridValues::study_nocov() else {
                unreachable!()
            };
            GridValues::Nocov {
                omega: omega.unwrap_or(o),
                p: p.unwrap_or(pp),
            }
        }
        ModeArg::Cov => {
            if omega.is_some() || p.is_some() {
                return Err(CliError::Usage("--omega and --p need --mode nocov".into()));
            }
            let GridValues::Cov {
                theta0,
                theta1,
                theta2,
                beta0,
                beta1,
                beta2,
            } = GridValues::study_cov()
            else {
                unreachable!()
            };
            let [t0, t1, t2, b0, b1, b2] = cov_lists;
            GridValues::Cov {
                theta0: t0.unwrap_or(theta0),
                theta1: t1.unwrap_or(theta1),
                theta2: t2.unwrap_or(theta2),
                beta0: b0.unwrap_or(beta0),
                beta1: b1.unwrap_or(beta1),
                beta2: b2.unwrap_or(beta2),
            }
        }
    };

    let replicates = args
        .replicates
        .or(cfg.replicates)
        .unwrap_or(DEFAULT_REPLICATES);
    if replicates == 0 {
        return Err(CliError::Usage("--replicates must be at least 1".into()));
    }
    let n = args.n.clone().or(cfg.n).unwrap_or(DEFAULT_SIM_N.to_vec());
    if n.contains(&0) {
        return Err(CliError::Usage("sample sizes must be positive".into()));
    }

    let prior = build_prior(&PriorArgs {
        omega_prior: args.prior.omega_prior.or(cfg.omega_prior),
        p_prior: args.prior.p_prior.or(cfg.p_prior),
        coef_sigma: args.prior.coef_sigma.or(cfg.coef_sigma),
        sigma_mode: args.prior.sigma_mode.or(cfg.sigma_mode),
        hyper_scale: args.prior.hyper_scale.or(cfg.hyper_scale),
    })?;
    let chains = build_chains(&ChainArgs {
        chains: args.chains.chains.or(cfg.chains),
        iter: args.chains.iter.or(cfg.iter),
        warmup: args.chains.warmup.or(cfg.warmup),
        seed: args.chains.seed.or(cfg.seed),
        threads: args.chains.threads,
    })?;
    let grid = GridSpec {
        values,
        n,
        replicates,
        seed: chains.seed,
    };
    // Builds every scenario up front so bad values fail before any work.
    grid.scenarios()?;
    Ok((grid, prior, chains))
}

fn progress(done: usize, total: usize, r: &SimResult) {
    let truth: Vec<String> = r
        .param_names
        .iter()
        .zip(r.scenario.true_values())
        .map(|(name, v)| format!("{name}={v}"))
        .collect();
    eprintln!(
        "[{done}/{total}] {} n={} {}: {} replicates, {} failed",
        r.scenario.mode().as_str(),
        r.scenario.n,
        truth.join(" "),
        r.scenario.replicates,
        r.n_failed
    );
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let cfg = match &args.config {
        Some(path) => read_config(path)?,
        None => SimConfig::default(),
    };
    let (grid, prior, chains) = grid_from(args, cfg)?;
    let total = grid.scenarios()?.len();
    let done = AtomicUsize::new(0);
    let results = simulation::run_grid(&grid, &prior, &chains, |_, r| {
        progress(done.fetch_add(1, Ordering::SeqCst) + 1, total, r)
    })?;

    let bytes = match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            simulation::write_results_csv(&results, &mut buf)
                .map_err(|e| CliError::Compute(e.to_string()))?;
            buf
        }
        Format::Json => json_bytes(&serde_json::to_value(&results).expect("plain data")),
    };
    emit(args.output.out.as_deref(), &bytes)
}
