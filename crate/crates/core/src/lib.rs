//! Bayesian zero-inflated Bernoulli (ZIB) models.
//!
//! A binary outcome is one only if the unit is exposed (probability `omega`)
//! and the event then occurs (probability `p`). The crate provides
//!
//! * closed-form posterior marginals of `(omega, p)` without covariates
//!   ([`analytic`]),
//! * an adaptive Metropolis sampler for the logit-linear covariate model and
//!   for the no-covariate model ([`mcmc`]),
//! * maximum-likelihood logistic regression as a frequentist baseline
//!   ([`glm`]),
//! * data generation and a replication harness for simulation studies
//!   ([`simulation`]).
//!
//! Loops over chains, replicates and grid cells run on rayon when the
//! `parallel` feature is on (the default); see [`exec`].

pub mod analytic;
pub mod exec;
pub mod glm;
pub mod mcmc;
pub mod model;
pub mod simulation;
pub mod specfun;

pub use analytic::{
    build_marginal, fit_nocov, summarize, MarginalPosterior, Param, PosteriorSummary,
};
pub use exec::Execution;
pub use mcmc::{ChainConfig, ChainDraws, Diagnostics};
pub use model::{CoefVector, Dataset, PriorConfig, SigmaMode, SufficientStats, ZibParams};
