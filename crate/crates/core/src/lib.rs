//! Mode differences in interviewer variances for mixed-mode surveys.
//!
//! Probit random-intercept models with mode-specific interviewer variances,
//! fitted by maximum likelihood (adaptive Gauss-Hermite quadrature) or by
//! MCMC (latent-variable Gibbs with half-t priors), interviewer-level
//! descriptive statistics, and the simulation harness used to study bias,
//! coverage, SE ratio and power of the variance-difference test.

// negated float comparisons also reject NaN, which is intended throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod descriptives;
pub mod estimates;
pub mod mcmc;
pub mod ml;
pub mod normal;
pub mod params;
pub mod quadrature;
pub mod report;
pub mod sim;

pub use data::{infer_design, load_dataset, Dataset, Design, Mode, RespondentRecord, Schema};
pub use estimates::{
    alpha_from_variances, icc, mode_effect_probability_scale, EstimateRow, Quantity,
};
pub use params::{Engine, McmcBudget, ModelSpec, ParameterVector};
