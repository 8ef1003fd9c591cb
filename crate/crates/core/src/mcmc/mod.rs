//! Bayesian engine: Gibbs sampling with half-t variance priors.

pub mod diagnostics;
pub mod sampler;
pub mod summary;

pub use diagnostics::{autocorrelation, effective_sample_size, ParameterDiagnostics};
pub use sampler::{fit_mcmc, run_chain, ChainMeta, LatentProblem, McmcError, PosteriorDraws};
pub use summary::{hpd_interval, posterior_summary, PosteriorRow};
