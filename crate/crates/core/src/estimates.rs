//! Natural-scale summaries shared by both engines, and the closed-form
//! transforms used to build them.

use std::fmt;

/// 97.5% standard normal quantile.
pub const Z_975: f64 = 1.959_964;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Quantity {
    Beta0,
    Beta1,
    Gamma(String),
    VarF,
    VarT,
    Alpha,
    Rho,
    IccF,
    IccT,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Beta0 => f.write_str("beta0"),
            Quantity::Beta1 => f.write_str("beta1"),
            Quantity::Gamma(name) => write!(f, "gamma[{name}]"),
            Quantity::VarF => f.write_str("var_f"),
            Quantity::VarT => f.write_str("var_t"),
            Quantity::Alpha => f.write_str("alpha"),
            Quantity::Rho => f.write_str("rho"),
            Quantity::IccF => f.write_str("icc_f"),
            Quantity::IccT => f.write_str("icc_t"),
        }
    }
}

/// One row of an estimate table. `se`/`interval` are `None` when they could
/// not be computed (printed as N/A).
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub quantity: Quantity,
    pub point: f64,
    pub se: Option<f64>,
    pub interval: Option<(f64, f64)>,
    /// Held at a fixed value rather than estimated.
    pub fixed: bool,
}

impl EstimateRow {
    pub fn excludes_zero(&self) -> bool {
        matches!(self.interval, Some((lo, hi)) if lo > 0.0 || hi < 0.0)
    }
}

pub fn find_row<'a>(rows: &'a [EstimateRow], q: &Quantity) -> Option<&'a EstimateRow> {
    rows.iter().find(|r| &r.quantity == q)
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TransformError {
    #[error("variances must be positive (got {0} and {1})")]
    NonPositiveVariance(f64, f64),
    #[error("variance must be non-negative (got {0})")]
    NegativeVariance(f64),
}

/// α = ½(ln σ²_f − ln σ²_t) = ln σ_f − ln σ_t.
pub fn alpha_from_variances(var_f: f64, var_t: f64) -> Result<f64, TransformError> {
    if !(var_f > 0.0 && var_t > 0.0) {
        return Err(TransformError::NonPositiveVariance(var_f, var_t));
    }
    Ok(0.5 * (var_f.ln() - var_t.ln()))
}

/// Interviewer intraclass correlation on the latent scale, where the
/// probit residual variance is 1.
pub fn icc(var: f64) -> Result<f64, TransformError> {
    if !(var >= 0.0) {
        return Err(TransformError::NegativeVariance(var));
    }
    Ok(var / (1.0 + var))
}

/// Change in P(y = 1) for a mode switch at a covariate profile:
/// φ(β₀ + β₁ + Σγₛxₛ)·β₁.
pub fn mode_effect_probability_scale(
    params: &crate::params::ParameterVector,
    covariate_profile: &[f64],
) -> f64 {
    crate::normal::pdf(params.linear_predictor(1.0, covariate_profile)) * params.beta1
}
