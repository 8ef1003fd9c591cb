//! Model specifications and the unconstrained parameter vector shared by
//! both estimation engines.

use crate::data::Design;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Likelihood,
    Mcmc,
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Engine::Likelihood => "ml",
            Engine::Mcmc => "mcmc",
        })
    }
}

impl std::str::FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ml" | "likelihood" => Ok(Engine::Likelihood),
            "mcmc" | "bayes" | "bayesian" => Ok(Engine::Mcmc),
            other => Err(format!("unknown engine `{other}` (expected ml or mcmc)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            gradient_tolerance: 1e-6,
            max_iterations: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmcBudget {
    /// Total iterations, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl McmcBudget {
    /// Desk-scale default: 20,000 iterations, 5,000 burn-in, thin 10.
    pub const DESK: McmcBudget = McmcBudget {
        iterations: 20_000,
        burn_in: 5_000,
        thin: 10,
    };

    /// Long-run budget: 250,000 iterations, thin 100.
    pub const FULL: McmcBudget = McmcBudget {
        iterations: 250_000,
        burn_in: 50_000,
        thin: 100,
    };

    pub fn retained(&self) -> usize {
        if self.iterations <= self.burn_in || self.thin == 0 {
            0
        } else {
            (self.iterations - self.burn_in).div_ceil(self.thin)
        }
    }
}

impl Default for McmcBudget {
    fn default() -> Self {
        McmcBudget::DESK
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerSettings {
    /// Random-walk updates per variance parameter per sweep.
    pub variance_steps: usize,
    pub target_acceptance: f64,
    /// Minimum effective sample size before a fit is flagged.
    pub min_ess: f64,
    /// Half-t prior on σ: degrees of freedom and scale.
    pub half_t_df: f64,
    pub half_t_scale: f64,
    /// Prior variance of every fixed-effect coefficient.
    pub coefficient_prior_variance: f64,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        SamplerSettings {
            variance_steps: 3,
            target_acceptance: 0.4,
            min_ess: 100.0,
            half_t_df: 3.0,
            half_t_scale: 1.0,
            coefficient_prior_variance: 1e6,
        }
    }
}

/// What to fit and how.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub design: Design,
    pub engine: Engine,
    /// Model with respondent covariates when true, intercept + mode only otherwise.
    pub include_covariates: bool,
    /// Correlation held fixed (crossed design only).
    pub fixed_rho: Option<f64>,
    pub quadrature_nodes: usize,
    pub quadrature_nodes_2d: usize,
    pub optimizer: OptimizerSettings,
    pub sampler: SamplerSettings,
}

impl ModelSpec {
    pub fn new(design: Design, engine: Engine) -> Self {
        ModelSpec {
            design,
            engine,
            include_covariates: true,
            fixed_rho: None,
            quadrature_nodes: 21,
            quadrature_nodes_2d: 15,
            optimizer: OptimizerSettings::default(),
            sampler: SamplerSettings::default(),
        }
    }

    pub fn nested_ml() -> Self {
        ModelSpec::new(Design::Nested, Engine::Likelihood)
    }

    pub fn crossed_ml() -> Self {
        ModelSpec::new(Design::Crossed, Engine::Likelihood)
    }

    pub fn validate(&self) -> Result<(), String> {
        if let Some(r) = self.fixed_rho {
            if self.design != Design::Crossed {
                return Err("a fixed correlation is only meaningful for the crossed design".into());
            }
            if !(r > -1.0 && r < 1.0) {
                return Err(format!(
                    "fixed correlation {r} must lie strictly inside (-1, 1)"
                ));
            }
        }
        if self.quadrature_nodes == 0 || self.quadrature_nodes_2d == 0 {
            return Err("quadrature node counts must be positive".into());
        }
        Ok(())
    }
}

/// (β₀, β₁, γ, λ_f = ln σ²_f, λ_t = ln σ²_t, ζ = atanh ρ).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub beta0: f64,
    pub beta1: f64,
    pub gamma: Vec<f64>,
    pub lambda_f: f64,
    pub lambda_t: f64,
    /// Present for the crossed design only.
    pub zeta: Option<f64>,
}

impl ParameterVector {
    pub fn new(beta0: f64, beta1: f64, var_f: f64, var_t: f64) -> Self {
        ParameterVector {
            beta0,
            beta1,
            gamma: Vec::new(),
            lambda_f: var_f.ln(),
            lambda_t: var_t.ln(),
            zeta: None,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.zeta = Some(rho.atanh());
        self
    }

    pub fn with_gamma(mut self, gamma: Vec<f64>) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn var_f(&self) -> f64 {
        self.lambda_f.exp()
    }

    pub fn var_t(&self) -> f64 {
        self.lambda_t.exp()
    }

    /// Correlation; 0 when absent.
    pub fn rho(&self) -> f64 {
        self.zeta.map_or(0.0, f64::tanh)
    }

    pub fn alpha(&self) -> f64 {
        0.5 * (self.lambda_f - self.lambda_t)
    }

    /// Fixed-effect coefficients in design-row order (1, M, x₁..x_S).
    pub fn coefficients(&self) -> Vec<f64> {
        let mut beta = Vec::with_capacity(2 + self.gamma.len());
        beta.push(self.beta0);
        beta.push(self.beta1);
        beta.extend_from_slice(&self.gamma);
        beta
    }

    /// Linear predictor β₀ + β₁M + Σγₛxₛ.
    pub fn linear_predictor(&self, mode_flag: f64, covariates: &[f64]) -> f64 {
        self.beta0
            + self.beta1 * mode_flag
            + self
                .gamma
                .iter()
                .zip(covariates)
                .map(|(g, x)| g * x)
                .sum::<f64>()
    }
}

/// Positions of each parameter in the flat optimization vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n_coefficients: usize,
    pub has_zeta: bool,
}

impl Layout {
    pub fn new(n_covariates: usize, has_zeta: bool) -> Self {
        Layout {
            n_coefficients: 2 + n_covariates,
            has_zeta,
        }
    }

    pub fn len(&self) -> usize {
        self.n_coefficients + 2 + usize::from(self.has_zeta)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lambda_f(&self) -> usize {
        self.n_coefficients
    }

    pub fn lambda_t(&self) -> usize {
        self.n_coefficients + 1
    }

    pub fn zeta(&self) -> Option<usize> {
        self.has_zeta.then_some(self.n_coefficients + 2)
    }

    pub fn flatten(&self, p: &ParameterVector) -> Vec<f64> {
        let mut v = p.coefficients();
        v.resize(self.n_coefficients, 0.0);
        v.push(p.lambda_f);
        v.push(p.lambda_t);
        if self.has_zeta {
            v.push(p.zeta.unwrap_or(0.0));
        }
        v
    }

    /// Rebuilds a parameter vector; `fixed_zeta` fills ζ when it is not free.
    pub fn unflatten(&self, v: &[f64], fixed_zeta: Option<f64>) -> ParameterVector {
        ParameterVector {
            beta0: v[0],
            beta1: v[1],
            gamma: v[2..self.n_coefficients].to_vec(),
            lambda_f: v[self.lambda_f()],
            lambda_t: v[self.lambda_t()],
            zeta: self.zeta().map(|i| v[i]).or(fixed_zeta),
        }
    }
}
