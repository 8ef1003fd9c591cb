//! Repeated generate-and-fit runs and the bias / coverage / SE ratio / power
//! summaries.

use rayon::prelude::*;

use crate::data::{Dataset, Design};
use crate::estimates::{find_row, EstimateRow, Quantity};
use crate::mcmc::{fit_mcmc, posterior_summary};
use crate::ml::fit_ml;
use crate::params::{Engine, McmcBudget, ModelSpec};
use crate::sim::config::ScenarioConfig;
use crate::sim::generate::{derive_seed, generate, StreamRole};
use crate::sim::SimError;

/// Largest tolerated share of failed replications.
pub const MAX_FAILURE_SHARE: f64 = 0.2;

/// Estimates from one successful replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub rows: Vec<EstimateRow>,
    /// Fit succeeded with a warning (low effective sample size).
    pub warning: bool,
}

/// Something that turns a dataset into estimate rows. Errors count as failed
/// replications.
pub trait Estimator: Sync {
    fn estimate(&self, data: &Dataset, design: Design, seed: u64) -> Result<Replicate, String>;
}

pub struct MlEstimator;

impl Estimator for MlEstimator {
    fn estimate(&self, data: &Dataset, design: Design, _seed: u64) -> Result<Replicate, String> {
        let spec = ModelSpec::new(design, Engine::Likelihood);
        let fit = fit_ml(data, &spec).map_err(|e| e.to_string())?;
        if let Some(z) = fit.estimates.zeta {
            if fit.fixed_rho.is_none() && z.tanh().abs() > 1.0 - 1e-6 {
                return Err(format!(
                    "correlation estimate at the boundary (rho = {:.8})",
                    z.tanh()
                ));
            }
        }
        if !fit.converged {
            return Err(format!(
                "not converged after {} iterations (gradient {:.2e})",
                fit.iterations, fit.gradient_norm
            ));
        }
        if fit.vcov.is_none() {
            return Err("Hessian not positive definite".into());
        }
        Ok(Replicate {
            rows: fit.natural_scale,
            warning: false,
        })
    }
}

pub struct McmcEstimator {
    pub budget: McmcBudget,
}

impl Estimator for McmcEstimator {
    fn estimate(&self, data: &Dataset, design: Design, seed: u64) -> Result<Replicate, String> {
        let spec = ModelSpec::new(design, Engine::Mcmc);
        let draws = fit_mcmc(data, &spec, self.budget, seed).map_err(|e| e.to_string())?;
        let rows = posterior_summary(&draws, 0.95)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|r| r.to_estimate())
            .collect();
        Ok(Replicate {
            rows,
            warning: draws.low_ess,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub quantity: Quantity,
    pub truth: f64,
    pub bias: f64,
    pub coverage: f64,
    /// `None` with fewer than two successes or no spread in the estimates.
    pub se_ratio: Option<f64>,
    /// Reported for β₁, α and ρ only.
    pub power: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationMetrics {
    pub scenario: String,
    pub rows: Vec<MetricRow>,
    pub replications: usize,
    pub successes: usize,
    pub failures: usize,
    pub warnings: usize,
    /// (replication, message) of the first few failures.
    pub failure_examples: Vec<(usize, String)>,
}

impl SimulationMetrics {
    pub fn row(&self, q: &Quantity) -> Option<&MetricRow> {
        self.rows.iter().find(|r| &r.quantity == q)
    }
}

/// Targets in table order with their true values.
pub fn targets(config: &ScenarioConfig) -> Vec<(Quantity, f64)> {
    let t = &config.truth;
    let mut v = vec![
        (Quantity::VarF, t.var_f),
        (Quantity::VarT, t.var_t),
        (Quantity::Beta1, t.beta1),
        (Quantity::Alpha, t.alpha()),
    ];
    if config.design == Design::Crossed {
        v.push((Quantity::Rho, t.rho.unwrap_or(0.0)));
    }
    v
}

/// (point, se, lo, hi) per target, or an error naming the missing row.
fn extract(rows: &[EstimateRow], targets: &[(Quantity, f64)]) -> Result<Vec<[f64; 4]>, String> {
    targets
        .iter()
        .map(|(q, _)| {
            let r = find_row(rows, q).ok_or_else(|| format!("no estimate for {q}"))?;
            match (r.se, r.interval) {
                (Some(se), Some((lo, hi))) if r.point.is_finite() && se.is_finite() => {
                    Ok([r.point, se, lo, hi])
                }
                _ => Err(format!("no standard error or interval for {q}")),
            }
        })
        .collect()
}

/// Metrics from per-replication (point, se, lo, hi) records.
pub fn summarize(targets: &[(Quantity, f64)], records: &[Vec<[f64; 4]>]) -> Vec<MetricRow> {
    let k = records.len() as f64;
    targets
        .iter()
        .enumerate()
        .map(|(i, (q, truth))| {
            let col: Vec<[f64; 4]> = records.iter().map(|r| r[i]).collect();
            let mean = col.iter().map(|r| r[0]).sum::<f64>() / k;
            let covered = col
                .iter()
                .filter(|r| r[2] < *truth && *truth < r[3])
                .count();
            let se_ratio = (col.len() >= 2)
                .then(|| {
                    let sd =
                        (col.iter().map(|r| (r[0] - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
                    let mean_se = col.iter().map(|r| r[1]).sum::<f64>() / k;
                    mean_se / sd
                })
                .filter(|v| v.is_finite() && *v > 0.0);
            let power = matches!(q, Quantity::Beta1 | Quantity::Alpha | Quantity::Rho).then(|| {
                let contain_zero = col.iter().filter(|r| r[2] <= 0.0 && 0.0 <= r[3]).count();
                1.0 - contain_zero as f64 / k
            });
            MetricRow {
                quantity: q.clone(),
                truth: *truth,
                bias: mean - truth,
                coverage: covered as f64 / k,
                se_ratio,
                power,
            }
        })
        .collect()
}

/// Per-target (point, se, lo, hi) of one replication and its warning flag, or
/// why it failed.
type ReplicationResult = Result<(Vec<[f64; 4]>, bool), String>;

/// Runs the scenario with the engine named in its config.
pub fn run_scenario(config: &ScenarioConfig) -> Result<SimulationMetrics, SimError> {
    match config.engine {
        Engine::Likelihood => run_scenario_with(config, &MlEstimator),
        Engine::Mcmc => run_scenario_with(
            config,
            &McmcEstimator {
                budget: config.budget,
            },
        ),
    }
}

/// Replications run on the current rayon pool; results do not depend on
/// the number of workers.
pub fn run_scenario_with<E: Estimator + ?Sized>(
    config: &ScenarioConfig,
    estimator: &E,
) -> Result<SimulationMetrics, SimError> {
    config.validate()?;
    let targets = targets(config);
    let outcomes: Vec<Result<ReplicationResult, SimError>> = (1..=config.replications)
        .into_par_iter()
        .map(|k| {
            let g = generate(
                config.design,
                &config.truth,
                &config.population,
                config.seed,
                k as u64,
            )?;
            let sampler_seed = derive_seed(config.seed, k as u64, StreamRole::Sampler);
            Ok(estimator
                .estimate(&g.dataset, config.design, sampler_seed)
                .and_then(|rep| extract(&rep.rows, &targets).map(|x| (x, rep.warning))))
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = 0;
    let mut warnings = 0;
    let mut examples = Vec::new();
    for (i, out) in outcomes.into_iter().enumerate() {
        match out? {
            Ok((rec, warn)) => {
                records.push(rec);
                warnings += usize::from(warn);
            }
            Err(msg) => {
                failures += 1;
                if examples.len() < 5 {
                    examples.push((i + 1, msg));
                }
            }
        }
    }
    if failures as f64 > MAX_FAILURE_SHARE * config.replications as f64 || records.is_empty() {
        return Err(SimError::TooManyFailures {
            scenario: config.name.clone(),
            failed: failures,
            total: config.replications,
            first: examples.first().map(|e| e.1.clone()).unwrap_or_default(),
        });
    }
    Ok(SimulationMetrics {
        scenario: config.name.clone(),
        rows: summarize(&targets, &records),
        replications: config.replications,
        successes: records.len(),
        failures,
        warnings,
        failure_examples: examples,
    })
}
