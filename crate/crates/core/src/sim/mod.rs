//! Simulation studies: seeded generation under the ABS (nested) and HRS
//! (crossed) setups, repeated fits, and bias / coverage / SE ratio / power.

pub mod config;
pub mod generate;
pub mod run;

pub use config::{
    builtin_scenarios, full_scale_scenarios, parse_config, scenario_by_name, Population,
    ScenarioConfig, Truth, Workload,
};
pub use generate::{
    derive_seed, generate, generate_crossed, generate_nested, Generated, StreamRole,
};
pub use run::{
    run_scenario, run_scenario_with, Estimator, McmcEstimator, MetricRow, MlEstimator, Replicate,
    SimulationMetrics,
};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("workload: {0}")]
    Workload(String),
    #[error("scenario {scenario}: {failed} of {total} replications failed (first: {first})")]
    TooManyFailures {
        scenario: String,
        failed: usize,
        total: usize,
        first: String,
    },
}
