//! Command-line interface: `describe`, `fit` and `simulate`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::data::{load_dataset, CovariateColumn, Design, Schema};
use crate::descriptives::{describe_variable, Variable};
use crate::mcmc::{fit_mcmc, posterior_summary};
use crate::ml::fit_ml;
use crate::params::{Engine, McmcBudget, ModelSpec};
use crate::report::{
    describe_table, diagnostics_table, estimate_table, metrics_table, scenario_table, Format,
};
use crate::sim::{builtin_scenarios, parse_config, run_scenario, scenario_by_name, Workload};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
/// `--strict` and a warning (non-convergence, low ESS, failed replications).
pub const EXIT_STRICT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "modevar",
    version,
    about = "Mode differences in interviewer variances"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Input CSV.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Seed for all randomness; a random seed is drawn and recorded when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub tsv: bool,
    /// Full-precision numbers instead of 3 decimals.
    #[arg(long, global = true)]
    pub precise: bool,
    /// Exit with status 3 on warnings.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Write the run manifest here instead of standard error.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mode means and between/within-interviewer SDs of binary variables.
    Describe(DescribeArgs),
    /// Fit the nested or crossed probit mixed model.
    Fit(FitArgs),
    /// Run a simulation scenario.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct DescribeArgs {
    /// Comma-separated binary variables.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        num_args = 1..,
        value_parser = clap::builder::NonEmptyStringValueParser::new()
    )]
    pub variables: Vec<String>,
    #[arg(long, default_value = "mode")]
    pub mode_column: String,
    #[arg(long, default_value = "interviewer")]
    pub interviewer_column: String,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, default_value = "y")]
    pub outcome: String,
    #[arg(long, default_value = "mode")]
    pub mode_column: String,
    #[arg(long, default_value = "interviewer")]
    pub interviewer_column: String,
    /// Numeric covariates.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// Categorical covariates (dummy coded, first level in sorted order as reference).
    #[arg(long, value_delimiter = ',')]
    pub categorical: Vec<String>,
    /// nested or crossed; inferred from the data when absent.
    #[arg(long)]
    pub design: Option<Design>,
    #[arg(long, default_value = "ml")]
    pub engine: Engine,
    /// Hold the effect correlation fixed (crossed design).
    #[arg(long, allow_hyphen_values = true)]
    pub fixed_rho: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// Gauss-Hermite nodes for one-dimensional integrals.
    #[arg(long, default_value_t = 21)]
    pub nodes: usize,
    /// Nodes per dimension for two-dimensional integrals.
    #[arg(long, default_value_t = 15)]
    pub nodes_2d: usize,
    /// Write retained MCMC draws to this CSV.
    #[arg(long)]
    pub draws: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in scenario (see --list-scenarios).
    #[arg(long, conflicts_with = "config")]
    pub scenario: Option<String>,
    /// Scenario file of key = value lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub list_scenarios: bool,
    /// Number of replications.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub engine: Option<Engine>,
    #[arg(long)]
    pub workload: Option<Workload>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
}

/// Resolved configuration, seed, timing and warnings of one run.
#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    pub command: String,
    /// Plain key = value lines; for `simulate` a valid scenario file.
    pub config: String,
    pub seed: Option<u64>,
    pub wall_time: f64,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut s = format!(
            "# modevar {}\n# command: {}\n",
            env!("CARGO_PKG_VERSION"),
            self.command
        );
        if let Some(seed) = self.seed {
            s.push_str(&format!("# seed: {seed}\n"));
        }
        s.push_str(&format!("# wall_time_s: {:.3}\n", self.wall_time));
        for n in &self.notes {
            s.push_str(&format!("# note: {n}\n"));
        }
        for w in &self.warnings {
            s.push_str(&format!("# warning: {w}\n"));
        }
        s.push_str(&self.config);
        s
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn need_input(cli: &Cli) -> Result<&Path> {
    cli.input
        .as_deref()
        .ok_or_else(|| anyhow!("--input is required for this command"))
}

struct Outcome {
    stdout: String,
    manifest: Option<RunManifest>,
    warned: bool,
}

fn cmd_describe(cli: &Cli, args: &DescribeArgs) -> Result<Outcome> {
    let input = need_input(cli)?;
    let fmt = Format {
        tsv: cli.tsv,
        precise: cli.precise,
    };
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for v in &args.variables {
        let schema = Schema::new(v, &args.mode_column, &args.interviewer_column);
        let d = load_dataset(input, &schema).with_context(|| format!("variable `{v}`"))?;
        if d.dropped_rows() > 0 {
            warnings.push(format!(
                "{v}: {} rows dropped for missing values",
                d.dropped_rows()
            ));
        }
        rows.push(describe_variable(&d, v, Variable::Outcome)?);
    }
    let config = format!(
        "input = {}\nvariables = {}\nmode_column = {}\ninterviewer_column = {}\n",
        input.display(),
        args.variables.join(","),
        args.mode_column,
        args.interviewer_column
    );
    Ok(Outcome {
        stdout: describe_table(&rows, fmt).render(fmt.tsv),
        manifest: Some(RunManifest {
            command: "describe".into(),
            config,
            warnings,
            ..RunManifest::default()
        }),
        warned: false,
    })
}

fn cmd_fit(cli: &Cli, args: &FitArgs) -> Result<Outcome> {
    let input = need_input(cli)?;
    let fmt = Format {
        tsv: cli.tsv,
        precise: cli.precise,
    };
    let mut schema = Schema::new(&args.outcome, &args.mode_column, &args.interviewer_column);
    for c in &args.covariates {
        schema = schema.with_covariate(CovariateColumn::numeric(c));
    }
    for c in &args.categorical {
        schema = schema.with_covariate(CovariateColumn::categorical(c));
    }
    if let Some(d) = args.design {
        schema = schema.with_design(d);
    }
    let dataset = load_dataset(input, &schema)?;
    let mut spec = ModelSpec::new(dataset.design(), args.engine);
    spec.fixed_rho = args.fixed_rho;
    spec.quadrature_nodes = args.nodes;
    spec.quadrature_nodes_2d = args.nodes_2d;
    spec.validate().map_err(|e| anyhow!(e))?;

    let mut warnings = Vec::new();
    if dataset.dropped_rows() > 0 {
        warnings.push(format!(
            "{} rows dropped for missing values",
            dataset.dropped_rows()
        ));
    }
    let mut config = format!(
        "input = {}\noutcome = {}\nmode_column = {}\ninterviewer_column = {}\ncovariates = {}\ncategorical = {}\ndesign = {}\nengine = {}\nfixed_rho = {}\n",
        input.display(),
        args.outcome,
        args.mode_column,
        args.interviewer_column,
        args.covariates.join(","),
        args.categorical.join(","),
        spec.design,
        spec.engine,
        spec.fixed_rho.map_or_else(|| "none".to_string(), |r| r.to_string()),
    );
    let mut stdout;
    let mut seed = None;
    match args.engine {
        Engine::Likelihood => {
            config.push_str(&format!(
                "nodes = {}\nnodes_2d = {}\n",
                args.nodes, args.nodes_2d
            ));
            let fit = fit_ml(&dataset, &spec)?;
            if !fit.converged {
                warnings.push(format!(
                    "optimizer did not converge ({} iterations, max |gradient| {:.2e})",
                    fit.iterations, fit.gradient_norm
                ));
            }
            if fit.vcov.is_none() {
                warnings.push("Hessian not positive definite; standard errors unavailable".into());
            }
            config.push_str(&format!(
                "# loglik: {}\n# iterations: {}\n",
                fit.loglik, fit.iterations
            ));
            stdout = estimate_table(&fit.natural_scale, fmt, false).render(fmt.tsv);
        }
        Engine::Mcmc => {
            let desk = McmcBudget::DESK;
            let budget = McmcBudget {
                iterations: args.iterations.unwrap_or(desk.iterations),
                burn_in: args.burn_in.unwrap_or(desk.burn_in),
                thin: args.thin.unwrap_or(desk.thin),
            };
            let s = resolve_seed(cli.seed);
            seed = Some(s);
            config.push_str(&format!(
                "iterations = {}\nburn_in = {}\nthin = {}\nseed = {s}\n",
                budget.iterations, budget.burn_in, budget.thin
            ));
            let draws = fit_mcmc(&dataset, &spec, budget, s)?;
            if draws.low_ess {
                warnings.push(format!(
                    "effective sample size below {} for at least one parameter",
                    spec.sampler.min_ess
                ));
            }
            if let Some(path) = &args.draws {
                let f = std::fs::File::create(path)
                    .with_context(|| format!("cannot write {}", path.display()))?;
                draws.write_csv(std::io::BufWriter::new(f))?;
            }
            let rows: Vec<_> = posterior_summary(&draws, 0.95)?
                .iter()
                .map(|r| r.to_estimate())
                .collect();
            stdout = estimate_table(&rows, fmt, true).render(fmt.tsv);
            if let Some(d) = &draws.diagnostics {
                stdout.push('\n');
                stdout.push_str(&diagnostics_table(&draws.columns, d, fmt).render(fmt.tsv));
            }
        }
    }
    let warned = !warnings.is_empty() && !(warnings.len() == 1 && dataset.dropped_rows() > 0);
    Ok(Outcome {
        stdout,
        manifest: Some(RunManifest {
            command: "fit".into(),
            config,
            seed,
            warnings,
            ..RunManifest::default()
        }),
        warned,
    })
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> Result<Outcome> {
    let fmt = Format {
        tsv: cli.tsv,
        precise: cli.precise,
    };
    if args.list_scenarios {
        return Ok(Outcome {
            stdout: scenario_table(&builtin_scenarios(), fmt).render(fmt.tsv),
            manifest: None,
            warned: false,
        });
    }
    let mut config = match (&args.scenario, &args.config) {
        (Some(name), None) => scenario_by_name(name)
            .ok_or_else(|| anyhow!("unknown scenario `{name}` (see --list-scenarios)"))?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            parse_config(&text)?
        }
        _ => bail!("give either --scenario or --config"),
    };
    if let Some(k) = args.k {
        config.replications = k;
    }
    if let Some(e) = args.engine {
        config.engine = e;
    }
    if let Some(w) = &args.workload {
        config.population.workload = w.clone();
    }
    if let Some(v) = args.iterations {
        config.budget.iterations = v;
    }
    if let Some(v) = args.burn_in {
        config.budget.burn_in = v;
    }
    if let Some(v) = args.thin {
        config.budget.thin = v;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    config.validate()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()?;
    let metrics = pool.install(|| run_scenario(&config))?;
    let mut warnings = Vec::new();
    if metrics.failures > 0 {
        warnings.push(format!(
            "{} of {} replications failed and were excluded",
            metrics.failures, metrics.replications
        ));
        for (k, msg) in &metrics.failure_examples {
            warnings.push(format!("replication {k}: {msg}"));
        }
    }
    if metrics.warnings > 0 {
        warnings.push(format!(
            "{} replications had low effective sample size",
            metrics.warnings
        ));
    }
    let notes = vec![
        "beta0 is a convention for the data-generating intercept, not an estimate".into(),
        format!("successful replications: {}", metrics.successes),
    ];
    Ok(Outcome {
        stdout: metrics_table(&metrics, fmt).render(fmt.tsv),
        manifest: Some(RunManifest {
            command: "simulate".into(),
            config: config.to_config_text(),
            seed: Some(config.seed),
            notes,
            warnings: warnings.clone(),
            ..RunManifest::default()
        }),
        warned: !warnings.is_empty(),
    })
}

/// Runs a parsed command, writing tables to `out` and diagnostics to `err`.
/// Returns the exit status.
pub fn run<O: Write, E: Write>(cli: &Cli, out: &mut O, err: &mut E) -> i32 {
    let start = Instant::now();
    let result = match &cli.command {
        Command::Describe(a) => cmd_describe(cli, a),
        Command::Fit(a) => cmd_fit(cli, a),
        Command::Simulate(a) => cmd_simulate(cli, a),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            return EXIT_ERROR;
        }
    };
    if out.write_all(outcome.stdout.as_bytes()).is_err() {
        return EXIT_ERROR;
    }
    if let Some(mut m) = outcome.manifest {
        m.wall_time = start.elapsed().as_secs_f64();
        let text = m.render();
        match &cli.manifest {
            Some(path) => {
                if let Err(e) = std::fs::write(path, text) {
                    let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
                    return EXIT_ERROR;
                }
            }
            None => {
                let _ = err.write_all(text.as_bytes());
            }
        }
    }
    if cli.strict && outcome.warned {
        EXIT_STRICT
    } else {
        EXIT_OK
    }
}

/// Parses `args` (program name first) and runs; clap usage errors map to 2.
pub fn main_with_args<I, T, O, E>(args: I, out: &mut O, err: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    O: Write,
    E: Write,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(rendered.as_bytes());
            } else {
                let _ = out.write_all(rendered.as_bytes());
            }
            code
        }
    }
}
