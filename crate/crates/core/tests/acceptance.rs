//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Simulation results are cached under the cargo target tmp dir, keyed on the
//! scenario config and a hash of the library sources, so a rerun against
//! unchanged sources skips the long scenarios. Set `MODEVAR_ACCEPTANCE_FRESH=1` to ignore
//! the cache. `MODEVAR_ACCEPTANCE_ONLY=3,7` restricts the run to some criteria.

mod common;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use common::{brute_1d, brute_2d, lik, random_params, random_records, record, rel_err};
use modevar::cli::main_with_args;
use modevar::data::{Design, Mode};
use modevar::mcmc::{fit_mcmc, posterior_summary, run_chain, LatentProblem};
use modevar::ml::{
    cluster_loglik_crossed, cluster_loglik_nested, delta_var_alpha, fit_ml, Cluster,
    LikelihoodModel, Quadrature,
};
use modevar::params::{Engine, Layout, McmcBudget, ModelSpec, ParameterVector, SamplerSettings};
use modevar::sim::{
    builtin_scenarios, full_scale_scenarios, generate, run_scenario, scenario_by_name, Population,
    ScenarioConfig, SimulationMetrics, Truth, Workload,
};
use modevar::{icc, Quantity};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check {
        pass,
        detail: detail.into(),
    }
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo && x <= hi
}

// ---- cached scenario runs ----

/// Cached metrics: (quantity name, bias, coverage, power) plus counts.
#[derive(Clone)]
struct Metrics {
    rows: Vec<(String, f64, f64, Option<f64>)>,
    successes: usize,
    failures: usize,
}

impl Metrics {
    fn get(&self, q: &Quantity) -> (f64, f64, Option<f64>) {
        let name = q.to_string();
        let r = self.rows.iter().find(|r| r.0 == name).expect("metric row");
        (r.1, r.2, r.3)
    }

    fn power_alpha(&self) -> f64 {
        self.get(&Quantity::Alpha).2.unwrap()
    }

    fn from_run(m: &SimulationMetrics) -> Self {
        Metrics {
            rows: m
                .rows
                .iter()
                .map(|r| (r.quantity.to_string(), r.bias, r.coverage, r.power))
                .collect(),
            successes: m.successes,
            failures: m.failures,
        }
    }

    fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.successes, self.failures);
        for (q, b, c, p) in &self.rows {
            let p = p.map_or("NA".to_string(), |v| format!("{v:e}"));
            s.push_str(&format!("{q} {b:e} {c:e} {p}\n"));
        }
        s
    }

    fn from_text(text: &str) -> Option<Self> {
        let mut lines = text.lines();
        let mut head = lines.next()?.split(' ');
        let successes = head.next()?.parse().ok()?;
        let failures = head.next()?.parse().ok()?;
        let mut rows = Vec::new();
        for l in lines {
            let f: Vec<&str> = l.split(' ').collect();
            if f.len() != 4 {
                return None;
            }
            let p = if f[3] == "NA" {
                None
            } else {
                Some(f[3].parse().ok()?)
            };
            rows.push((f[0].to_string(), f[1].parse().ok()?, f[2].parse().ok()?, p));
        }
        Some(Metrics {
            rows,
            successes,
            failures,
        })
    }
}

/// Hash of the library sources; scenario results depend on nothing else.
fn source_hash() -> u64 {
    static HASH: OnceLock<u64> = OnceLock::new();
    *HASH.get_or_init(|| {
        fn walk(dir: &Path, files: &mut Vec<PathBuf>) {
            for entry in std::fs::read_dir(dir).into_iter().flatten().flatten() {
                let p = entry.path();
                if p.is_dir() {
                    walk(&p, files);
                } else {
                    files.push(p);
                }
            }
        }
        let root = Path::new(env!("CARGO_MANIFEST_DIR"));
        let mut files = Vec::new();
        walk(&root.join("src"), &mut files);
        files.push(root.join("Cargo.toml"));
        files.sort();
        let mut h = DefaultHasher::new();
        for f in files {
            f.strip_prefix(root).unwrap_or(&f).hash(&mut h);
            std::fs::read(&f).unwrap_or_default().hash(&mut h);
        }
        h.finish()
    })
}

fn cache_path(config: &ScenarioConfig) -> PathBuf {
    let mut h = DefaultHasher::new();
    config.to_config_text().hash(&mut h);
    source_hash().hash(&mut h);
    PathBuf::from(env!("CARGO_TARGET_TMPDIR"))
        .join("acceptance-cache")
        .join(format!(
            "{}-{}-{:016x}.txt",
            config.name,
            config.engine,
            h.finish()
        ))
}

fn scenario(config: &ScenarioConfig) -> Result<Metrics, String> {
    let path = cache_path(config);
    let fresh = std::env::var("MODEVAR_ACCEPTANCE_FRESH").is_ok_and(|v| v == "1");
    if !fresh {
        if let Some(m) = std::fs::read_to_string(&path)
            .ok()
            .and_then(|t| Metrics::from_text(&t))
        {
            return Ok(m);
        }
    }
    let start = Instant::now();
    let m = run_scenario(config).map_err(|e| e.to_string())?;
    eprintln!(
        "  ran {} ({}) in {:.0} s: {} ok, {} failed",
        config.name,
        config.engine,
        start.elapsed().as_secs_f64(),
        m.successes,
        m.failures
    );
    let m = Metrics::from_run(&m);
    if let Some(dir) = path.parent() {
        let _ = std::fs::create_dir_all(dir);
    }
    let _ = std::fs::write(&path, m.to_text());
    Ok(m)
}

fn builtin(name: &str, engine: Engine) -> ScenarioConfig {
    let mut c = scenario_by_name(name).expect("built-in scenario");
    c.engine = engine;
    c
}

fn full_hrs(i: usize) -> ScenarioConfig {
    full_scale_scenarios().remove(i)
}

fn run_named(name: &str, engine: Engine) -> Result<Metrics, String> {
    scenario(&builtin(name, engine))
}

fn fmt_power(ms: &[(String, f64)]) -> String {
    ms.iter()
        .map(|(n, p)| format!("{n} {p:.3}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn monotone(powers: &[f64], slack: f64) -> bool {
    powers.windows(2).all(|w| w[1] >= w[0] - slack)
}

// ---- criteria ----

fn c1() -> Result<Check, String> {
    let m = run_named("abs-1", Engine::Likelihood)?;
    let p = m.power_alpha();
    let (bias, cov, _) = m.get(&Quantity::VarF);
    Ok(check(
        within(p, 0.0, 0.12) && within(cov, 0.90, 1.0) && bias.abs() <= 0.03,
        format!("power(alpha) {p:.3}, coverage(var_f) {cov:.3}, bias(var_f) {bias:.4}"),
    ))
}

fn c2() -> Result<Check, String> {
    let m = run_named("abs-4", Engine::Likelihood)?;
    let p = m.power_alpha();
    let pb = m.get(&Quantity::Beta1).2.unwrap();
    let (bias, _, _) = m.get(&Quantity::VarF);
    Ok(check(
        within(p, 0.513, 0.753) && within(pb, 0.724, 0.924) && bias.abs() <= 0.05,
        format!("power(alpha) {p:.3}, power(beta1) {pb:.3}, bias(var_f) {bias:.4}"),
    ))
}

fn c3() -> Result<Check, String> {
    let m = run_named("abs-4", Engine::Mcmc)?;
    let p = m.power_alpha();
    let (_, cov, _) = m.get(&Quantity::Alpha);
    Ok(check(
        within(p, 0.38, 0.66) && within(cov, 0.905, 1.0),
        format!("power(alpha) {p:.3}, coverage(alpha) {cov:.3}"),
    ))
}

fn c4() -> Result<Check, String> {
    let m = scenario(&full_hrs(3))?;
    let p = m.power_alpha();
    let (bias, _, _) = m.get(&Quantity::VarF);
    let (_, cov_rho, _) = m.get(&Quantity::Rho);
    let full_ok = within(p, 0.865, 1.0) && bias.abs() <= 0.01 && within(cov_rho, 0.935, 1.0);
    let mut desk = Vec::new();
    for i in 1..=4 {
        let name = format!("hrs-{i}");
        desk.push((
            name.clone(),
            run_named(&name, Engine::Likelihood)?.power_alpha(),
        ));
    }
    let powers: Vec<f64> = desk.iter().map(|d| d.1).collect();
    let desk_ok = monotone(&powers, 0.0);
    Ok(check(
        full_ok && desk_ok,
        format!(
            "full scale: power(alpha) {p:.3}, bias(var_f) {bias:.4}, coverage(rho) {cov_rho:.3}, {} ok / {} failed; desk ordering: {}",
            m.successes,
            m.failures,
            fmt_power(&desk)
        ),
    ))
}

fn c5() -> Result<Check, String> {
    let ml = run_named("hrs-1", Engine::Likelihood)?.power_alpha();
    let mc = run_named("hrs-1", Engine::Mcmc)?.power_alpha();
    Ok(check(
        ml <= 0.10 && mc <= 0.10,
        format!("power(alpha): ml {ml:.3}, mcmc {mc:.3}"),
    ))
}

fn c6() -> Result<Check, String> {
    let mut ok = true;
    let mut parts = Vec::new();
    for engine in [Engine::Likelihood, Engine::Mcmc] {
        for family in ["abs", "hrs"] {
            let mut ps = Vec::new();
            for i in 1..=4 {
                let name = format!("{family}-{i}");
                ps.push((name.clone(), run_named(&name, engine)?.power_alpha()));
            }
            let powers: Vec<f64> = ps.iter().map(|p| p.1).collect();
            let good = monotone(&powers, 0.07);
            ok &= good;
            parts.push(format!(
                "{engine} {family} [{}]{}",
                powers
                    .iter()
                    .map(|p| format!("{p:.3}"))
                    .collect::<Vec<_>>()
                    .join(" "),
                if good { "" } else { " not monotone" }
            ));
        }
    }
    Ok(check(ok, parts.join("; ")))
}

fn c7() -> Result<Check, String> {
    let q = Quadrature::default();
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        for j in 0..10 {
            let e = -3.0 + 6.0 * i as f64 / 9.0;
            let var = 0.01 + 1.99 * j as f64 / 9.0;
            let p = ParameterVector::new(e, 0.0, var, var).with_rho(0.3);
            for (y, mode) in [(1, Mode::Tel), (0, Mode::Ftf)] {
                let c = Cluster::from_records(&[record(y, mode, vec![])], 0);
                let expect = lik(y, e / (1.0 + var).sqrt());
                for v in [
                    cluster_loglik_nested(&p, &c, &q),
                    cluster_loglik_crossed(&p, &c, &q),
                ] {
                    let v = v.map_err(|e| e.to_string())?;
                    worst = worst.max((v.exp() - expect).abs());
                }
            }
        }
    }
    Ok(check(
        worst < 1e-8,
        format!("max abs error {worst:.2e} over eta in [-3, 3], var in [0.01, 2]"),
    ))
}

fn c8() -> Result<Check, String> {
    let q = Quadrature::default();
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let mut worst: f64 = 0.0;
    for f in 0..20 {
        let n_cov = f % 3;
        let p = random_params(&mut rng, n_cov);
        let mode = if f % 2 == 0 { Mode::Ftf } else { Mode::Tel };
        let recs = random_records(&mut rng, 1 + f % 8, n_cov, &[mode]);
        let var = if mode == Mode::Ftf {
            p.var_f()
        } else {
            p.var_t()
        };
        let c = Cluster::from_records(&recs, n_cov);
        let got = cluster_loglik_nested(&p, &c, &q).map_err(|e| e.to_string())?;
        worst = worst.max(rel_err(got, brute_1d(&p, &recs, var)));

        let recs = random_records(&mut rng, 2 + f % 7, n_cov, &[Mode::Ftf, Mode::Tel]);
        let c = Cluster::from_records(&recs, n_cov);
        let got = cluster_loglik_crossed(&p, &c, &q).map_err(|e| e.to_string())?;
        worst = worst.max(rel_err(got, brute_2d(&p, &recs)));
    }
    Ok(check(
        worst < 1e-5,
        format!("max rel error {worst:.2e} on 20 + 20 fixtures"),
    ))
}

fn c9() -> Result<Check, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (design, seed) in [(Design::Nested, 1), (Design::Crossed, 2)] {
        let truth = Truth {
            beta0: 0.1,
            beta1: 0.4,
            var_f: 0.3,
            var_t: 0.15,
            rho: (design == Design::Crossed).then_some(0.4),
        };
        let population = Population {
            n: 600,
            n_tel: None,
            interviewers_ftf: 8,
            interviewers_tel: 8,
            interviewers_both: if design == Design::Crossed { 10 } else { 0 },
            workload: Workload::Random,
        };
        let d = generate(design, &truth, &population, seed, 1)
            .map_err(|e| e.to_string())?
            .dataset;
        let model = LikelihoodModel::new(&d, design, false, Quadrature::default());
        let layout = Layout::new(0, design == Design::Crossed);
        for _ in 0..10 {
            let theta = layout.flatten(&random_params(&mut rng, 0));
            let (_, g) = model
                .loglik_grad(&layout, &theta, None)
                .map_err(|e| e.to_string())?;
            for j in 0..theta.len() {
                let h = 1e-5 * (1.0 + theta[j].abs());
                let mut a = theta.clone();
                a[j] += h;
                let mut b = theta.clone();
                b[j] -= h;
                let fa = model
                    .loglik_grad(&layout, &a, None)
                    .map_err(|e| e.to_string())?
                    .0;
                let fb = model
                    .loglik_grad(&layout, &b, None)
                    .map_err(|e| e.to_string())?
                    .0;
                worst = worst.max(rel_err(g[j], (fa - fb) / (2.0 * h)));
                checked += 1;
            }
        }
    }
    Ok(check(
        worst < 1e-4,
        format!("max rel error {worst:.2e} over {checked} gradient components"),
    ))
}

fn c10() -> Result<Check, String> {
    let vcov = |c: f64| DMatrix::from_row_slice(2, 2, &[0.04, c, c, 0.04]);
    let a = delta_var_alpha(&vcov(0.0), 0, 1, Design::Crossed).map_err(|e| e.to_string())?;
    let b = delta_var_alpha(&vcov(0.02), 0, 1, Design::Crossed).map_err(|e| e.to_string())?;
    let n = delta_var_alpha(&vcov(0.02), 0, 1, Design::Nested).map_err(|e| e.to_string())?;
    let ok = (a - 0.02).abs() < 1e-15 && (b - 0.01).abs() < 1e-15 && (n - 0.02).abs() < 1e-15;
    Ok(check(
        ok,
        format!("cov 0: {a}, cov 0.02: {b}, nested with cov 0.02: {n}"),
    ))
}

fn c11() -> Result<Check, String> {
    let v = icc(0.143).map_err(|e| e.to_string())?;
    Ok(check(
        (v - 0.125).abs() <= 0.001,
        format!("icc(0.143) = {v:.4}"),
    ))
}

fn c12() -> Result<Check, String> {
    let expected = [
        ("abs-2", 0.18),
        ("abs-3", 0.27),
        ("abs-4", 0.64),
        ("hrs-2", 0.26),
        ("hrs-3", 0.35),
        ("hrs-4", 0.55),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, want) in expected {
        let a = scenario_by_name(name).unwrap().truth.alpha();
        worst = worst.max((a - want).abs());
        parts.push(format!("{name} {a:.4}"));
    }
    for (name, want) in [("abs-1", -0.98), ("hrs-1", -1.75)] {
        let a0 = scenario_by_name(name).unwrap().truth.alpha0();
        worst = worst.max((a0 - want).abs());
        parts.push(format!("{name} alpha0 {a0:.4}"));
    }
    let all_builtin = builtin_scenarios().len() == 8;
    Ok(check(
        worst <= 0.005 && all_builtin,
        format!("{} (max deviation {worst:.4})", parts.join(", ")),
    ))
}

fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

fn c13() -> Result<Check, String> {
    let err = |e: modevar::mcmc::McmcError| e.to_string();
    // prior reproduction with no data
    let budget = McmcBudget {
        iterations: 1000 + 10_000 * 50,
        burn_in: 1000,
        thin: 50,
    };
    let problem = LatentProblem::prior_only(Design::Crossed, 0);
    let draws = run_chain(&problem, &SamplerSettings::default(), None, budget, 131).map_err(err)?;
    let t3 = StudentsT::new(0.0, 1.0, 3.0).unwrap();
    let half_t = |x: f64| if x <= 0.0 { 0.0 } else { 2.0 * t3.cdf(x) - 1.0 };
    let mut ks: f64 = 0.0;
    for q in [Quantity::VarF, Quantity::VarT] {
        let sigma: Vec<f64> = draws.column(&q).unwrap().iter().map(|v| v.sqrt()).collect();
        ks = ks.max(ks_distance(&sigma, half_t));
    }
    let ks_rho = ks_distance(draws.column(&Quantity::Rho).unwrap(), |r| {
        ((r + 1.0) / 2.0).clamp(0.0, 1.0)
    });
    let prior_ok = ks < 0.02 && ks_rho < 0.02;

    // α identity, σ² > 0 and |ρ| < 1 on every prior draw
    let vf = draws.column(&Quantity::VarF).unwrap();
    let vt = draws.column(&Quantity::VarT).unwrap();
    let al = draws.column(&Quantity::Alpha).unwrap();
    let rho = draws.column(&Quantity::Rho).unwrap();
    let identity_ok = (0..draws.n_draws()).all(|i| {
        vf[i] > 0.0
            && vt[i] > 0.0
            && rho[i].abs() < 1.0
            && (al[i] - 0.5 * (vf[i] / vt[i]).ln()).abs() < 1e-12
    });

    // ML / Bayes agreement on large fixtures
    let mut agree_ok = true;
    let mut worst_z: f64 = 0.0;
    for design in [Design::Nested, Design::Crossed] {
        let truth = Truth {
            beta0: 0.0,
            beta1: 0.5,
            var_f: 0.3,
            var_t: 0.15,
            rho: (design == Design::Crossed).then_some(0.5),
        };
        let population = Population {
            n: 10_000,
            n_tel: None,
            interviewers_ftf: if design == Design::Crossed { 5 } else { 40 },
            interviewers_tel: if design == Design::Crossed { 5 } else { 40 },
            interviewers_both: if design == Design::Crossed { 30 } else { 0 },
            workload: Workload::Even,
        };
        let d = generate(design, &truth, &population, 132, 1)
            .map_err(|e| e.to_string())?
            .dataset;
        let ml =
            fit_ml(&d, &ModelSpec::new(design, Engine::Likelihood)).map_err(|e| e.to_string())?;
        let draws = fit_mcmc(
            &d,
            &ModelSpec::new(design, Engine::Mcmc),
            McmcBudget::DESK,
            133,
        )
        .map_err(err)?;
        let post = posterior_summary(&draws, 0.95).map_err(err)?;
        for q in [Quantity::Beta1, Quantity::VarF, Quantity::VarT] {
            let m = ml.natural_scale.iter().find(|r| r.quantity == q).unwrap();
            let b = post.iter().find(|r| r.quantity == q).unwrap();
            let z =
                (m.point - b.mean).abs() / (m.se.unwrap_or(f64::NAN).powi(2) + b.sd.powi(2)).sqrt();
            worst_z = worst_z.max(z);
            agree_ok &= z < 2.0;
        }
    }

    // posterior concentration over 20 seeded runs
    let mut hits = 0;
    let runs = 20;
    for seed in 0..runs {
        let truth = Truth {
            beta0: 0.0,
            beta1: 0.5,
            var_f: 0.3,
            var_t: 0.15,
            rho: None,
        };
        let population = Population {
            n: 20_000,
            n_tel: None,
            interviewers_ftf: 50,
            interviewers_tel: 50,
            interviewers_both: 0,
            workload: Workload::Even,
        };
        let d = generate(Design::Nested, &truth, &population, 1000 + seed, 1)
            .map_err(|e| e.to_string())?
            .dataset;
        let draws = fit_mcmc(
            &d,
            &ModelSpec::new(Design::Nested, Engine::Mcmc),
            McmcBudget::DESK,
            seed,
        )
        .map_err(err)?;
        let post = posterior_summary(&draws, 0.95).map_err(err)?;
        let ok = [
            (Quantity::Beta1, 0.5),
            (Quantity::VarF, 0.3),
            (Quantity::VarT, 0.15),
        ]
        .iter()
        .all(|(q, t)| {
            let r = post.iter().find(|r| &r.quantity == q).unwrap();
            (r.mean - t).abs() <= 3.0 * r.sd
        });
        hits += usize::from(ok);
    }
    let conc_ok = hits as f64 >= 0.95 * runs as f64;

    Ok(check(
        prior_ok && identity_ok && agree_ok && conc_ok,
        format!(
            "prior KS sigma {ks:.4}, rho {ks_rho:.4}; draw identities {}; ML/Bayes max |diff|/combined SE {worst_z:.2}; concentration {hits}/{runs}",
            if identity_ok { "hold" } else { "violated" }
        ),
    ))
}

fn cli(args: &[&str]) -> (i32, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = main_with_args(
        std::iter::once("modevar").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (code, out)
}

fn c14() -> Result<Check, String> {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let truth = Truth {
        beta0: 0.0,
        beta1: 0.5,
        var_f: 0.2,
        var_t: 0.1,
        rho: Some(0.5),
    };
    let population = Population {
        n: 1500,
        n_tel: None,
        interviewers_ftf: 5,
        interviewers_tel: 5,
        interviewers_both: 20,
        workload: Workload::Even,
    };
    let d = generate(Design::Crossed, &truth, &population, 141, 1)
        .map_err(|e| e.to_string())?
        .dataset;
    let input = dir.path().join("crossed.csv");
    d.write_csv(std::fs::File::create(&input).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let input = input.to_str().unwrap();
    let commands: [Vec<&str>; 3] = [
        vec![
            "simulate",
            "--scenario",
            "abs-1",
            "--k",
            "10",
            "--seed",
            "7",
        ],
        vec![
            "simulate",
            "--scenario",
            "hrs-4",
            "--k",
            "4",
            "--seed",
            "7",
            "--engine",
            "mcmc",
            "--iterations",
            "1000",
            "--burn-in",
            "200",
        ],
        vec![
            "fit",
            "--input",
            input,
            "--engine",
            "mcmc",
            "--seed",
            "7",
            "--iterations",
            "2000",
            "--burn-in",
            "500",
        ],
    ];
    let mut ok = true;
    for cmd in &commands {
        let mut outputs = Vec::new();
        for jobs in ["1", "3"] {
            let args: Vec<&str> = cmd.iter().copied().chain(["--jobs", jobs]).collect();
            let (code, out) = cli(&args);
            ok &= code == 0 && !out.is_empty();
            outputs.push(out);
        }
        ok &= outputs[0] == outputs[1];
    }
    Ok(check(
        ok,
        "simulate (ml, mcmc) and fit (mcmc) byte-identical under --jobs 1 and 3",
    ))
}

fn workload_sensitivity() -> Option<String> {
    let mut parts = Vec::new();
    for w in [Workload::Even, Workload::Random] {
        let mut c = builtin("abs-4", Engine::Likelihood);
        c.population.workload = w.clone();
        let p = scenario(&c).ok()?.power_alpha();
        parts.push(format!("{w} {p:.3}"));
    }
    Some(format!(
        "abs-4 ml power(alpha) by workload: {}",
        parts.join(", ")
    ))
}

type Criterion = fn() -> Result<Check, String>;

fn main() {
    let criteria: [(usize, &str, Criterion); 14] = [
        (1, "ABS scenario 1, likelihood", c1),
        (2, "ABS scenario 4, likelihood", c2),
        (3, "ABS scenario 4, MCMC desk budget", c3),
        (4, "HRS scenario 4, likelihood at full scale", c4),
        (5, "HRS scenario 1 type-1 rate", c5),
        (6, "power(alpha) monotone across scenarios", c6),
        (7, "closed-form single-observation likelihood", c7),
        (8, "brute-force cluster likelihoods", c8),
        (9, "analytic gradient", c9),
        (10, "delta-method variance of alpha", c10),
        (11, "ICC spot check", c11),
        (12, "scenario alpha self-consistency", c12),
        (13, "MCMC prior and ML/Bayes invariants", c13),
        (14, "determinism across --jobs", c14),
    ];
    let only: Option<Vec<usize>> = std::env::var("MODEVAR_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut failed = 0;
    let mut ran = 0;
    for (n, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(c) => (c.pass, c.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {n:>2} {}: {name}: {detail} ({:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if only.is_none() {
        if let Some(s) = workload_sensitivity() {
            println!("info: {s}");
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
