mod common;

use std::sync::atomic::{AtomicUsize, Ordering};

use common::phi_cdf;
use modevar::data::{Dataset, Design, Mode};
use modevar::estimates::EstimateRow;
use modevar::sim::run::summarize;
use modevar::sim::{
    builtin_scenarios, full_scale_scenarios, generate, run_scenario_with, scenario_by_name,
    Estimator, MlEstimator, Population, Replicate, ScenarioConfig, SimError, Truth, Workload,
};
use modevar::Quantity;
use proptest::prelude::*;

fn mode_means(d: &Dataset) -> (f64, f64) {
    let mut s = [0.0; 2];
    let mut n = [0.0; 2];
    for r in d.records() {
        let i = usize::from(r.mode == Mode::Ftf);
        s[i] += f64::from(r.outcome);
        n[i] += 1.0;
    }
    (s[1] / n[1], s[0] / n[0])
}

fn truth(beta1: f64, var_f: f64, var_t: f64, rho: Option<f64>) -> Truth {
    Truth {
        beta0: 0.0,
        beta1,
        var_f,
        var_t,
        rho,
    }
}

fn population(n: usize, ftf: usize, tel: usize, both: usize) -> Population {
    Population {
        n,
        n_tel: None,
        interviewers_ftf: ftf,
        interviewers_tel: tel,
        interviewers_both: both,
        workload: Workload::Even,
    }
}

#[test]
fn null_model_mean_is_one_half() {
    let g = generate(
        Design::Nested,
        &truth(0.0, 0.0, 0.0, None),
        &population(100_000, 500, 500, 0),
        1,
        1,
    )
    .unwrap();
    let mean = g
        .dataset
        .records()
        .iter()
        .map(|r| f64::from(r.outcome))
        .sum::<f64>()
        / 100_000.0;
    assert!((mean - 0.5).abs() < 0.005, "{mean}");
}

#[test]
fn ftf_marginal_matches_closed_form() {
    let g = generate(
        Design::Nested,
        &truth(0.5, 0.14, 0.14, None),
        &population(200_000, 5000, 5000, 0),
        2,
        1,
    )
    .unwrap();
    let (ftf, _) = mode_means(&g.dataset);
    assert!((ftf - 0.6804).abs() < 0.01, "{ftf}");
}

#[test]
fn abs_and_hrs_shapes() {
    let abs = scenario_by_name("abs-1").unwrap();
    let d = generate(abs.design, &abs.truth, &abs.population, 3, 1)
        .unwrap()
        .dataset;
    let r = d.report();
    assert_eq!(d.len(), 2521);
    assert_eq!((r.ftf_only, r.tel_only, r.both_modes), (31, 13, 0));
    assert_eq!(d.design(), Design::Nested);

    let hrs = full_scale_scenarios().remove(0);
    let d = generate(hrs.design, &hrs.truth, &hrs.population, 3, 1)
        .unwrap()
        .dataset;
    let r = d.report();
    assert_eq!(d.len(), 20_868);
    assert_eq!((r.ftf_only, r.tel_only, r.both_modes), (37, 82, 263));
    assert_eq!(d.design(), Design::Crossed);
}

#[test]
fn near_one_correlation_ties_the_effects() {
    let g = generate(
        Design::Crossed,
        &truth(0.5, 0.2, 0.2, Some(1.0 - 1e-10)),
        &population(2000, 0, 0, 200),
        4,
        1,
    )
    .unwrap();
    let worst = g
        .effects
        .iter()
        .map(|e| (e.ftf.unwrap() - e.tel.unwrap()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn zero_correlation_draws_are_uncorrelated() {
    let g = generate(
        Design::Crossed,
        &truth(0.5, 0.3, 0.1, Some(0.0)),
        &population(20_000, 0, 0, 10_000),
        5,
        1,
    )
    .unwrap();
    let pairs: Vec<(f64, f64)> = g
        .effects
        .iter()
        .map(|e| (e.ftf.unwrap(), e.tel.unwrap()))
        .collect();
    let n = pairs.len() as f64;
    let (mx, my) = pairs
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    let r = sxy / (sxx * syy).sqrt();
    assert!(r.abs() < 0.03, "{r}");
}

#[test]
fn negative_variance_and_bad_correlation_are_rejected() {
    let p = population(100, 5, 5, 0);
    assert!(generate(Design::Nested, &truth(0.5, -0.1, 0.1, None), &p, 1, 1).is_err());
    let p = population(100, 0, 0, 10);
    assert!(generate(Design::Crossed, &truth(0.5, 0.1, 0.1, Some(1.0)), &p, 1, 1).is_err());
}

#[test]
fn super_sample_marginals_for_every_scenario() {
    for config in builtin_scenarios() {
        let pop = &config.population;
        // about ten respondents per interviewer, same mode mix
        let scale = 100_000.0 / pop.n_interviewers() as f64;
        let n = 1_000_000;
        let big = Population {
            n,
            n_tel: Some((pop.resolved_n_tel() as f64 / pop.n as f64 * n as f64).round() as usize),
            interviewers_ftf: (pop.interviewers_ftf as f64 * scale).round() as usize,
            interviewers_tel: (pop.interviewers_tel as f64 * scale).round() as usize,
            interviewers_both: (pop.interviewers_both as f64 * scale).round() as usize,
            workload: Workload::Even,
        };
        let d = generate(config.design, &config.truth, &big, 6, 1)
            .unwrap()
            .dataset;
        let (ftf, tel) = mode_means(&d);
        let t = &config.truth;
        let ef = phi_cdf((t.beta0 + t.beta1) / (1.0 + t.var_f).sqrt());
        let et = phi_cdf(t.beta0 / (1.0 + t.var_t).sqrt());
        assert!(
            (ftf - ef).abs() < 0.005,
            "{}: FTF {ftf} vs {ef}",
            config.name
        );
        assert!(
            (tel - et).abs() < 0.005,
            "{}: TEL {tel} vs {et}",
            config.name
        );
    }
}

/// Reports the truth with a tight interval around it.
struct Oracle(Vec<(Quantity, f64)>);

impl Estimator for Oracle {
    fn estimate(&self, _: &Dataset, _: Design, _: u64) -> Result<Replicate, String> {
        Ok(Replicate {
            rows: self
                .0
                .iter()
                .map(|(q, t)| EstimateRow {
                    quantity: q.clone(),
                    point: *t,
                    se: Some(0.01),
                    interval: Some((t - 0.01, t + 0.01)),
                    fixed: false,
                })
                .collect(),
            warning: false,
        })
    }
}

fn small(name: &str, k: usize) -> ScenarioConfig {
    let mut c = scenario_by_name(name).unwrap();
    c.replications = k;
    c
}

#[test]
fn oracle_engine_scores_perfectly() {
    let c = small("hrs-4", 10);
    let targets = modevar::sim::run::targets(&c);
    let m = run_scenario_with(&c, &Oracle(targets.clone())).unwrap();
    assert_eq!(m.successes, 10);
    for row in &m.rows {
        assert!(row.bias.abs() < 1e-12);
        assert_eq!(row.coverage, 1.0);
        if let Some(p) = row.power {
            assert_eq!(p, 1.0, "{}", row.quantity);
        }
    }
    assert_eq!(m.row(&Quantity::VarF).unwrap().power, None);
    assert!(m.row(&Quantity::Rho).is_some());
}

struct Flaky {
    calls: AtomicUsize,
    every: usize,
    inner: Oracle,
}

impl Estimator for Flaky {
    fn estimate(&self, d: &Dataset, design: Design, seed: u64) -> Result<Replicate, String> {
        if self
            .calls
            .fetch_add(1, Ordering::SeqCst)
            .is_multiple_of(self.every)
        {
            return Err("did not converge".into());
        }
        self.inner.estimate(d, design, seed)
    }
}

#[test]
fn failures_are_excluded_then_abort_past_a_fifth() {
    let c = small("abs-4", 20);
    let flaky = |every| Flaky {
        calls: AtomicUsize::new(0),
        every,
        inner: Oracle(modevar::sim::run::targets(&c)),
    };
    let m = run_scenario_with(&c, &flaky(5)).unwrap();
    assert_eq!((m.failures, m.successes), (4, 16));
    assert_eq!(m.failure_examples[0].1, "did not converge");
    match run_scenario_with(&c, &flaky(4)) {
        Err(SimError::TooManyFailures { failed, total, .. }) => {
            assert_eq!((failed, total), (5, 20))
        }
        other => panic!("expected abort, got {other:?}"),
    }
}

#[test]
fn results_do_not_depend_on_the_worker_count() {
    let c = small("abs-4", 12);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_scenario_with(&c, &MlEstimator).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a, b);
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.bias.to_bits(), y.bias.to_bits());
    }
}

proptest! {
    #[test]
    fn metric_bounds(
        recs in prop::collection::vec(
            (-2.0f64..2.0, 0.001f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 2..40),
        truth in -1.0f64..1.0,
    ) {
        let records: Vec<Vec<[f64; 4]>> = recs
            .iter()
            .map(|(p, se, a, b)| vec![[*p, *se, p - a, p + b]])
            .collect();
        let rows = summarize(&[(Quantity::Alpha, truth)], &records);
        let r = &rows[0];
        prop_assert!((0.0..=1.0).contains(&r.coverage));
        let power = r.power.unwrap();
        prop_assert!((0.0..=1.0).contains(&power));
        let distinct = recs.iter().any(|x| x.0 != recs[0].0);
        if distinct {
            let s = r.se_ratio.unwrap();
            prop_assert!(s.is_finite() && s > 0.0);
        }
    }
}
