#![allow(dead_code)]

use modevar::data::{Dataset, Mode, RespondentRecord, SourceColumns};
use modevar::params::ParameterVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

pub fn phi_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

pub fn phi_inv(p: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

/// (interviewer label, mode, outcomes) cells to a dataset.
pub fn dataset(cells: &[(&str, Mode, &[u8])]) -> Dataset {
    let mut labels: Vec<String> = Vec::new();
    let mut records = Vec::new();
    for (label, mode, ys) in cells {
        let j = labels.iter().position(|l| l == label).unwrap_or_else(|| {
            labels.push(label.to_string());
            labels.len() - 1
        });
        for &y in *ys {
            records.push(RespondentRecord {
                outcome: y,
                mode: *mode,
                interviewer: j,
                covariates: vec![],
            });
        }
    }
    Dataset::new(records, vec![], labels, None, SourceColumns::default()).unwrap()
}

/// Composite Simpson rule on [a, b] with an even number of panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn record(y: u8, mode: Mode, x: Vec<f64>) -> RespondentRecord {
    RespondentRecord {
        outcome: y,
        mode,
        interviewer: 0,
        covariates: x,
    }
}

pub fn eta(p: &ParameterVector, r: &RespondentRecord) -> f64 {
    p.linear_predictor(r.mode.as_f64(), &r.covariates)
}

pub fn lik(y: u8, v: f64) -> f64 {
    if y == 1 {
        phi_cdf(v)
    } else {
        phi_cdf(-v)
    }
}

/// log ∫ Π lik N(b; 0, σ²) db by Simpson on ±10σ.
pub fn brute_1d(p: &ParameterVector, recs: &[RespondentRecord], var: f64) -> f64 {
    let sd = var.sqrt();
    let f = |z: f64| {
        let dens = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        recs.iter()
            .map(|r| lik(r.outcome, eta(p, r) + sd * z))
            .product::<f64>()
            * dens
    };
    simpson(f, -10.0, 10.0, 4000).ln()
}

/// Two-dimensional version on the standard-normal (z₁, z₂) scale.
pub fn brute_2d(p: &ParameterVector, recs: &[RespondentRecord]) -> f64 {
    let (sf, st, rho) = (p.var_f().sqrt(), p.var_t().sqrt(), p.rho());
    let c = (1.0 - rho * rho).sqrt();
    let inner = |z1: f64| {
        simpson(
            |z2: f64| {
                let dens = (-0.5 * z2 * z2).exp() / (2.0 * std::f64::consts::PI).sqrt();
                let bf = sf * z1;
                let bt = st * (rho * z1 + c * z2);
                recs.iter()
                    .map(|r| {
                        let b = if r.mode == Mode::Ftf { bf } else { bt };
                        lik(r.outcome, eta(p, r) + b)
                    })
                    .product::<f64>()
                    * dens
            },
            -9.0,
            9.0,
            600,
        ) * (-0.5 * z1 * z1).exp()
            / (2.0 * std::f64::consts::PI).sqrt()
    };
    simpson(inner, -9.0, 9.0, 600).ln()
}

pub fn random_params(rng: &mut ChaCha8Rng, n_cov: usize) -> ParameterVector {
    ParameterVector::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(0.01..1.5),
        rng.random_range(0.01..1.5),
    )
    .with_rho(rng.random_range(-0.9..0.9))
    .with_gamma((0..n_cov).map(|_| rng.random_range(-0.5..0.5)).collect())
}

pub fn random_records(
    rng: &mut ChaCha8Rng,
    n: usize,
    n_cov: usize,
    modes: &[Mode],
) -> Vec<RespondentRecord> {
    (0..n)
        .map(|i| {
            record(
                rng.random_range(0..2),
                modes[i % modes.len()],
                (0..n_cov).map(|_| rng.random_range(-1.0..1.0)).collect(),
            )
        })
        .collect()
}
