//! Posterior means, SDs and highest-posterior-density intervals.

use crate::estimates::{icc, EstimateRow, Quantity};
use crate::mcmc::sampler::{McmcError, PosteriorDraws};

/// Shortest interval covering ⌈level·n⌉ consecutive order statistics.
/// Needs at least ⌈1/(1 − level)⌉ draws (20 at 95%).
pub fn hpd_interval(draws: &[f64], level: f64) -> Result<(f64, f64), McmcError> {
    if draws.is_empty() {
        return Err(McmcError::Empty);
    }
    let needed = (1.0 / (1.0 - level) - 1e-9).ceil() as usize;
    if draws.len() < needed {
        return Err(McmcError::TooFewDraws {
            needed,
            got: draws.len(),
        });
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let m = ((level * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let mut best = (sorted[0], sorted[m - 1]);
    for i in 1..=n - m {
        let (lo, hi) = (sorted[i], sorted[i + m - 1]);
        if hi - lo < best.1 - best.0 {
            best = (lo, hi);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorRow {
    pub quantity: Quantity,
    pub mean: f64,
    pub sd: f64,
    /// `None` with fewer draws than the HPD level allows.
    pub hpd: Option<(f64, f64)>,
    pub fixed: bool,
}

impl PosteriorRow {
    pub fn to_estimate(&self) -> EstimateRow {
        EstimateRow {
            quantity: self.quantity.clone(),
            point: self.mean,
            se: (!self.fixed).then_some(self.sd),
            interval: self.hpd,
            fixed: self.fixed,
        }
    }
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn row(quantity: Quantity, x: &[f64], level: f64) -> PosteriorRow {
    let (mean, sd) = mean_sd(x);
    PosteriorRow {
        quantity,
        mean,
        sd,
        hpd: hpd_interval(x, level).ok(),
        fixed: false,
    }
}

/// One row per draw column in draw order, then ρ when it was held fixed, then
/// the ICCs computed draw by draw.
pub fn posterior_summary(
    draws: &PosteriorDraws,
    level: f64,
) -> Result<Vec<PosteriorRow>, McmcError> {
    if draws.n_draws() == 0 {
        return Err(McmcError::Empty);
    }
    let mut rows: Vec<PosteriorRow> = draws
        .columns
        .iter()
        .zip(&draws.values)
        .map(|(q, x)| row(q.clone(), x, level))
        .collect();
    if let Some(r) = draws.fixed_rho {
        rows.push(PosteriorRow {
            quantity: Quantity::Rho,
            mean: r,
            sd: 0.0,
            hpd: None,
            fixed: true,
        });
    }
    for (var, name) in [
        (Quantity::VarF, Quantity::IccF),
        (Quantity::VarT, Quantity::IccT),
    ] {
        if let Some(col) = draws.column(&var) {
            let iccs: Vec<f64> = col.iter().map(|v| icc(*v).unwrap_or(f64::NAN)).collect();
            rows.push(row(name, &iccs, level));
        }
    }
    Ok(rows)
}
