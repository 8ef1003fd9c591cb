//! Plain-text and TSV tables.

use std::fmt::Write as _;

use crate::descriptives::DescriptiveRow;
use crate::estimates::{EstimateRow, Quantity};
use crate::mcmc::ParameterDiagnostics;
use crate::sim::{ScenarioConfig, SimulationMetrics};

pub const NA: &str = "N/A";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Format {
    pub tsv: bool,
    /// Full precision instead of 3 decimals.
    pub precise: bool,
}

impl Format {
    pub fn num(&self, v: f64) -> String {
        if !v.is_finite() {
            NA.to_string()
        } else if self.precise {
            format!("{v}")
        } else {
            let s = format!("{v:.3}");
            if s == "-0.000" {
                "0.000".into()
            } else {
                s
            }
        }
    }

    pub fn opt(&self, v: Option<f64>) -> String {
        v.map_or_else(|| NA.to_string(), |x| self.num(x))
    }
}

/// Header plus rows; first column left-aligned, the rest right-aligned.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self, tsv: bool) -> String {
        let mut out = String::new();
        if tsv {
            for row in std::iter::once(&self.header).chain(&self.rows) {
                let _ = writeln!(out, "{}", row.join("\t"));
            }
            return out;
        }
        let mut width = vec![0; self.header.len()];
        for row in std::iter::once(&self.header).chain(&self.rows) {
            for (w, cell) in width.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        for row in std::iter::once(&self.header).chain(&self.rows) {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if i == 0 {
                        format!("{c:<w$}", w = width[i])
                    } else {
                        format!("{c:>w$}", w = width[i])
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    }
}

fn testable(q: &Quantity) -> bool {
    matches!(
        q,
        Quantity::Beta0 | Quantity::Beta1 | Quantity::Gamma(_) | Quantity::Alpha | Quantity::Rho
    )
}

/// Estimate table. `*` marks coefficients, α and ρ whose interval excludes 0;
/// `fixed` marks a parameter held constant.
pub fn estimate_table(rows: &[EstimateRow], fmt: Format, bayes: bool) -> Table {
    let mut t = if bayes {
        Table::new(["parameter", "mean", "sd", "hpd_low", "hpd_high", "sig"])
    } else {
        Table::new(["parameter", "estimate", "se", "ci_low", "ci_high", "sig"])
    };
    for r in rows {
        let (lo, hi) = match r.interval {
            Some((a, b)) => (fmt.num(a), fmt.num(b)),
            None => (NA.to_string(), NA.to_string()),
        };
        let mark = if r.fixed {
            "fixed"
        } else if testable(&r.quantity) && r.excludes_zero() {
            "*"
        } else {
            ""
        };
        t.push(vec![
            r.quantity.to_string(),
            fmt.num(r.point),
            fmt.opt(r.se),
            lo,
            hi,
            mark.to_string(),
        ]);
    }
    t
}

pub fn diagnostics_table(
    columns: &[Quantity],
    diags: &[ParameterDiagnostics],
    fmt: Format,
) -> Table {
    let lags = crate::mcmc::diagnostics::REPORTED_LAGS;
    let mut t = Table::new(
        ["parameter".to_string(), "ess".to_string()]
            .into_iter()
            .chain(lags.iter().map(|k| format!("acf{k}"))),
    );
    for (q, d) in columns.iter().zip(diags) {
        let mut row = vec![q.to_string(), fmt.num(d.ess)];
        for k in lags {
            row.push(fmt.opt(d.autocorrelation.iter().find(|(l, _)| *l == k).map(|x| x.1)));
        }
        t.push(row);
    }
    t
}

pub fn describe_table(rows: &[DescriptiveRow], fmt: Format) -> Table {
    let mut t = Table::new([
        "variable",
        "mean_ftf",
        "mean_tel",
        "between_sd_ftf",
        "between_sd_tel",
        "within_sd_ftf",
        "within_sd_tel",
    ]);
    for r in rows {
        let f = r.ftf.as_ref();
        let te = r.tel.as_ref();
        t.push(vec![
            r.variable.clone(),
            fmt.opt(f.map(|s| s.mean)),
            fmt.opt(te.map(|s| s.mean)),
            fmt.opt(f.map(|s| s.between_sd)),
            fmt.opt(te.map(|s| s.between_sd)),
            fmt.opt(f.map(|s| s.avg_within_sd)),
            fmt.opt(te.map(|s| s.avg_within_sd)),
        ]);
    }
    t
}

pub fn metrics_table(m: &SimulationMetrics, fmt: Format) -> Table {
    let mut t = Table::new([
        "parameter",
        "truth",
        "bias",
        "coverage",
        "se_ratio",
        "power",
    ]);
    for r in &m.rows {
        t.push(vec![
            r.quantity.to_string(),
            fmt.num(r.truth),
            fmt.num(r.bias),
            fmt.num(r.coverage),
            fmt.opt(r.se_ratio),
            fmt.opt(r.power),
        ]);
    }
    t
}

pub fn scenario_table(configs: &[ScenarioConfig], fmt: Format) -> Table {
    let mut t = Table::new([
        "scenario",
        "design",
        "beta0",
        "beta1",
        "var_f",
        "var_t",
        "rho",
        "alpha",
        "n",
        "interviewers",
        "K",
    ]);
    for c in configs {
        let p = &c.population;
        t.push(vec![
            c.name.clone(),
            c.design.to_string(),
            fmt.num(c.truth.beta0),
            fmt.num(c.truth.beta1),
            fmt.num(c.truth.var_f),
            fmt.num(c.truth.var_t),
            fmt.opt(c.truth.rho),
            fmt.num(c.truth.alpha()),
            p.n.to_string(),
            format!(
                "{}/{}/{}",
                p.interviewers_ftf, p.interviewers_tel, p.interviewers_both
            ),
            c.replications.to_string(),
        ]);
    }
    t
}
