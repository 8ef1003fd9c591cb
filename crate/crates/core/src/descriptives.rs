//! Interviewer-level descriptive statistics for binary variables: mode means,
//! between-interviewer SD, within-interviewer SD and its average per mode.
//!
//! All SDs use the population form (divisor n). The between-interviewer SD
//! centres interviewer proportions on the respondent-level mode mean.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::data::{Dataset, Mode};

#[derive(Debug, Error, PartialEq)]
pub enum DescribeError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{name}` is not binary (record {record} has value {value})")]
    NotBinary {
        name: String,
        record: usize,
        value: f64,
    },
}

/// Which column of a dataset to summarize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable<'a> {
    Outcome,
    Covariate(&'a str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterviewerSummary {
    pub interviewer: String,
    pub mode: Mode,
    pub n: usize,
    pub mean: f64,
    pub within_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSummary {
    pub mode: Mode,
    pub mean: f64,
    pub between_sd: f64,
    pub avg_within_sd: f64,
    pub n_interviewers: usize,
    pub n_respondents: usize,
}

fn values(dataset: &Dataset, variable: Variable<'_>) -> Result<Vec<f64>, DescribeError> {
    let column = match variable {
        Variable::Outcome => None,
        Variable::Covariate(name) => Some(
            dataset
                .covariate_names()
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| DescribeError::UnknownVariable(name.to_string()))?,
        ),
    };
    let name = match variable {
        Variable::Outcome => dataset.columns().outcome.as_str(),
        Variable::Covariate(n) => n,
    };
    dataset
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let v = column.map_or(f64::from(r.outcome), |c| r.covariates[c]);
            if v == 0.0 || v == 1.0 {
                Ok(v)
            } else {
                Err(DescribeError::NotBinary {
                    name: name.to_string(),
                    record: i,
                    value: v,
                })
            }
        })
        .collect()
}

/// One summary per (interviewer, mode) cell, ordered by interviewer index then mode.
pub fn interviewer_means(
    dataset: &Dataset,
    variable: Variable<'_>,
) -> Result<Vec<InterviewerSummary>, DescribeError> {
    let ys = values(dataset, variable)?;
    // (interviewer, mode) -> (n, ones); counts make the result order-free
    let mut cells: BTreeMap<(usize, Mode), (usize, usize)> = BTreeMap::new();
    for (r, y) in dataset.records().iter().zip(&ys) {
        let cell = cells.entry((r.interviewer, r.mode)).or_default();
        cell.0 += 1;
        cell.1 += *y as usize;
    }
    Ok(cells
        .into_iter()
        .map(|((j, mode), (n, ones))| {
            let mean = ones as f64 / n as f64;
            // Σ(y - ȳ)²/n for 0/1 data is ȳ(1 - ȳ)
            let within_sd = (mean * (1.0 - mean)).max(0.0).sqrt();
            InterviewerSummary {
                interviewer: dataset.interviewer_label(j).to_string(),
                mode,
                n,
                mean,
                within_sd,
            }
        })
        .collect())
}

/// Mode-level summaries, FTF first.
pub fn mode_summary(
    dataset: &Dataset,
    variable: Variable<'_>,
) -> Result<Vec<ModeSummary>, DescribeError> {
    let cells = interviewer_means(dataset, variable)?;
    Ok(Mode::BOTH
        .into_iter()
        .filter_map(|mode| {
            let mine: Vec<&InterviewerSummary> = cells.iter().filter(|c| c.mode == mode).collect();
            if mine.is_empty() {
                return None;
            }
            let n_respondents: usize = mine.iter().map(|c| c.n).sum();
            let ones: f64 = mine.iter().map(|c| c.mean * c.n as f64).sum();
            let mean = ones / n_respondents as f64;
            let k = mine.len() as f64;
            let between_sd = (mine.iter().map(|c| (c.mean - mean).powi(2)).sum::<f64>() / k).sqrt();
            let avg_within_sd = mine.iter().map(|c| c.within_sd).sum::<f64>() / k;
            Some(ModeSummary {
                mode,
                mean,
                between_sd,
                avg_within_sd,
                n_interviewers: mine.len(),
                n_respondents,
            })
        })
        .collect())
}

/// Row of the descriptive table: mean, between SD and average within SD per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptiveRow {
    pub variable: String,
    pub ftf: Option<ModeSummary>,
    pub tel: Option<ModeSummary>,
}

pub fn describe_variable(
    dataset: &Dataset,
    label: &str,
    variable: Variable<'_>,
) -> Result<DescriptiveRow, DescribeError> {
    let modes = mode_summary(dataset, variable)?;
    let pick = |m: Mode| modes.iter().find(|s| s.mode == m).cloned();
    Ok(DescriptiveRow {
        variable: label.to_string(),
        ftf: pick(Mode::Ftf),
        tel: pick(Mode::Tel),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{RespondentRecord, SourceColumns};

    fn dataset(cells: &[(&str, Mode, &[u8])]) -> Dataset {
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

    #[test]
    fn within_sd_examples() {
        let d = dataset(&[
            ("a", Mode::Ftf, &[1, 1, 0, 0]),
            ("b", Mode::Ftf, &[1, 1, 1]),
            ("c", Mode::Tel, &[1, 0, 0, 0]),
        ]);
        let s = interviewer_means(&d, Variable::Outcome).unwrap();
        assert_eq!(s[0].mean, 0.5);
        assert!((s[0].within_sd - 0.5).abs() < 1e-15);
        assert_eq!(s[1].mean, 1.0);
        assert_eq!(s[1].within_sd, 0.0);
        assert_eq!(s[2].mean, 0.25);
        assert!((s[2].within_sd - 3f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn between_sd_examples() {
        // proportions 0.4 and 0.6 with equal workloads
        let d = dataset(&[
            ("a", Mode::Ftf, &[1, 1, 0, 0, 0]),
            ("b", Mode::Ftf, &[1, 1, 1, 0, 0]),
            ("c", Mode::Tel, &[1, 0]),
        ]);
        let m = mode_summary(&d, Variable::Outcome).unwrap();
        assert_eq!(m[0].mode, Mode::Ftf);
        assert!((m[0].mean - 0.5).abs() < 1e-15);
        assert!((m[0].between_sd - 0.1).abs() < 1e-12);
        // single TEL interviewer
        assert_eq!(m[1].between_sd, 0.0);
        assert_eq!(m[1].n_interviewers, 1);

        let d = dataset(&[
            ("a", Mode::Ftf, &[1, 0]),
            ("b", Mode::Ftf, &[0, 1]),
            ("c", Mode::Tel, &[1, 1]),
        ]);
        let m = mode_summary(&d, Variable::Outcome).unwrap();
        assert_eq!(m[0].between_sd, 0.0);
    }

    #[test]
    fn unknown_and_non_binary_variables() {
        let records = vec![
            RespondentRecord {
                outcome: 1,
                mode: Mode::Ftf,
                interviewer: 0,
                covariates: vec![42.0],
            },
            RespondentRecord {
                outcome: 0,
                mode: Mode::Tel,
                interviewer: 1,
                covariates: vec![1.0],
            },
        ];
        let d = Dataset::new(
            records,
            vec!["age".into()],
            vec!["a".into(), "b".into()],
            None,
            SourceColumns::default(),
        )
        .unwrap();
        assert!(matches!(
            interviewer_means(&d, Variable::Covariate("sex")),
            Err(DescribeError::UnknownVariable(_))
        ));
        assert!(matches!(
            interviewer_means(&d, Variable::Covariate("age")),
            Err(DescribeError::NotBinary { record: 0, .. })
        ));
    }
}
