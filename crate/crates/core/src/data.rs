//! Survey extracts: respondent records, datasets, and CSV ingestion.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("line {line}, column `{column}`: expected 0 or 1, found `{value}`")]
    NotBinary {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}, column `{column}`: `{value}` is not a number")]
    NotNumeric {
        line: u64,
        column: String,
        value: String,
    },
    #[error("interviewer `{0}` appears in both modes but the design is nested")]
    NestedViolation(String),
    #[error("dataset has no {0} records; both modes are required")]
    MissingMode(Mode),
    #[error("record {index} has {found} covariates, expected {expected}")]
    CovariateLength {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("record {index} has outcome {value}, expected 0 or 1")]
    BadOutcome { index: usize, value: u8 },
    #[error("record {index} references interviewer {interviewer} but only {count} are defined")]
    BadInterviewer {
        index: usize,
        interviewer: usize,
        count: usize,
    },
    #[error("dataset is empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Telephone, coded 0.
    Tel,
    /// Face-to-face, coded 1.
    Ftf,
}

impl Mode {
    pub fn flag(self) -> u8 {
        match self {
            Mode::Ftf => 1,
            Mode::Tel => 0,
        }
    }

    pub fn from_flag(flag: u8) -> Option<Mode> {
        match flag {
            1 => Some(Mode::Ftf),
            0 => Some(Mode::Tel),
            _ => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.flag())
    }

    pub const BOTH: [Mode; 2] = [Mode::Ftf, Mode::Tel];
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Ftf => "FTF",
            Mode::Tel => "TEL",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Design {
    /// Every interviewer works a single mode.
    Nested,
    /// Interviewers may work both modes.
    Crossed,
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Design::Nested => "nested",
            Design::Crossed => "crossed",
        })
    }
}

impl std::str::FromStr for Design {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nested" => Ok(Design::Nested),
            "crossed" => Ok(Design::Crossed),
            other => Err(format!(
                "unknown design `{other}` (expected nested or crossed)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RespondentRecord {
    pub outcome: u8,
    pub mode: Mode,
    /// Dense interviewer index into [`Dataset::interviewers`].
    pub interviewer: usize,
    pub covariates: Vec<f64>,
}

/// Column names a dataset was read from (and is written back to).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceColumns {
    pub outcome: String,
    pub mode: String,
    pub interviewer: String,
}

impl Default for SourceColumns {
    fn default() -> Self {
        SourceColumns {
            outcome: "y".into(),
            mode: "mode".into(),
            interviewer: "interviewer".into(),
        }
    }
}

/// Validated, immutable collection of respondent records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<RespondentRecord>,
    covariate_names: Vec<String>,
    interviewers: Vec<String>,
    design: Design,
    columns: SourceColumns,
    dropped_rows: usize,
}

impl Dataset {
    /// Validates the invariants and builds a dataset. `design = None` infers it.
    pub fn new(
        records: Vec<RespondentRecord>,
        covariate_names: Vec<String>,
        interviewers: Vec<String>,
        design: Option<Design>,
        columns: SourceColumns,
    ) -> Result<Self, DataError> {
        if records.is_empty() {
            return Err(DataError::Empty);
        }
        let s = covariate_names.len();
        let mut modes_seen = vec![[false; 2]; interviewers.len()];
        for (index, r) in records.iter().enumerate() {
            if r.outcome > 1 {
                return Err(DataError::BadOutcome {
                    index,
                    value: r.outcome,
                });
            }
            if r.covariates.len() != s {
                return Err(DataError::CovariateLength {
                    index,
                    found: r.covariates.len(),
                    expected: s,
                });
            }
            if r.interviewer >= interviewers.len() {
                return Err(DataError::BadInterviewer {
                    index,
                    interviewer: r.interviewer,
                    count: interviewers.len(),
                });
            }
            modes_seen[r.interviewer][r.mode.flag() as usize] = true;
        }
        for mode in Mode::BOTH {
            if !records.iter().any(|r| r.mode == mode) {
                return Err(DataError::MissingMode(mode));
            }
        }
        let inferred = if modes_seen.iter().any(|m| m[0] && m[1]) {
            Design::Crossed
        } else {
            Design::Nested
        };
        let design = match design {
            Some(Design::Nested) if inferred == Design::Crossed => {
                let j = modes_seen.iter().position(|m| m[0] && m[1]).unwrap_or(0);
                return Err(DataError::NestedViolation(interviewers[j].clone()));
            }
            Some(d) => d,
            None => inferred,
        };
        Ok(Dataset {
            records,
            covariate_names,
            interviewers,
            design,
            columns,
            dropped_rows: 0,
        })
    }

    pub fn records(&self) -> &[RespondentRecord] {
        &self.records
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn interviewers(&self) -> &[String] {
        &self.interviewers
    }

    pub fn interviewer_label(&self, index: usize) -> &str {
        &self.interviewers[index]
    }

    pub fn design(&self) -> Design {
        self.design
    }

    pub fn columns(&self) -> &SourceColumns {
        &self.columns
    }

    /// Rows removed at ingestion because a used cell was missing.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Same records re-labelled under another design (validated again).
    pub fn with_design(&self, design: Design) -> Result<Dataset, DataError> {
        let mut d = Dataset::new(
            self.records.clone(),
            self.covariate_names.clone(),
            self.interviewers.clone(),
            Some(design),
            self.columns.clone(),
        )?;
        d.dropped_rows = self.dropped_rows;
        Ok(d)
    }

    pub fn report(&self) -> DatasetReport {
        let mut modes = vec![[0usize; 2]; self.interviewers.len()];
        let mut per_mode = [0usize; 2];
        for r in &self.records {
            modes[r.interviewer][r.mode.flag() as usize] += 1;
            per_mode[r.mode.flag() as usize] += 1;
        }
        let mut report = DatasetReport {
            records: self.records.len(),
            ftf_records: per_mode[1],
            tel_records: per_mode[0],
            interviewers: 0,
            ftf_only: 0,
            tel_only: 0,
            both_modes: 0,
            dropped_rows: self.dropped_rows,
            design: self.design,
        };
        for m in modes {
            match (m[1] > 0, m[0] > 0) {
                (true, true) => report.both_modes += 1,
                (true, false) => report.ftf_only += 1,
                (false, true) => report.tel_only += 1,
                (false, false) => continue,
            }
            report.interviewers += 1;
        }
        report
    }

    /// Writes the dataset as CSV with its source column names; covariates
    /// are written as numeric columns.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![
            self.columns.outcome.clone(),
            self.columns.mode.clone(),
            self.columns.interviewer.clone(),
        ];
        header.extend(self.covariate_names.iter().cloned());
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![
                r.outcome.to_string(),
                r.mode.flag().to_string(),
                self.interviewers[r.interviewer].clone(),
            ];
            row.extend(r.covariates.iter().map(|x| x.to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|source| DataError::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }

    /// Schema that reads back what [`Dataset::write_csv`] produced.
    pub fn round_trip_schema(&self) -> Schema {
        Schema {
            outcome: self.columns.outcome.clone(),
            mode: self.columns.mode.clone(),
            interviewer: self.columns.interviewer.clone(),
            covariates: self
                .covariate_names
                .iter()
                .map(|n| CovariateColumn::numeric(n))
                .collect(),
            design: Some(self.design),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetReport {
    pub records: usize,
    pub ftf_records: usize,
    pub tel_records: usize,
    pub interviewers: usize,
    pub ftf_only: usize,
    pub tel_only: usize,
    pub both_modes: usize,
    pub dropped_rows: usize,
    pub design: Design,
}

impl fmt::Display for DatasetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records: {}", self.records)?;
        writeln!(f, "records (FTF): {}", self.ftf_records)?;
        writeln!(f, "records (TEL): {}", self.tel_records)?;
        writeln!(f, "interviewers: {}", self.interviewers)?;
        writeln!(f, "interviewers (FTF only): {}", self.ftf_only)?;
        writeln!(f, "interviewers (TEL only): {}", self.tel_only)?;
        writeln!(f, "interviewers (both modes): {}", self.both_modes)?;
        writeln!(f, "design: {}", self.design)?;
        write!(f, "dropped rows (missing values): {}", self.dropped_rows)
    }
}

/// Every interviewer appearing under a single mode means nested.
pub fn infer_design(dataset: &Dataset) -> Design {
    let mut seen: HashMap<usize, u8> = HashMap::new();
    for r in dataset.records() {
        *seen.entry(r.interviewer).or_insert(0) |= 1 << r.mode.flag();
    }
    if seen.values().any(|&m| m == 0b11) {
        Design::Crossed
    } else {
        Design::Nested
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovariateKind {
    Numeric,
    /// Expanded to L-1 indicators; the reference is the first level in
    /// lexicographic order.
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CovariateColumn {
    pub name: String,
    pub kind: CovariateKind,
}

impl CovariateColumn {
    pub fn numeric(name: &str) -> Self {
        CovariateColumn {
            name: name.to_string(),
            kind: CovariateKind::Numeric,
        }
    }

    pub fn categorical(name: &str) -> Self {
        CovariateColumn {
            name: name.to_string(),
            kind: CovariateKind::Categorical,
        }
    }
}

/// Column mapping for CSV ingestion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub outcome: String,
    pub mode: String,
    pub interviewer: String,
    pub covariates: Vec<CovariateColumn>,
    /// `None` infers the design from the data.
    pub design: Option<Design>,
}

impl Schema {
    pub fn new(outcome: &str, mode: &str, interviewer: &str) -> Self {
        Schema {
            outcome: outcome.into(),
            mode: mode.into(),
            interviewer: interviewer.into(),
            covariates: Vec::new(),
            design: None,
        }
    }

    pub fn with_covariate(mut self, column: CovariateColumn) -> Self {
        self.covariates.push(column);
        self
    }

    pub fn with_design(mut self, design: Design) -> Self {
        self.design = Some(design);
        self
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "N/A" | "NaN" | "nan" | ".")
}

fn parse_binary(cell: &str, line: u64, column: &str) -> Result<u8, DataError> {
    match cell {
        "0" => Ok(0),
        "1" => Ok(1),
        _ => Err(DataError::NotBinary {
            line,
            column: column.to_string(),
            value: cell.to_string(),
        }),
    }
}

enum RawCovariate {
    Number(f64),
    Level(String),
}

pub fn load_dataset(path: &Path, schema: &Schema) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_dataset(file, schema)
}

/// Reads and validates a CSV extract. Rows with any missing used cell are
/// dropped and counted.
pub fn read_dataset<R: Read>(reader: R, schema: &Schema) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };
    let outcome_idx = find(&schema.outcome)?;
    let mode_idx = find(&schema.mode)?;
    let interviewer_idx = find(&schema.interviewer)?;
    let cov_idx = schema
        .covariates
        .iter()
        .map(|c| find(&c.name))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows: Vec<(u8, Mode, String, Vec<RawCovariate>)> = Vec::new();
    let mut dropped = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(i as u64 + 2);
        let cell = |idx: usize| rec.get(idx).unwrap_or("");
        let used = [outcome_idx, mode_idx, interviewer_idx]
            .into_iter()
            .chain(cov_idx.iter().copied());
        if used.clone().any(|idx| is_missing(cell(idx))) {
            dropped += 1;
            continue;
        }
        let outcome = parse_binary(cell(outcome_idx), line, &schema.outcome)?;
        let mode = Mode::from_flag(parse_binary(cell(mode_idx), line, &schema.mode)?)
            .expect("binary flag");
        let mut covs = Vec::with_capacity(cov_idx.len());
        for (col, &idx) in schema.covariates.iter().zip(&cov_idx) {
            let raw = cell(idx);
            covs.push(match col.kind {
                CovariateKind::Numeric => {
                    let x: f64 = raw.parse().map_err(|_| DataError::NotNumeric {
                        line,
                        column: col.name.clone(),
                        value: raw.to_string(),
                    })?;
                    if !x.is_finite() {
                        return Err(DataError::NotNumeric {
                            line,
                            column: col.name.clone(),
                            value: raw.to_string(),
                        });
                    }
                    RawCovariate::Number(x)
                }
                CovariateKind::Categorical => RawCovariate::Level(raw.to_string()),
            });
        }
        rows.push((outcome, mode, cell(interviewer_idx).to_string(), covs));
    }

    // dummy coding: levels sorted, first one is the reference
    let levels: Vec<Vec<String>> = schema
        .covariates
        .iter()
        .enumerate()
        .map(|(c, col)| match col.kind {
            CovariateKind::Numeric => Vec::new(),
            CovariateKind::Categorical => rows
                .iter()
                .filter_map(|r| match &r.3[c] {
                    RawCovariate::Level(l) => Some(l.clone()),
                    RawCovariate::Number(_) => None,
                })
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        })
        .collect();
    let mut covariate_names = Vec::new();
    for (col, lv) in schema.covariates.iter().zip(&levels) {
        match col.kind {
            CovariateKind::Numeric => covariate_names.push(col.name.clone()),
            CovariateKind::Categorical => {
                covariate_names.extend(lv.iter().skip(1).map(|l| format!("{}:{}", col.name, l)))
            }
        }
    }

    let mut index_of: HashMap<String, usize> = HashMap::new();
    let mut interviewers = Vec::new();
    let mut records = Vec::with_capacity(rows.len());
    for (outcome, mode, label, raw) in rows {
        let interviewer = *index_of.entry(label.clone()).or_insert_with(|| {
            interviewers.push(label);
            interviewers.len() - 1
        });
        let mut covariates = Vec::with_capacity(covariate_names.len());
        for (value, lv) in raw.into_iter().zip(&levels) {
            match value {
                RawCovariate::Number(x) => covariates.push(x),
                RawCovariate::Level(l) => {
                    covariates.extend(lv.iter().skip(1).map(|k| if *k == l { 1.0 } else { 0.0 }))
                }
            }
        }
        records.push(RespondentRecord {
            outcome,
            mode,
            interviewer,
            covariates,
        });
    }

    let mut dataset = Dataset::new(
        records,
        covariate_names,
        interviewers,
        schema.design,
        SourceColumns {
            outcome: schema.outcome.clone(),
            mode: schema.mode.clone(),
            interviewer: schema.interviewer.clone(),
        },
    )?;
    dataset.dropped_rows = dropped;
    Ok(dataset)
}
