//! Right-censored survival data: datasets, risk scores, subject weights,
//! predicted survival probabilities, validation, and CSV ingestion.
//!
//! All types are immutable after construction and safe for concurrent reads.
//! Times must be finite and strictly positive (`log t` enters the Weibull
//! likelihood, so zero would silently inject minus infinity into training).
//! Tied times are allowed and preserved; tie handling belongs to the loss and
//! metric code. Higher risk score means higher risk throughout the crate.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// One subject per row: event indicator, observed time, covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    event: Vec<bool>,
    time: Vec<f64>,
    covariates: Array2<f64>,
    covariate_names: Vec<String>,
}

impl SurvivalDataset {
    /// Builds and validates a dataset. Covariate names default to `x1..xp`.
    pub fn new(event: Vec<bool>, time: Vec<f64>, covariates: Array2<f64>) -> Result<Self> {
        let names = (1..=covariates.ncols()).map(|i| format!("x{i}")).collect();
        Self::with_names(event, time, covariates, names)
    }

    pub fn with_names(
        event: Vec<bool>,
        time: Vec<f64>,
        covariates: Array2<f64>,
        covariate_names: Vec<String>,
    ) -> Result<Self> {
        if covariate_names.len() != covariates.ncols() {
            return Err(Error::LengthMismatch {
                what: format!(
                    "{} covariate names for {} columns",
                    covariate_names.len(),
                    covariates.ncols()
                ),
            });
        }
        let d = Self {
            event,
            time,
            covariates,
            covariate_names,
        };
        d.validate()?;
        Ok(d)
    }

    /// Checks every dataset invariant, reporting the first failing row and
    /// rule. Idempotent: validating a valid dataset changes nothing.
    pub fn validate(&self) -> Result<()> {
        let n = self.event.len();
        if self.time.len() != n {
            return Err(Error::LengthMismatch {
                what: format!("event has {n} entries, time has {}", self.time.len()),
            });
        }
        if self.covariates.nrows() != n {
            return Err(Error::LengthMismatch {
                what: format!(
                    "event has {n} entries, covariates has {} rows",
                    self.covariates.nrows()
                ),
            });
        }
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        for (row, &t) in self.time.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::NonFiniteValue {
                    row,
                    field: "time".into(),
                });
            }
            if t <= 0.0 {
                return Err(Error::NonPositiveTime { row, value: t });
            }
        }
        for (row, r) in self.covariates.outer_iter().enumerate() {
            if let Some((col, _)) = r.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(Error::NonFiniteValue {
                    row,
                    field: self.covariate_names[col].clone(),
                });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.event.len()
    }

    pub fn p(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn event(&self) -> &[bool] {
        &self.event
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn covariates(&self) -> &Array2<f64> {
        &self.covariates
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// Number of subjects with an observed event.
    pub fn event_count(&self) -> usize {
        self.event.iter().filter(|&&e| e).count()
    }

    /// Row subset in the given order (duplicates allowed, for bootstrap).
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let mut event = Vec::with_capacity(rows.len());
        let mut time = Vec::with_capacity(rows.len());
        let mut cov = Array2::zeros((rows.len(), self.p()));
        for (i, &r) in rows.iter().enumerate() {
            if r >= self.n() {
                return Err(Error::ShapeMismatch {
                    what: format!("row {r} out of bounds for {} subjects", self.n()),
                });
            }
            event.push(self.event[r]);
            time.push(self.time[r]);
            cov.row_mut(i).assign(&self.covariates.row(r));
        }
        Self::with_names(event, time, cov, self.covariate_names.clone())
    }

    /// Writes the dataset in the canonical CSV schema (`time`, `event`,
    /// then covariate columns). Reading the output back yields a bit-exact
    /// dataset, and re-writing yields identical bytes.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "time,event")?;
        for name in &self.covariate_names {
            write!(w, ",{name}")?;
        }
        writeln!(w)?;
        for i in 0..self.n() {
            write!(w, "{},{}", self.time[i], u8::from(self.event[i]))?;
            for v in self.covariates.row(i) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Fingerprint for run reports: row count, event count, and a SHA-256
    /// hash of the canonical CSV bytes.
    pub fn fingerprint(&self) -> Result<DatasetFingerprint> {
        use sha2::{Digest, Sha256};
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        let digest = Sha256::digest(&buf);
        Ok(DatasetFingerprint {
            n: self.n(),
            events: self.event_count(),
            sha256: hex_string(&digest),
        })
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DatasetFingerprint {
    pub n: usize,
    pub events: usize,
    pub sha256: String,
}

/// Column schema for CSV ingestion. `covariates = None` means every column
/// other than time and event is a covariate, in file order.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub time: String,
    pub event: String,
    pub covariates: Option<Vec<String>>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            time: "time".into(),
            event: "event".into(),
            covariates: None,
        }
    }
}

/// Reads a UTF-8, comma-separated file with a header row. The event column
/// must contain only `0` or `1`; booleans and strings are rejected so the
/// encoding cannot depend on locale. Missing covariate cells are errors,
/// not imputed. Row order becomes subject index order.
pub fn read_csv<R: std::io::Read>(reader: R, schema: &CsvSchema) -> Result<SurvivalDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let time_idx = find(&schema.time).ok_or_else(|| Error::MissingColumn(schema.time.clone()))?;
    let event_idx =
        find(&schema.event).ok_or_else(|| Error::MissingColumn(schema.event.clone()))?;

    let cov_cols: Vec<(usize, String)> = match &schema.covariates {
        Some(names) => {
            let mut cols = Vec::with_capacity(names.len());
            for name in names {
                let idx = find(name).ok_or_else(|| Error::MissingColumn(name.clone()))?;
                cols.push((idx, name.clone()));
            }
            cols
        }
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != time_idx && *i != event_idx)
            .map(|(i, h)| (i, h.to_string()))
            .collect(),
    };
    {
        let mut seen = HashSet::new();
        for (idx, name) in &cov_cols {
            if *idx == time_idx || *idx == event_idx || !seen.insert(*idx) {
                return Err(Error::BadConfig {
                    what: format!("column `{name}` used more than once in the schema"),
                });
            }
        }
    }

    let mut event = Vec::new();
    let mut time = Vec::new();
    let mut cov_flat = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let cell = |idx: usize, column: &str| -> Result<&str> {
            record.get(idx).map(str::trim).ok_or_else(|| Error::ParseError {
                row,
                column: column.to_string(),
                message: "missing cell".into(),
            })
        };

        let t_raw = cell(time_idx, &schema.time)?;
        let t: f64 = t_raw.parse().map_err(|_| Error::ParseError {
            row,
            column: schema.time.clone(),
            message: format!("`{t_raw}` is not a real number"),
        })?;
        time.push(t);

        let e_raw = cell(event_idx, &schema.event)?;
        let e = match e_raw {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::ParseError {
                    row,
                    column: schema.event.clone(),
                    message: format!("event must be 0 or 1, got `{other}`"),
                })
            }
        };
        event.push(e);

        for (idx, name) in &cov_cols {
            let raw = cell(*idx, name)?;
            if raw.is_empty() {
                return Err(Error::ParseError {
                    row,
                    column: name.clone(),
                    message: "empty covariate cell".into(),
                });
            }
            let v: f64 = raw.parse().map_err(|_| Error::ParseError {
                row,
                column: name.clone(),
                message: format!("`{raw}` is not a real number"),
            })?;
            cov_flat.push(v);
        }
    }

    if event.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = event.len();
    let p = cov_cols.len();
    let covariates = Array2::from_shape_vec((n, p), cov_flat).map_err(|_| Error::ShapeMismatch {
        what: "ragged covariate rows".into(),
    })?;
    SurvivalDataset::with_names(
        event,
        time,
        covariates,
        cov_cols.into_iter().map(|(_, name)| name).collect(),
    )
}

pub fn read_csv_path(path: &Path, schema: &CsvSchema) -> Result<SurvivalDataset> {
    let f = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(f), schema)
}

/// Model outputs used to rank subjects by risk: one value per subject, or
/// one column per evaluation time for time-dependent scores.
#[derive(Debug, Clone, PartialEq)]
pub enum RiskScores {
    TimeIndependent(Vec<f64>),
    /// n x T, column t aligned with the t-th requested evaluation time.
    TimeDependent(Array2<f64>),
}

impl RiskScores {
    pub fn n(&self) -> usize {
        match self {
            RiskScores::TimeIndependent(v) => v.len(),
            RiskScores::TimeDependent(m) => m.nrows(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.n() != n {
            return Err(Error::LengthMismatch {
                what: format!("{} risk scores for {n} subjects", self.n()),
            });
        }
        let finite = match self {
            RiskScores::TimeIndependent(v) => v.iter().all(|x| x.is_finite()),
            RiskScores::TimeDependent(m) => m.iter().all(|x| x.is_finite()),
        };
        if !finite {
            return Err(Error::NonFiniteValue {
                row: 0,
                field: "risk scores".into(),
            });
        }
        Ok(())
    }

    /// Score of subject `i` at evaluation-time column `t_col`.
    pub fn at(&self, i: usize, t_col: usize) -> f64 {
        match self {
            RiskScores::TimeIndependent(v) => v[i],
            RiskScores::TimeDependent(m) => m[(i, t_col)],
        }
    }
}

/// Where a weight vector came from; recorded in metric metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightProvenance {
    Uniform,
    Ipcw,
    Custom,
}

/// Non-negative per-subject weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectWeights {
    values: Vec<f64>,
    provenance: WeightProvenance,
}

impl SubjectWeights {
    pub fn new(values: Vec<f64>, provenance: WeightProvenance) -> Result<Self> {
        for (row, &w) in values.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFiniteValue {
                    row,
                    field: "weight".into(),
                });
            }
            if w < 0.0 {
                return Err(Error::DomainError {
                    what: format!("negative weight {w} at row {row}"),
                });
            }
        }
        Ok(Self { values, provenance })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            values: vec![1.0; n],
            provenance: WeightProvenance::Uniform,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> WeightProvenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Predicted survival probabilities, n subjects by T evaluation times.
/// Entries lie in [0, 1] and each row is non-increasing across times.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalProbabilities {
    values: Array2<f64>,
}

impl SurvivalProbabilities {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        for (row, r) in values.outer_iter().enumerate() {
            let mut prev = f64::INFINITY;
            for &v in r.iter() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::DomainError {
                        what: format!("survival probability {v} outside [0, 1] at row {row}"),
                    });
                }
                if v > prev {
                    return Err(Error::DomainError {
                        what: format!("survival probabilities increase over time at row {row}"),
                    });
                }
                prev = v;
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_times(&self) -> usize {
        self.values.ncols()
    }
}
