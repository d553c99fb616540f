//! Crate-wide error type with stable machine-readable codes.

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Every variant maps to a stable string code (see [`Error::code`]) and an
/// exit-code class used by the command-line binary: usage errors exit 1,
/// data errors exit 2, numeric errors exit 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time at row {row} is not strictly positive: {value}")]
    NonPositiveTime { row: usize, value: f64 },

    #[error("non-finite value at row {row} in {field}")]
    NonFiniteValue { row: usize, field: String },

    #[error("length mismatch: {what}")]
    LengthMismatch { what: String },

    #[error("dataset contains no subjects")]
    EmptyDataset,

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    ParseError {
        row: usize,
        column: String,
        message: String,
    },

    #[error("shape mismatch: {what}")]
    ShapeMismatch { what: String },

    #[error("domain error: {what}")]
    DomainError { what: String },

    #[error("backward requires a scalar (1x1) output node")]
    NonScalarOutput,

    #[error("bad architecture: {what}")]
    BadArchitecture { what: String },

    #[error("batch contains no observed events")]
    NoEvents,

    #[error("no cases at evaluation time {time}")]
    NoCases { time: f64 },

    #[error("no controls at evaluation time {time}")]
    NoControls { time: f64 },

    #[error("no comparable pairs")]
    NoComparablePairs,

    #[error("censoring survival estimate is zero for subject {subject}; IPCW weight undefined")]
    DegenerateCensoring { subject: usize },

    #[error("need at least two evaluation times, got {got}")]
    TooFewTimes { got: usize },

    #[error("no variance estimate available: {what}")]
    MissingVariance { what: String },

    #[error("zero variance: {what}")]
    ZeroVariance { what: String },

    #[error("unpaired inputs: {what}")]
    UnpairedInputs { what: String },

    #[error("bad config: {what}")]
    BadConfig { what: String },

    #[error("the Brier score needs a survival function; a Cox checkpoint does not provide one")]
    BrierWithCoxModel,

    #[error("checkpoint error: {what}")]
    Checkpoint { what: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Exit-code class for the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad flags or flag combinations (exit 1).
    Usage,
    /// Malformed or contract-violating input data (exit 2).
    Data,
    /// Numerically undefined or degenerate computation (exit 3).
    Numeric,
}

impl Error {
    /// Stable machine-readable code, used in CLI stderr reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonPositiveTime { .. } => "NonPositiveTime",
            Error::NonFiniteValue { .. } => "NonFiniteValue",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::EmptyDataset => "EmptyDataset",
            Error::MissingColumn(_) => "MissingColumn",
            Error::ParseError { .. } => "ParseError",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::DomainError { .. } => "DomainError",
            Error::NonScalarOutput => "NonScalarOutput",
            Error::BadArchitecture { .. } => "BadArchitecture",
            Error::NoEvents => "NoEvents",
            Error::NoCases { .. } => "NoCases",
            Error::NoControls { .. } => "NoControls",
            Error::NoComparablePairs => "NoComparablePairs",
            Error::DegenerateCensoring { .. } => "DegenerateCensoring",
            Error::TooFewTimes { .. } => "TooFewTimes",
            Error::MissingVariance { .. } => "MissingVariance",
            Error::ZeroVariance { .. } => "ZeroVariance",
            Error::UnpairedInputs { .. } => "UnpairedInputs",
            Error::BadConfig { .. } => "BadConfig",
            Error::BrierWithCoxModel => "BrierWithCoxModel",
            Error::Checkpoint { .. } => "Checkpoint",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
        }
    }

    /// Which exit-code class this error belongs to.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::BadConfig { .. } | Error::BadArchitecture { .. } => ErrorClass::Usage,
            Error::DomainError { .. }
            | Error::DegenerateCensoring { .. }
            | Error::ZeroVariance { .. }
            | Error::MissingVariance { .. }
            | Error::NonScalarOutput => ErrorClass::Numeric,
            _ => ErrorClass::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
