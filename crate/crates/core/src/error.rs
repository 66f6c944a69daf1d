use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while parsing the spectrum CSV format.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: expected header \"channel,count\"")]
    BadHeader { line: usize },
    #[error("line {line}: malformed record {text:?}: {reason}")]
    Malformed {
        line: usize,
        text: String,
        reason: &'static str,
    },
    #[error("line {line}: channel {found} breaks contiguity (expected {expected})")]
    NonContiguous {
        line: usize,
        expected: u64,
        found: u64,
    },
    #[error("line {line}: negative count {value}")]
    NegativeCount { line: usize, value: f64 },
    #[error("spectrum has {found} channels, at least 5 are required")]
    TooFewChannels { found: usize },
    #[error("input is not valid UTF-8 text near line {line}")]
    Encoding { line: usize },
}

impl ParseError {
    /// Line the error refers to (1-based), if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::BadHeader { line }
            | ParseError::Malformed { line, .. }
            | ParseError::NonContiguous { line, .. }
            | ParseError::NegativeCount { line, .. }
            | ParseError::Encoding { line } => Some(*line),
            ParseError::TooFewChannels { .. } => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid B-spline order {0}: supported orders are 1, 2 and 3")]
    InvalidOrder(u32),
    #[error("invalid shift vector: {0}")]
    InvalidShifts(String),
    #[error("degenerate shifts: the cardinality conditions are singular")]
    DegenerateShifts,
    #[error("basis is not cardinal: q({at}) = {value}")]
    NotCardinal { at: i64, value: f64 },
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("invalid region {start}:{end}: {reason}")]
    InvalidRegion {
        start: usize,
        end: usize,
        reason: String,
    },
    #[error("cannot refine grid with spacing {spacing} (already at channel resolution)")]
    CannotRefine { spacing: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("rank-deficient normal matrix ({columns} coefficients, {rows} channels): too many knots for the data")]
    RankDeficient { rows: usize, columns: usize },
    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Usage(String),
    #[error("parse error in {path}: {source}", path = .path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code for this error: 2 usage/validation, 3 IO, 4 parse, 5 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::Parse { .. } => 4,
            Error::RankDeficient { .. } | Error::DegenerateShifts | Error::NotCardinal { .. } => 5,
            Error::InvalidOrder(_)
            | Error::InvalidShifts(_)
            | Error::InvalidSpectrum(_)
            | Error::InvalidRegion { .. }
            | Error::CannotRefine { .. }
            | Error::InvalidInput(_)
            | Error::InvalidConfig(_)
            | Error::Usage(_) => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
