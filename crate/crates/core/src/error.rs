use std::path::PathBuf;

use thiserror::Error;

/// Broad error class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: unreadable files, malformed records, violated invariants.
    Input,
    /// Valid input that leaves an estimator without a defined answer.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}{}: malformed record: {source}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Json {
        path: PathBuf,
        line: Option<usize>,
        #[source]
        source: serde_json::Error,
    },

    #[error("{}: malformed CSV: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("no utterances in {}", path.display())]
    NoUtterances { path: PathBuf },

    #[error("utterance {utterance_id}: ragged token matrix, row {row} has {found} frames, expected {expected}")]
    RaggedMatrix {
        utterance_id: String,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("utterance {utterance_id}: row {row} frame {frame}: token {token} outside codebook of size {codebook_size}")]
    TokenOutOfRange {
        utterance_id: String,
        row: usize,
        frame: usize,
        token: u32,
        codebook_size: u32,
    },

    #[error("utterance {utterance_id}: {message}")]
    InvalidUtterance {
        utterance_id: String,
        message: String,
    },

    #[error("token {token} not below alphabet bound {bound}")]
    TokenAboveBound { token: u32, bound: u32 },

    #[error("invalid codec config {config_id}: {message}")]
    InvalidConfig { config_id: String, message: String },

    #[error("duplicate config_id {0}")]
    DuplicateConfig(String),

    #[error("line {line}: unknown metric {name:?} (expected WER, CER or UTMOS)")]
    UnknownMetric { line: usize, name: String },

    #[error("{config_id}: {metric} value {value} outside allowed range")]
    MetricOutOfRange {
        config_id: String,
        metric: String,
        value: f64,
    },

    #[error("duplicate benchmark entry for ({config_id}, {metric})")]
    DuplicateBenchmark { config_id: String, metric: String },

    #[error("expected {expected} dimensions, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid flatten scheme: {0}")]
    InvalidScheme(String),

    #[error("malformed flat sequence at position {position}: {message}")]
    MalformedFlatSequence { position: usize, message: String },

    #[error("n-gram order must be at least 1")]
    InvalidOrder,

    #[error("no samples at or above x_min = {x_min}")]
    EmptyTail { x_min: f64 },

    #[error("degenerate tail: every sample equals x_min = {x_min}")]
    DegenerateTail { x_min: f64 },

    #[error("no x_min candidate leaves a tail of at least {required} samples")]
    InsufficientTail { required: usize },

    #[error("invalid sample {value}: frequencies must be positive and finite")]
    InvalidSample { value: f64 },

    #[error("empty sequence")]
    EmptySequence,

    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },

    #[error("growth point with non-positive value (m = {m}, V = {v})")]
    NonPositivePoint { m: f64, v: f64 },

    #[error("empty or all-zero frequency table")]
    EmptyDistribution,

    #[error("invalid weight {0}: weights must be finite and non-negative")]
    InvalidWeight(f64),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("{statistic} vs {metric} (n = {n}): need at least {need} joined configs, got {got}")]
    InsufficientPairs {
        statistic: String,
        metric: String,
        n: usize,
        need: usize,
        got: usize,
    },

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("{context}: {source}")]
    Stage {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::EmptyTail { .. }
            | Error::DegenerateTail { .. }
            | Error::InsufficientTail { .. }
            | Error::EmptySequence
            | Error::TooFewPoints { .. }
            | Error::NonPositivePoint { .. }
            | Error::EmptyDistribution
            | Error::ZeroVariance(_)
            | Error::InsufficientPairs { .. } => ErrorKind::Numerical,
            Error::Stage { source, .. } => source.kind(),
            _ => ErrorKind::Input,
        }
    }

    /// Wraps the error with a description of where it happened.
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Stage {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
