use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown point identifier `{0}`")]
    UnknownPoint(String),

    #[error("point index {0} is outside the universe")]
    PointOutOfRange(usize),

    #[error("duplicate point identifier `{0}`")]
    DuplicatePoint(String),

    #[error("empty point universe")]
    EmptyUniverse,

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("conflicting symmetric entries for key {key:?}: {first} vs {second}")]
    ConflictingEntries {
        key: Vec<String>,
        first: String,
        second: String,
    },

    #[error("negative value {value} at key {key:?}")]
    NegativeValue { key: Vec<String>, value: String },

    #[error("rational required in exact mode, got `{0}`")]
    RationalRequired(String),

    #[error("invalid numeric value `{0}`")]
    InvalidNumber(String),

    #[error("invalid numeric policy: {0}")]
    InvalidPolicy(String),

    #[error("objects live on different point universes")]
    UniverseMismatch,

    #[error("input is not a valid {kind}: {detail}")]
    InvalidInput { kind: String, detail: String },

    #[error("not symmetric: value at ({x},{y},{y}) differs from ({y},{x},{x})")]
    NotSymmetric { x: String, y: String },

    #[error("trace of length {len} is shorter than its window start {window_start}")]
    TraceTooShort { len: usize, window_start: usize },

    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(String),

    #[error("operation needs a finite table universe")]
    NonFiniteUniverse,

    #[error("premise certificate failed: {0}")]
    PremiseFailed(String),

    #[error("invalid contraction gauge: {0}")]
    InvalidGauge(String),

    #[error("self-map sends `{from}` outside the universe")]
    MapOutsideUniverse { from: String },

    #[error("potential missing for key {0:?}")]
    MissingPotential(Vec<String>),

    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
