use thiserror::Error;

/// Errors produced by matrix ingestion, bound computation, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed CSV at line {line}: {reason}")]
    MalformedCsv { line: usize, reason: String },
    #[error("entry {value} at class {class}, attribute {attribute} is outside [0, 1]")]
    OutOfRange {
        class: usize,
        attribute: usize,
        value: f64,
    },
    #[error("duplicate {kind} name: {name}")]
    DuplicateName { kind: &'static str, name: String },
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("the two class indices must differ (both are {0})")]
    SameClass(usize),
    #[error("operation requires a fully known entry at class {class}, attribute {attribute}")]
    UnknownEntry { class: usize, attribute: usize },
    #[error("attribute count {n} exceeds the cap {cap}; raise the cap to accept 2^{n}-outcome problems")]
    AttributeCapExceeded { n: usize, cap: usize },
    #[error("LP solver failed to certify a result: {0}")]
    NumericalFailure(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operation is defined for binary (k = 2) tasks only, got k = {0}")]
    NotBinary(usize),
    #[error("no usable attribute (every column is unknown or n = 0)")]
    NoUsableAttribute,
    #[error("operation requires uniform class priors")]
    NonUniformPriors,
    #[error("class {0} has no records")]
    EmptyClass(usize),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("prediction set is empty")]
    EmptyPredictions,
    #[error("no misclassified records; skewness is undefined for an empty error set")]
    NoErrors,
    #[error("all pairwise bounds are zero; skewness denominator is undefined")]
    ZeroDenominator,
    #[error("PMF conditional for class {class} sums to {total}, expected {expected}")]
    InconsistentPmf {
        class: usize,
        total: f64,
        expected: f64,
    },
    #[error("priors are invalid: {0}")]
    InvalidPriors(String),
    #[error("unknown class name: {0}")]
    UnknownClassName(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
