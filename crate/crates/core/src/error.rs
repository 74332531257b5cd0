use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Variants map one-to-one onto the failure modes of the individual
/// operations; [`Error::exit_code`] folds them into the CLI exit contract.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate quarter {0} in index")]
    DuplicateIndex(String),
    #[error("index is not strictly increasing at {0}")]
    UnsortedIndex(String),
    #[error("cannot parse row {row}, column `{column}`: {message}")]
    ParseError {
        row: usize,
        column: String,
        message: String,
    },
    #[error("non-positive value {value} at {at} where a strictly positive value is required")]
    DivisionDomain { at: String, value: f64 },
    #[error("insufficient history: {0}")]
    InsufficientHistory(String),
    #[error("column `{0}` has zero variance")]
    DegenerateColumn(String),
    #[error("estimation failed: {0}")]
    EstimationFailure(String),
    #[error("singular design; near-collinear columns: {}", columns.join(", "))]
    SingularDesign { columns: Vec<String> },
    #[error("coordinate descent did not converge (final max delta {delta:e})")]
    ConvergenceFailure { delta: f64 },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("split leaves the {0} side empty")]
    EmptySplit(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("all naive-forecast denominators are zero")]
    DegenerateBaseline,
    #[error("at least two models are required, got {0}")]
    NotEnoughModels(usize),
    #[error("rolling window of {window} does not fit a sample of {n}")]
    WindowTooLarge { window: usize, n: usize },
    #[error("loss differential has zero variance in a window with nonzero mean")]
    DegenerateVariance,
    #[error("feature `{0}` is constant")]
    DegenerateFeature(String),
    #[error("exact Shapley enumeration supports at most {max} features, got {got}")]
    TooManyFeaturesForExact { got: usize, max: usize },
    #[error("scale must be strictly positive, got {0}")]
    ScaleDomain(f64),
    #[error("no prior conformal scores are available")]
    ColdStart,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable tag used in error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DuplicateIndex(_) => "DuplicateIndex",
            Error::UnsortedIndex(_) => "UnsortedIndex",
            Error::ParseError { .. } => "ParseError",
            Error::DivisionDomain { .. } => "DivisionDomain",
            Error::InsufficientHistory(_) => "InsufficientHistory",
            Error::DegenerateColumn(_) => "DegenerateColumn",
            Error::EstimationFailure(_) => "EstimationFailure",
            Error::SingularDesign { .. } => "SingularDesign",
            Error::ConvergenceFailure { .. } => "ConvergenceFailure",
            Error::MissingColumn(_) => "MissingColumn",
            Error::EmptySplit(_) => "EmptySplit",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::DegenerateBaseline => "DegenerateBaseline",
            Error::NotEnoughModels(_) => "NotEnoughModels",
            Error::WindowTooLarge { .. } => "WindowTooLarge",
            Error::DegenerateVariance => "DegenerateVariance",
            Error::DegenerateFeature(_) => "DegenerateFeature",
            Error::TooManyFeaturesForExact { .. } => "TooManyFeaturesForExact",
            Error::ScaleDomain(_) => "ScaleDomain",
            Error::ColdStart => "ColdStart",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Config(_) => "Config",
            Error::Io(_) => "Io",
        }
    }

    /// 2 for configuration and data problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DuplicateIndex(_)
            | Error::UnsortedIndex(_)
            | Error::ParseError { .. }
            | Error::MissingColumn(_)
            | Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::Io(_) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
