use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed capture line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("unknown record kind `{kind}` at line {line}")]
    UnknownKind { line: usize, kind: String },

    #[error("clock map for venue `{venue}` needs at least two knots, found {found}")]
    FewerThanTwoKnots { venue: String, found: usize },

    #[error("crossed ticker: bid {bid} >= ask {ask}")]
    CrossedTicker { bid: f64, ask: f64 },

    #[error("records not sorted by local_ts at position {position} ({prev} > {next})")]
    UnsortedInput { position: usize, prev: i64, next: i64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("fewer than {needed} paired points for regression (have {have})")]
    TooFewPoints { needed: usize, have: usize },

    #[error("regressor has zero variance")]
    DegenerateX,

    #[error("capture too short: {have} grid points, episode needs {needed}")]
    CaptureTooShort { have: usize, needed: usize },

    #[error("cannot sell {requested} units with {remaining} remaining")]
    Oversell { requested: u32, remaining: u32 },

    #[error("episode already finished")]
    EpisodeDone,

    #[error("action mask admits no action")]
    AllMasked,

    #[error("non-finite loss in minibatch {batch}")]
    NonFiniteLoss { batch: usize },

    #[error("invalid problem spec: {0}")]
    InvalidSpec(String),

    #[error("unknown venue `{0}`")]
    UnknownVenue(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config {file}: {message}")]
    ConfigParse {
        file: String,
        field: Option<String>,
        message: String,
    },

    #[error("missing input {path} (from {field})")]
    MissingInput { path: String, field: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedLine { .. } => "MalformedLine",
            Error::UnknownKind { .. } => "UnknownKind",
            Error::FewerThanTwoKnots { .. } => "FewerThanTwoKnots",
            Error::CrossedTicker { .. } => "CrossedTicker",
            Error::UnsortedInput { .. } => "UnsortedInput",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::TooFewPoints { .. } => "TooFewPoints",
            Error::DegenerateX => "DegenerateX",
            Error::CaptureTooShort { .. } => "CaptureTooShort",
            Error::Oversell { .. } => "Oversell",
            Error::EpisodeDone => "EpisodeDone",
            Error::AllMasked => "AllMasked",
            Error::NonFiniteLoss { .. } => "NonFiniteLoss",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::UnknownVenue(_) => "UnknownVenue",
            Error::Checkpoint(_) => "Checkpoint",
            Error::ConfigParse { .. } => "ConfigParse",
            Error::MissingInput { .. } => "MissingInput",
            Error::Io { .. } => "Io",
        }
    }
}
