use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("shape mismatch in {op}: expected {expected}, got {actual:?}")]
    Shape {
        op: &'static str,
        expected: String,
        actual: Vec<usize>,
    },

    /// Stateful misuse, e.g. `backward` without a preceding `forward`.
    #[error("invalid state: {0}")]
    State(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    /// Bad input data (labels, scores, empty restrictions).
    #[error("data error: {0}")]
    Data(String),

    #[error("no decision: every modality is absent")]
    NoDecision,

    #[error("manifest {path} line {line}: {message}")]
    Manifest { path: String, line: usize, message: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("image: {0}")]
    Image(#[from] image::ImageError),

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    /// Wraps an error with the name of the pipeline stage that raised it.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}
