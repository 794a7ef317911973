use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A tensor or layer width did not line up.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: String,
        expected: usize,
        found: usize,
    },

    /// Caller broke an operation precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("missing parameter `{0}`")]
    MissingParam(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("dataset too small: {clean} clean windows, at least 5 are required for a 60/20/20 split")]
    DatasetTooSmall { clean: usize },

    #[error("edge set is empty; message passing between edges is undefined, use the SetMP pipeline instead")]
    EmptyEdgeSet,

    #[error("model/data compatibility error: {0}")]
    Compatibility(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("training diverged at epoch {epoch} (last finite epoch: {last_finite:?})")]
    Divergence {
        epoch: usize,
        last_finite: Option<usize>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::Dimension {
            context: context.into(),
            expected,
            found,
        }
    }
}
