use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("vertex enumeration needs n*N = {required} slots but the budget is {budget}; use the ascent path")]
    EnumerationBudget { required: usize, budget: usize },

    #[error(
        "phase grid needs {required_points:.3e} points but the budget is {budget}; a mesh of at least {required_mesh:.4} fits"
    )]
    GridBudget {
        required_points: f64,
        budget: u64,
        required_mesh: f64,
    },

    #[error("scalar field mismatch: {0}")]
    FieldMismatch(String),

    #[error("the zero form has no Bohnenblust-Hille ratio")]
    ZeroForm,

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("horizon {got} too small, need at least {needed}")]
    HorizonTooSmall { needed: u64, got: u64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("corrupt store {path}: record {record}: {reason}")]
    CorruptStore {
        path: PathBuf,
        record: usize,
        reason: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Refusals are requests that violate a documented budget or precondition.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::Shape(_)
                | Error::EnumerationBudget { .. }
                | Error::GridBudget { .. }
                | Error::FieldMismatch(_)
                | Error::ZeroForm
                | Error::UnknownName(_)
                | Error::InvalidParams(_)
                | Error::HorizonTooSmall { .. }
                | Error::Precondition(_)
        )
    }
}
