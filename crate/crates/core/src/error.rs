use std::path::PathBuf;

use thiserror::Error;

use crate::model::JointModel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch on {axis} (expected {expected}, found {found})")]
    Dimension {
        op: &'static str,
        axis: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{0}: empty sequence")]
    EmptySequence(&'static str),

    #[error("label error: {0}")]
    Label(String),

    #[error("token id {id} out of vocabulary (size {size})")]
    Vocabulary { id: usize, size: usize },

    #[error("valid length {valid_len} exceeds max sequence length {max_seq_len}")]
    Truncation { valid_len: usize, max_seq_len: usize },

    #[error("non-finite value in {pass}")]
    Numeric { pass: String },

    /// Training produced a non-finite loss. Carries the best checkpoint seen
    /// before the failure.
    #[error("training diverged at epoch {epoch}")]
    Diverged {
        epoch: usize,
        last_good: Box<JointModel>,
    },

    #[error("{}:{line}: {msg}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("dataset layout: {0}")]
    Layout(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("index {index} out of range (bound {bound})")]
    Index { index: usize, bound: usize },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("malformed IOB tag {0:?}")]
    TagFormat(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(op: &'static str, axis: &'static str, expected: usize, found: usize) -> Self {
        Error::Dimension {
            op,
            axis,
            expected,
            found,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Process exit code: 2 usage/configuration, 3 data or format, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::DegenerateModel(_) | Error::Index { .. } => 2,
            Error::Numeric { .. } | Error::Diverged { .. } => 4,
            _ => 3,
        }
    }
}
