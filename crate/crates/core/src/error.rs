use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("backward requires a scalar output, got shape {0:?}")]
    NotScalar(Vec<usize>),

    #[error("operation `{0}` has no registered derivative")]
    NoDerivative(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("training diverged at update {update}: |loss| = {loss:e} exceeds {limit:e}")]
    Diverged {
        update: usize,
        loss: f64,
        limit: f64,
    },

    #[error("non-finite loss at update {update}")]
    NonFiniteLoss { update: usize },

    #[error("frozen parameters were modified (checksum {before:08x} -> {after:08x})")]
    FrozenModified { before: u32, after: u32 },

    #[error("checksum mismatch in {path}: stored {stored:08x}, computed {computed:08x}")]
    Checksum {
        path: PathBuf,
        stored: u32,
        computed: u32,
    },

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("missing data file {0}")]
    MissingData(PathBuf),

    #[error("config error: {0}")]
    Config(String),

    #[error("evaluation needs both classes present: {0}")]
    SingleClass(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(detail: impl Into<String>) -> Self {
        Error::InvalidArgument(detail.into())
    }
}
