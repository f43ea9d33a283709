use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum HkError {
    #[error("incompatible variables: {0}")]
    IncompatibleVariables(String),
    #[error("unbound label: {0}")]
    UnboundLabel(String),
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),
    #[error("wrong convergence branch: {0}")]
    WrongBranch(String),
    #[error("intertwiner singular at the given point: {0}")]
    SingularIntertwiner(String),
    #[error("not implemented: {0}")]
    NotImplemented(String),
    #[error("precision failure: {0}")]
    Precision(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, HkError>;
