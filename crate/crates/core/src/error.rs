use thiserror::Error;

/// Errors produced by the library.
///
/// Each variant maps to one `kind` string used in machine-readable reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Dimension(_) => "dimension",
            Error::Domain(_) => "domain",
            Error::Assumption(_) => "assumption",
            Error::Infeasible(_) => "infeasible",
            Error::ResourceCap(_) => "resource",
            Error::Numerical(_) => "numerical",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
