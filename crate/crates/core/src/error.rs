use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model parameter lies outside its admissible region.
    #[error("parameter domain: {0}")]
    ParameterDomain(String),
    /// An evaluation point lies outside the function's domain.
    #[error("domain: {0}")]
    Domain(String),
    #[error("data: {0}")]
    Data(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("initialization failed: {0}")]
    Initialization(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
