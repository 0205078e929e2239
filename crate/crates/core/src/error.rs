use thiserror::Error;

/// Errors raised anywhere in the discretization pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("point {value} lies outside the parametric interval [0, 1]")]
    Domain { value: f64 },

    #[error("unsupported space: {0}")]
    UnsupportedSpace(String),

    #[error("refinement error: {0}")]
    Refinement(String),

    #[error("singular geometry map at ({u}, {v}): det = {det:e}")]
    SingularMap { u: f64, v: f64, det: f64 },

    #[error("assembly failed on element {element}: {source}")]
    Assembly {
        element: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("solver failed ({reason}); achieved relative residual {residual:e}")]
    Solver { reason: String, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("geometry file error: {0}")]
    GeometryFile(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
