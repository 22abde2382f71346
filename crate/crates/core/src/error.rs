use thiserror::Error;

/// Errors raised by the egse library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EgseError {
    /// A value fell outside (or on the boundary of) a link's open domain.
    #[error("domain error: {link} is undefined at {value}")]
    Domain { link: String, value: f64 },

    /// A datum in a dataset violated its column's domain.
    #[error("domain error at row {row}, column {column} ({name}): {value} is outside {domain}")]
    DataDomain {
        row: usize,
        column: usize,
        name: String,
        value: f64,
        domain: String,
    },

    /// An invalid argument (negative u, bad index, non-positive ν, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A dispersion matrix was not symmetric positive definite, or shapes disagree.
    #[error("matrix error: {0}")]
    Matrix(String),

    /// The rejection sampler cannot make progress at a usable rate.
    #[error("sampler progress error: {0}")]
    Progress(String),

    /// A quadrature, root-finder or other numerical routine failed.
    #[error("numerical error: {0}")]
    Numeric(String),

    /// The request is outside what the chosen method supports.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Parse/IO failures in dataset handling.
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, EgseError>;

impl From<std::io::Error> for EgseError {
    fn from(e: std::io::Error) -> Self {
        EgseError::Io(e.to_string())
    }
}

impl From<csv::Error> for EgseError {
    fn from(e: csv::Error) -> Self {
        EgseError::Io(e.to_string())
    }
}
