use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-positive energy: {field} = {value}")]
    NonPositiveEnergy { field: &'static str, value: f64 },

    #[error("non-finite value in field {field}")]
    NonFinite { field: &'static str },

    #[error("non-positive input: {field} = {value}")]
    NonPositiveInput { field: &'static str, value: f64 },

    #[error("dimension too small: {what} = {got}, need at least {min}")]
    DimensionTooSmall { what: &'static str, got: usize, min: usize },

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("observable {observable} is not supported in basis {basis}")]
    UnsupportedObservable { observable: &'static str, basis: &'static str },

    #[error("operation {op} is not supported in basis {basis}")]
    UnsupportedBasis { op: &'static str, basis: &'static str },

    #[error("operator and spectrum are expressed in different bases")]
    BasisMismatch,

    #[error("iterative eigensolver did not converge after {restarts} restarts (residual {residual:.3e})")]
    NoConvergence { restarts: usize, residual: f64 },

    #[error("requested {k} eigenpairs from an operator of dimension {dim}")]
    BadK { k: usize, dim: usize },

    #[error("invalid level pair ({i}, {j}) for a spectrum with {count} levels")]
    BadLevel { i: usize, j: usize, count: usize },

    #[error("root finding failed: {0}")]
    RootFindingFailure(String),

    #[error("fewer than two stable equilibria; the potential has a single well")]
    SingleWell,

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("schema error in field `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable code, used in the CSV `error` column.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonPositiveEnergy { .. } => "NonPositiveEnergy",
            Error::NonFinite { .. } => "NonFinite",
            Error::NonPositiveInput { .. } => "NonPositiveInput",
            Error::DimensionTooSmall { .. } => "DimensionTooSmall",
            Error::DomainTooSmall(_) => "DomainTooSmall",
            Error::UnsupportedObservable { .. } => "UnsupportedObservable",
            Error::UnsupportedBasis { .. } => "UnsupportedBasis",
            Error::BasisMismatch => "BasisMismatch",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::BadK { .. } => "BadK",
            Error::BadLevel { .. } => "BadLevel",
            Error::RootFindingFailure(_) => "RootFindingFailure",
            Error::SingleWell => "SingleWell",
            Error::Parse { .. } => "ParseError",
            Error::Schema { .. } => "SchemaError",
            Error::Numerical(_) => "Numerical",
            Error::Io(_) => "IoError",
        }
    }

    /// True for errors caused by bad user input rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::NonPositiveEnergy { .. }
                | Error::NonFinite { .. }
                | Error::NonPositiveInput { .. }
                | Error::DimensionTooSmall { .. }
                | Error::DomainTooSmall(_)
                | Error::Parse { .. }
                | Error::Schema { .. }
                | Error::BadK { .. }
                | Error::BadLevel { .. }
                | Error::UnsupportedObservable { .. }
                | Error::UnsupportedBasis { .. }
        )
    }

    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { field: field.into(), message: message.into() }
    }
}
