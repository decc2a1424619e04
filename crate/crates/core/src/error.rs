use thiserror::Error;

/// Errors raised by estimation, inference and experiment routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported wavelet family: {0}")]
    UnsupportedFamily(String),

    #[error("cascade did not converge: refinement matrix has no eigenvalue-1 eigenvector (residual {residual:e})")]
    CascadeDivergence { residual: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature underflow: only {nodes} nodes inside the effective support (need at least 4)")]
    QuadratureUnderflow { nodes: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("sample value {value} at index {index} lies outside the domain [{lo}, {hi}]")]
    OutOfDomainValue {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid alpha {0}: must be positive and different from 1")]
    InvalidAlpha(f64),

    #[error("density is not positive on the domain (minimum {min} at x = {at})")]
    NonPositiveDensity { min: f64, at: f64 },

    #[error("divergence integral is not finite")]
    NonFiniteIntegral,

    #[error("estimates live on different domains")]
    DomainMismatch,

    #[error("two-sample estimation requires equal sample sizes, got {n_f} and {n_g}")]
    SampleSizeMismatch { n_f: usize, n_g: usize },

    #[error("Renyi report requires the Hellinger integral value")]
    MissingRenyiBase,

    #[error("degenerate variance: median sigma_hat {median} is below the floor {floor}")]
    DegenerateVariance { median: f64, floor: f64 },

    #[error("unknown density id `{0}`")]
    UnknownDensity(String),

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("invalid config at `{path}`: {message}")]
    ConfigSchema { path: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
