use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain the routine supports.
    #[error("domain error: {0}")]
    Domain(String),

    /// The frequency-bin lattice is too small to hold the sidebands of a modulator.
    #[error(
        "truncation budget exceeded for theta = {theta}: lattice half-width {half_width} leaves \
         tail power {tail:.3e}, need half-width >= {required_half_width}"
    )]
    Truncation {
        theta: f64,
        half_width: usize,
        tail: f64,
        required_half_width: usize,
    },

    /// A normalization step was asked to divide by (numerically) zero.
    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
