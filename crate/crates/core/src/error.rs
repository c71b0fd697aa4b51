use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error(
        "diffraction solve failed at coefficient {m}, Padé term {term}, layer {layer}: {source}"
    )]
    Diffraction {
        m: usize,
        term: usize,
        layer: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("truncated payload in {what}: expected {expected} bytes, found {actual}")]
    TruncatedPayload {
        what: String,
        expected: usize,
        actual: usize,
    },

    #[error("malformed header in {what}: {reason}")]
    BadHeader { what: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}
