use thiserror::Error;

/// Errors raised across the library.
///
/// The CLI maps [`Error::Config`], [`Error::InputShape`], [`Error::Domain`],
/// [`Error::Usage`] and [`Error::Io`]/[`Error::Parse`] to exit code 2 and the
/// numeric failures ([`Error::Divergence`], [`Error::BlowUp`]) to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input shape mismatch: expected length {expected}, got {got}")]
    InputShape { expected: usize, got: usize },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("solver blow-up: non-finite state at t = {time}")]
    BlowUp { time: f64 },

    #[error("training diverged at epoch {epoch}: {reason}")]
    Divergence { epoch: usize, reason: String },

    #[error("degenerate smoothing: second derivative of the weighted residual bound is not finite; use mu > 0")]
    DegenerateSmoothing,

    #[error("unbounded subinterval count: expected ML error is zero while K = {k}; use mu > 0 or change the eps policy")]
    UnboundedSubintervals { k: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures caused by numerics rather than by the caller's input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Divergence { .. } | Error::BlowUp { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
