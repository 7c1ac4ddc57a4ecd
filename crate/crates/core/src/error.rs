use thiserror::Error;

/// Errors raised by the channel model and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The beam is (numerically) parallel to the detector plane, or a pose
    /// sits on a singularity of the footprint/tracking formulas.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// The statistical model cannot be built at the requested mean pose.
    #[error("degenerate tracking configuration: {0}")]
    DegenerateTracking(String),

    /// Quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge (best estimate {best:e}, last change {last_change:e})")]
    Quadrature { best: f64, last_change: f64 },

    #[error("overflow evaluating {0}")]
    Overflow(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Goodness-of-fit test has too few populated classes to be meaningful.
    #[error("inconclusive goodness-of-fit test: {0}")]
    Inconclusive(String),

    /// A Monte Carlo trial failed; `index` identifies the trial.
    #[error("trial {index} failed: {source}")]
    Trial { index: u64, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateGeometry(msg.into())
    }
}
