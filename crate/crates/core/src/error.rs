use thiserror::Error;

/// Errors reported by the analysis and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        /// Parameter name as it appears in the public API.
        name: &'static str,
        /// Human readable constraint that was violated.
        reason: &'static str,
    },
    /// The arriving load reached the link capacity, where the mean queue
    /// diverges.
    #[error("load {load} reached capacity {capacity}: mean queue diverges")]
    QueuePole {
        /// Offending load.
        load: f64,
        /// Link capacity.
        capacity: f64,
    },
    /// An iterative solver failed to converge.
    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence {
        /// The solver that gave up.
        what: &'static str,
        /// Iterations spent.
        iterations: usize,
    },
    /// The requested analysis window holds too few samples or periods.
    #[error("analysis window too short: {0}")]
    WindowTooShort(&'static str),
    /// The operation is only defined for locally stable parameters.
    #[error("system is locally unstable (effective gain {0} >= pi/2)")]
    Unstable(f64),
    /// The trajectory left the admissible region before the analysis window.
    #[error("trajectory diverged at t = {0}")]
    Diverged(f64),
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}
