//! Error type shared by all toolkit modules.

use thiserror::Error;

/// Errors produced by validation, construction, and numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a precondition (dimension mismatch, bad parameter,
    /// malformed structure).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A map claimed to be a channel has a Choi matrix with an eigenvalue
    /// below the negativity tolerance.
    #[error("not completely positive: Choi minimum eigenvalue {min_eig:.3e} (tolerance -{tol:.3e})")]
    NotCompletelyPositive { min_eig: f64, tol: f64 },

    /// An iterative scheme exhausted its step budget without meeting the
    /// requested tolerance.
    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),

    /// A propagator came out of evolution with trace or positivity defects
    /// beyond the certified tolerance; this signals a generator bug rather
    /// than discretization noise.
    #[error("propagator defect: trace defect {trace_defect:.3e}, Choi min eigenvalue {choi_min_eig:.3e} (tolerance {tol:.3e})")]
    PropagatorDefect {
        trace_defect: f64,
        choi_min_eig: f64,
        tol: f64,
    },

    /// A requested dimension exceeds the dense-arithmetic ceiling.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Fixed-point verification found a state in the claimed solution
    /// algebra that the channel does not fix.
    #[error("fixed-point verification failed: max defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    FixedPointVerification { defect: f64, tol: f64 },

    /// A ratio objective has an identically vanishing denominator.
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
