//! Error type shared by all modules.

use alloc::string::String;

/// Errors raised by channel synthesis, beamforming, coding, and analysis.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value violates an operation precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Matrix or profile dimensions do not agree.
    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        actual: String,
    },

    /// More streams requested than the channel can carry.
    #[error("requested {requested} streams but the channel has numerical rank {rank}")]
    StreamCountExceedsRank { requested: usize, rank: usize },

    /// The interleaver design rule d_free >= N_s is violated.
    #[error(
        "interleaver constraint violated: the code free distance must satisfy \
         d_free >= N_s, but d_free = {d_free} < N_s = {n_s}"
    )]
    InterleaverConstraint { n_s: usize, d_free: usize },

    /// A multi-user scenario cannot support the requested streams.
    #[error("infeasible configuration for user {user}: {reason}")]
    InfeasibleConfiguration { user: usize, reason: String },

    /// Distance-spectrum search exhausted without finding any error event.
    #[error("no error event found with Hamming weight <= {d_max}; increase d_max")]
    SpectrumNotFound { d_max: usize },

    /// Every large-scale coefficient is zero, so Gamma moments are undefined.
    #[error("all large-scale fading coefficients are zero; Gamma approximation undefined")]
    AllZeroProfile,

    /// Not enough (or unconverged) data points for a regression.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = core::result::Result<T, Error>;
