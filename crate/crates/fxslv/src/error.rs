//! Error type shared across the crate.

use thiserror::Error;

/// Errors reported by model construction, simulation and pricing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SlvError {
    /// A parameter was NaN or infinite where a finite value is required.
    #[error("non-finite parameter: {0}")]
    NonFiniteParameter(String),

    /// A parameter failed a structural constraint (sign, ordering, shape).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The correlation matrix is not positive semi-definite.
    #[error("matrix not PSD")]
    NotPsd,

    /// A conditional-expectation bin holds fewer particles than required.
    #[error("insufficient particles in bin: {found} < {required}")]
    InsufficientParticles { found: usize, required: usize },

    /// The call-price density input to the leverage estimator must be positive.
    #[error("non-positive density input")]
    NonPositiveDensity,

    /// A fixing, monitoring or coupon date does not lie on the simulation grid.
    #[error("date not on grid: {0}")]
    DateNotOnGrid(f64),

    /// Step lists or payoff dates cannot be aligned on a common grid.
    #[error("dates not alignable: {0}")]
    DatesNotAlignable(String),

    /// The step-size bound must stay below the mean-reversion time scale.
    #[error("delta_T too large: {delta_t} >= 1/k = {limit}")]
    DeltaTooLarge { delta_t: f64, limit: f64 },

    /// The requested horizon lies beyond the critical maturity of the bound.
    #[error("beyond critical maturity")]
    BeyondCriticalMaturity,

    /// Monte Carlo estimation needs at least two paths for a standard error.
    #[error("n_paths too small: {0} < 2")]
    TooFewPaths(u64),

    /// Surface or cloud deserialization failed.
    #[error("parse error: {0}")]
    Parse(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, SlvError>;
