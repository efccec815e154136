//! Closed-form critical maturities and moment bounds.
//!
//! Every function here answers the same kind of question: up to which
//! horizon is a given exponential or polynomial moment of the model (or of
//! its full-truncation discretization) guaranteed finite. The horizons are
//! genuinely infinite in some parameter regimes, so they are represented by
//! a dedicated type rather than a sentinel float.

use crate::error::{Result, SlvError};
use crate::model::CirParams;

/// `phi = 2 + sqrt(2)`, the moment scale of the calibration bound.
pub const PHI_CALIBRATION: f64 = 2.0 + std::f64::consts::SQRT_2;

/// A time horizon in years that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Finite(f64),
    Infinite,
}

impl Horizon {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Horizon::Infinite)
    }

    /// The finite value, if any.
    pub fn finite(&self) -> Option<f64> {
        match self {
            Horizon::Finite(v) => Some(*v),
            Horizon::Infinite => None,
        }
    }

    /// The horizon as a float, mapping the infinite case to `f64::INFINITY`.
    /// Intended for comparisons, not for reports.
    pub fn as_f64(&self) -> f64 {
        match self {
            Horizon::Finite(v) => *v,
            Horizon::Infinite => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for Horizon {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Horizon::Finite(v) => std::fmt::Display::fmt(v, f),
            Horizon::Infinite => std::fmt::Display::fmt(&f64::INFINITY, f),
        }
    }
}

/// A critical maturity together with which case of its piecewise definition
/// fired and the inputs it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalMaturity {
    pub value: Horizon,
    /// 1 or 2, matching the case numbering of the defining result.
    pub branch: u8,
    /// Mean-reversion speed the bound was evaluated at.
    pub kappa: f64,
    /// Composite volatility scale the bound was evaluated at (`zeta`,
    /// `phi(alpha) * zeta` or `sqrt(2 lambda) * xi` depending on the bound).
    pub scale: f64,
}

/// `2 / sqrt(m^2 - k^2) * [pi/2 + arctan(k / sqrt(m^2 - k^2))]` for `k < m`.
fn arctan_window(k: f64, m: f64) -> f64 {
    let root = (m * m - k * k).sqrt();
    2.0 / root * (std::f64::consts::FRAC_PI_2 + (k / root).atan())
}

/// `phi(alpha) = alpha + sqrt((alpha - 1) alpha)`, the moment scale of the
/// spot-moment bounds; increasing in `alpha`, with `phi(1) = 1` and
/// `phi(2) = 2 + sqrt(2)`.
pub fn phi(alpha: f64) -> f64 {
    alpha + ((alpha - 1.0) * alpha).sqrt()
}

/// Maps a spot-moment problem at scale `phi * zeta` onto the exponential
/// functional of the variance: the CIR bound with this `lambda` constrains
/// `E[exp(lambda int v)]` exactly as needed for the spot moment of order
/// `alpha` with `phi = phi(alpha)`.
pub fn cir_lambda_for_spot_moment(phi_alpha: f64, zeta: f64, xi: f64) -> f64 {
    let pz = phi_alpha * zeta;
    pz * pz / (2.0 * xi * xi)
}

/// Horizon below which the discounted spot approximation converges strongly
/// in L1: `4k/zeta^2` when `zeta < 2k`, else `1/(zeta - k)`.
pub fn t_star_l1(k: f64, zeta: f64) -> CriticalMaturity {
    let (value, branch) = if zeta == 0.0 {
        (Horizon::Infinite, 1)
    } else if zeta < 2.0 * k {
        (Horizon::Finite(4.0 * k / (zeta * zeta)), 1)
    } else {
        (Horizon::Finite(1.0 / (zeta - k)), 2)
    };
    CriticalMaturity {
        value,
        branch,
        kappa: k,
        scale: zeta,
    }
}

/// Horizon below which the leverage calibration formula is valid, with
/// `phi = 2 + sqrt(2)`: finite (arctan window) when `k < phi zeta`,
/// infinite otherwise.
pub fn t_star_calibration(k: f64, zeta: f64) -> CriticalMaturity {
    t_star_moments_exact(2.0, k, zeta)
}

/// Explosion-time lower bound for `E[exp(lambda int_0^T y dt)]` under the
/// exact CIR law.
pub fn explosion_time_exact_cir(cir: &CirParams, lambda: f64) -> CriticalMaturity {
    let m = (2.0 * lambda).sqrt() * cir.xi;
    let (value, branch) = if cir.kappa < m {
        (Horizon::Finite(arctan_window(cir.kappa, m)), 1)
    } else {
        (Horizon::Infinite, 2)
    };
    CriticalMaturity {
        value,
        branch,
        kappa: cir.kappa,
        scale: m,
    }
}

/// Horizon up to which `E[exp(lambda int_0^T y-bar dt)]` stays uniformly
/// bounded over step sizes for the full-truncation scheme:
/// `1/(sqrt(2 lambda) xi - k)` when `k <= sqrt(lambda/2) xi`, else
/// `2k/(lambda xi^2)`.
pub fn explosion_time_fte_cir(cir: &CirParams, lambda: f64) -> CriticalMaturity {
    let m = (2.0 * lambda).sqrt() * cir.xi;
    if cir.xi == 0.0 {
        return CriticalMaturity {
            value: Horizon::Infinite,
            branch: 2,
            kappa: cir.kappa,
            scale: m,
        };
    }
    let (value, branch) = if cir.kappa <= (0.5 * lambda).sqrt() * cir.xi {
        (Horizon::Finite(1.0 / (m - cir.kappa)), 1)
    } else {
        (
            Horizon::Finite(2.0 * cir.kappa / (lambda * cir.xi * cir.xi)),
            2,
        )
    };
    CriticalMaturity {
        value,
        branch,
        kappa: cir.kappa,
        scale: m,
    }
}

/// Explosion-time lower bound for moments of order `alpha >= 1` of the
/// discounted spot under the exact dynamics.
pub fn t_star_moments_exact(alpha: f64, k: f64, zeta: f64) -> CriticalMaturity {
    debug_assert!(alpha >= 1.0);
    let m = phi(alpha) * zeta;
    let (value, branch) = if k < m {
        (Horizon::Finite(arctan_window(k, m)), 1)
    } else {
        (Horizon::Infinite, 2)
    };
    CriticalMaturity {
        value,
        branch,
        kappa: k,
        scale: m,
    }
}

/// Horizon up to which moments of order `alpha >= 1` of the discretized
/// discounted spot stay uniformly bounded over step sizes:
/// `1/(phi zeta - k)` when `k <= phi zeta / 2`, else `4k/(phi zeta)^2`.
pub fn t_star_moments_fte(alpha: f64, k: f64, zeta: f64) -> CriticalMaturity {
    debug_assert!(alpha >= 1.0);
    let m = phi(alpha) * zeta;
    if m == 0.0 {
        return CriticalMaturity {
            value: Horizon::Infinite,
            branch: 2,
            kappa: k,
            scale: m,
        };
    }
    let (value, branch) = if k <= 0.5 * m {
        (Horizon::Finite(1.0 / (m - k)), 1)
    } else {
        (Horizon::Finite(4.0 * k / (m * m)), 2)
    };
    CriticalMaturity {
        value,
        branch,
        kappa: k,
        scale: m,
    }
}

/// Peak factor of the truncation-noise bound used inside the uniform
/// exponential-moment estimate; requires `delta_t_max < 1/kappa`.
pub fn nu_y(cir: &CirParams, delta_t_max: f64) -> Result<f64> {
    let limit = 1.0 / cir.kappa;
    if !(delta_t_max >= 0.0) || delta_t_max >= limit {
        return Err(SlvError::DeltaTooLarge {
            delta_t: delta_t_max,
            limit,
        });
    }
    let d = 1.0 - cir.kappa * delta_t_max;
    let xi2 = cir.xi * cir.xi;
    let kt = cir.kappa * cir.theta;
    let inner = (xi2 * xi2 / (4.0 * d.powi(4)) + kt * kt / (d * d)).sqrt();
    Ok((xi2 / (4.0 * std::f64::consts::PI * d * d)
        + inner / (2.0 * std::f64::consts::PI))
        .sqrt())
}

/// Exponent weight of the uniform bound: the smallest root `>= 1` of
/// `eta^2 lambda xi^2 T^2 - 2 eta (1 + k T) + 2 = 0`, clamped to 1 when the
/// small root falls below it. Errors when no root `>= 1` exists, which is
/// exactly the regime beyond the critical maturity.
fn eta_weight(cir: &CirParams, lambda: f64, maturity: f64) -> Result<f64> {
    let a = lambda * cir.xi * cir.xi * maturity * maturity;
    let b = 1.0 + cir.kappa * maturity;
    if a == 0.0 {
        // Degenerate linear case: the root 1/(1 + kT) <= 1 clamps to 1.
        return Ok(1.0);
    }
    let disc = b * b - 2.0 * a;
    if disc < 0.0 {
        return Err(SlvError::BeyondCriticalMaturity);
    }
    let sqrt_disc = disc.sqrt();
    let eta_minus = 2.0 / (b + sqrt_disc);
    let eta_plus = (b + sqrt_disc) / a;
    if eta_plus < 1.0 {
        return Err(SlvError::BeyondCriticalMaturity);
    }
    Ok(eta_minus.max(1.0))
}

/// Uniform upper bound on `E[exp(lambda int_0^T y-bar dt)]` over all step
/// sizes below `delta_t_max`, valid for maturities within
/// [`explosion_time_fte_cir`].
pub fn fte_exp_moment_bound(
    cir: &CirParams,
    lambda: f64,
    maturity: f64,
    delta_t_max: f64,
) -> Result<f64> {
    let eta = eta_weight(cir, lambda, maturity)?;
    let nu = nu_y(cir, delta_t_max)?;
    let kt = cir.kappa * cir.theta;
    Ok((0.5 * eta * lambda * maturity * maturity * (kt + nu * cir.xi)
        + eta * lambda * maturity * cir.y0)
        .exp())
}
