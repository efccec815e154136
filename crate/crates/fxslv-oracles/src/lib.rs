//! Independent closed-form reference values for the fxslv test suites.
//!
//! Nothing here shares code with the engine: the lognormal pricer, the
//! characteristic-function pricer and the square-root moment formulas exist
//! to falsify the Monte Carlo implementation, not to serve users. Keep it
//! that way when extending either crate.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("quadrature failed: {0}")]
    QuadratureFailed(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, OracleError>;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x * FRAC_1_SQRT_2)
}

/// Undiscounted forward, strike, total volatility and discount factor of one
/// vanilla quote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanillaQuote {
    pub forward: f64,
    pub strike: f64,
    /// Total volatility over the life of the option, `sigma sqrt(T)`.
    pub vol_sqrt_t: f64,
    pub discount: f64,
}

/// Lognormal (Black) call value. `vol_sqrt_t = 0` degenerates to the
/// discounted intrinsic value.
pub fn bs_call(forward: f64, strike: f64, vol_sqrt_t: f64, discount: f64) -> f64 {
    if strike <= 0.0 {
        return discount * forward;
    }
    if vol_sqrt_t <= 0.0 {
        return discount * (forward - strike).max(0.0);
    }
    let d1 = (forward / strike).ln() / vol_sqrt_t + 0.5 * vol_sqrt_t;
    let d2 = d1 - vol_sqrt_t;
    discount * (forward * normal_cdf(d1) - strike * normal_cdf(d2))
}

/// Lognormal (Black) put value via parity.
pub fn bs_put(forward: f64, strike: f64, vol_sqrt_t: f64, discount: f64) -> f64 {
    bs_call(forward, strike, vol_sqrt_t, discount) - discount * (forward - strike)
}

/// Mean and variance of the square-root process at time `t`:
/// `mean = theta + (y0 - theta) e^{-kt}`,
/// `var = y0 (xi^2/k)(e^{-kt} - e^{-2kt}) + theta (xi^2/2k)(1 - e^{-kt})^2`.
pub fn cir_exact_moments(y0: f64, kappa: f64, theta: f64, xi: f64, t: f64) -> (f64, f64) {
    if t == 0.0 {
        return (y0, 0.0);
    }
    let e = (-kappa * t).exp();
    let mean = theta + (y0 - theta) * e;
    let var = if kappa == 0.0 {
        // Limit k -> 0: y0 xi^2 t plus the theta term's limit theta xi^2 t^2 k / 2 -> 0.
        y0 * xi * xi * t
    } else {
        y0 * (xi * xi / kappa) * (e - e * e)
            + theta * (xi * xi / (2.0 * kappa)) * (1.0 - e) * (1.0 - e)
    };
    (mean, var)
}

/// Heston parameters for the characteristic-function pricer, FX convention
/// with constant domestic and foreign rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HestonQuote {
    pub v0: f64,
    pub kappa: f64,
    pub theta: f64,
    pub xi: f64,
    pub rho_sv: f64,
    pub rate_d: f64,
    pub rate_f: f64,
    pub s0: f64,
    pub strike: f64,
    pub maturity: f64,
}

/// Complex `ln(1 + z)`, series-based near zero to avoid cancellation.
fn ln_1p_complex(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        z - z2 / 2.0 + z2 * z / 3.0 - z2 * z2 / 4.0
    } else {
        (Complex64::new(1.0, 0.0) + z).ln()
    }
}

/// Characteristic function `E[exp(i u ln S_T)]` in the branch-cut-safe
/// formulation: the principal square root with the minus convention keeps
/// the complex logarithm on one sheet, and `b - d` is evaluated through its
/// rationalized form to survive small vol-of-vol.
fn heston_cf(q: &HestonQuote, u: Complex64) -> Complex64 {
    let i = Complex64::i();
    let xi2 = q.xi * q.xi;
    let b = Complex64::new(q.kappa, 0.0) - q.rho_sv * q.xi * u * i;
    let iu_u2 = u * i + u * u;
    let d = (b * b + xi2 * iu_u2).sqrt();
    let bpd = b + d;
    // b - d without cancellation: (b^2 - d^2) / (b + d).
    let bmd = -xi2 * iu_u2 / bpd;
    let g = bmd / bpd;
    let e = (-d * q.maturity).exp();
    let log_term = ln_1p_complex(-g * e) - ln_1p_complex(-g);
    let a = q.kappa * q.theta / xi2 * (bmd * q.maturity - 2.0 * log_term);
    let big_d = bmd / xi2 * (1.0 - e) / (1.0 - g * e);
    let drift = q.s0.ln() + (q.rate_d - q.rate_f) * q.maturity;
    (i * u * drift + a + big_d * q.v0).exp()
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(OracleError::QuadratureFailed(format!(
            "refinement exhausted on [{a}, {b}]"
        )));
    }
    let l = adaptive_simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1)?;
    let r = adaptive_simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

fn integrate_to_tolerance(f: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    // The integrand has a finite limit at zero; a midpoint sliver covers
    // [0, delta] with O(delta^3) error and adaptive Simpson does the rest.
    let delta = 1e-4;
    let mut total = delta * f(0.5 * delta);
    let mut a = delta;
    let mut width = 50.0;
    let mut tail_tol = 0.5 * tol;
    loop {
        let b = a + width;
        let fa = f(a);
        let fm = f(0.5 * (a + b));
        let fb = f(b);
        total += adaptive_simpson(&f, a, b, fa, fm, fb, tail_tol, 48)?;
        // Stop once the integrand is dead at the far end of the panel.
        if fb.abs() < 1e-14 && f(b - 0.37 * width).abs() < 1e-13 {
            return Ok(total);
        }
        a = b;
        width *= 2.0;
        tail_tol *= 0.5;
        if a > 1e7 {
            return Err(OracleError::QuadratureFailed(
                "integrand tail does not decay".into(),
            ));
        }
    }
}

/// Semi-analytic Heston call through the two risk-neutral probabilities,
/// each an integral of the characteristic function, evaluated adaptively to
/// the given absolute tolerance.
pub fn heston_call_with_tol(q: &HestonQuote, tol: f64) -> Result<f64> {
    if q.v0 < 0.0 || q.kappa <= 0.0 || q.theta < 0.0 || q.xi <= 0.0 {
        return Err(OracleError::InvalidInput(
            "heston oracle needs kappa > 0, xi > 0, v0 >= 0, theta >= 0".into(),
        ));
    }
    if q.rho_sv.abs() >= 1.0 {
        return Err(OracleError::InvalidInput("rho must lie in (-1, 1)".into()));
    }
    let log_k = q.strike.ln();
    let forward = q.s0 * ((q.rate_d - q.rate_f) * q.maturity).exp();
    let i = Complex64::i();

    // P2 integrand: Re[e^{-iu ln K} phi(u) / (iu)].
    let p2_integrand = |u: f64| -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let uu = Complex64::new(u, 0.0);
        let val = (-i * uu * log_k).exp() * heston_cf(q, uu) / (i * uu);
        val.re
    };
    // P1 integrand uses the share-measure CF phi(u - i) / phi(-i).
    let p1_integrand = |u: f64| -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let uu = Complex64::new(u, -1.0);
        let val = (-i * Complex64::new(u, 0.0) * log_k).exp() * heston_cf(q, uu)
            / (i * Complex64::new(u, 0.0) * forward);
        val.re
    };

    let inv_pi = std::f64::consts::FRAC_1_PI;
    let p1 = 0.5 + inv_pi * integrate_to_tolerance(p1_integrand, tol * 0.25)?;
    let p2 = 0.5 + inv_pi * integrate_to_tolerance(p2_integrand, tol * 0.25)?;
    let df = (-q.rate_d * q.maturity).exp();
    Ok(df * (forward * p1 - q.strike * p2))
}

/// Semi-analytic Heston call at the standard tolerance 1e-8.
pub fn heston_call(q: &HestonQuote) -> Result<f64> {
    heston_call_with_tol(q, 1e-8)
}

/// Heston put via parity with the call.
pub fn heston_put(q: &HestonQuote) -> Result<f64> {
    let call = heston_call(q)?;
    let df_d = (-q.rate_d * q.maturity).exp();
    let df_f = (-q.rate_f * q.maturity).exp();
    Ok(call - df_f * q.s0 + df_d * q.strike)
}
