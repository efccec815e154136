//! Model parameters for the 4-factor hybrid stochastic-local-volatility FX model.
//!
//! The joint dynamics couple the spot FX rate, a square-root variance process
//! and two shifted square-root short rates (domestic and foreign) through a
//! constant 4x4 correlation matrix. Everything here is immutable after
//! construction and safe to share read-only across workers.

use std::sync::Arc;

use crate::error::{Result, SlvError};
use crate::leverage::LeverageSurface;

/// Factor index of the spot driver in the correlation matrix.
pub const FACTOR_SPOT: usize = 0;
/// Factor index of the variance driver.
pub const FACTOR_VARIANCE: usize = 1;
/// Factor index of the domestic short-rate driver.
pub const FACTOR_DOMESTIC: usize = 2;
/// Factor index of the foreign short-rate driver.
pub const FACTOR_FOREIGN: usize = 3;

fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(SlvError::NonFiniteParameter(name.to_string()))
    }
}

/// Parameters of one square-root (CIR) factor
/// `dy = kappa (theta - y) dt + xi sqrt(y) dW`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CirParams {
    /// Initial level.
    pub y0: f64,
    /// Mean-reversion speed (1/year).
    pub kappa: f64,
    /// Long-run mean level.
    pub theta: f64,
    /// Volatility of the level.
    pub xi: f64,
}

impl CirParams {
    pub fn new(y0: f64, kappa: f64, theta: f64, xi: f64) -> Result<Self> {
        let p = Self {
            y0,
            kappa,
            theta,
            xi,
        };
        p.check_finite()?;
        for (name, v) in [("y0", y0), ("kappa", kappa), ("theta", theta), ("xi", xi)] {
            if v < 0.0 {
                return Err(SlvError::InvalidParameter(format!(
                    "CIR {name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(p)
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        ensure_finite("y0", self.y0)?;
        ensure_finite("kappa", self.kappa)?;
        ensure_finite("theta", self.theta)?;
        ensure_finite("xi", self.xi)
    }

    /// `2 kappa theta / xi^2`; the process stays strictly positive when this
    /// exceeds one. Infinite when `xi == 0`.
    pub fn feller_ratio(&self) -> f64 {
        2.0 * self.kappa * self.theta / (self.xi * self.xi)
    }

    /// Whether `2 kappa theta > xi^2`.
    pub fn feller_satisfied(&self) -> bool {
        2.0 * self.kappa * self.theta > self.xi * self.xi
    }
}

/// Deterministic rate shift, piecewise constant on right-open intervals.
///
/// `values[i]` applies on `[knots[i], knots[i+1])`; the last value extends to
/// infinity. The first knot must be zero and `|values| <= h_max`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ShiftFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
    h_max: f64,
}

impl ShiftFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, h_max: f64) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(SlvError::InvalidParameter(
                "shift function needs one value per knot".into(),
            ));
        }
        for &k in &knots {
            ensure_finite("shift knot", k)?;
        }
        for &v in &values {
            ensure_finite("shift value", v)?;
        }
        ensure_finite("h_max", h_max)?;
        if knots[0] != 0.0 {
            return Err(SlvError::InvalidParameter(
                "first shift knot must be 0".into(),
            ));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SlvError::InvalidParameter(
                "shift knots must be strictly increasing".into(),
            ));
        }
        if h_max < 0.0 {
            return Err(SlvError::InvalidParameter("h_max must be >= 0".into()));
        }
        if values.iter().any(|v| v.abs() > h_max) {
            return Err(SlvError::InvalidParameter(format!(
                "shift values must satisfy |value| <= h_max = {h_max}"
            )));
        }
        Ok(Self {
            knots,
            values,
            h_max,
        })
    }

    /// Identically zero shift.
    pub fn zero() -> Self {
        Self {
            knots: vec![0.0],
            values: vec![0.0],
            h_max: 0.0,
        }
    }

    /// Constant shift `value` on all of time.
    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![value], value.abs())
    }

    /// Bound on `|h(t)|`.
    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Shift level at time `t` (clamped to the first interval for `t < 0`).
    pub fn value(&self, t: f64) -> f64 {
        let idx = self.knots.partition_point(|&k| k <= t);
        self.values[idx.saturating_sub(1).min(self.values.len() - 1)]
    }

    /// Exact integral of the shift over `[a, b]`, split at the knots.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        let mut lo = a;
        // Index of the interval containing `lo`.
        let mut idx = self.knots.partition_point(|&k| k <= lo).saturating_sub(1);
        while lo < b {
            let hi = if idx + 1 < self.knots.len() {
                self.knots[idx + 1].min(b)
            } else {
                b
            };
            total += self.values[idx] * (hi - lo);
            lo = hi;
            idx += 1;
        }
        total
    }

    fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Constant correlation matrix of the four Brownian drivers in the order
/// (spot, variance, domestic, foreign).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CorrelationMatrix {
    entries: [[f64; 4]; 4],
}

impl CorrelationMatrix {
    /// Validates symmetry, a unit diagonal and off-diagonals in `[-1, 1]`.
    /// Positive semi-definiteness is checked separately by [`Self::is_psd`]
    /// and by the Cholesky factorization in the drivers module.
    pub fn new(entries: [[f64; 4]; 4]) -> Result<Self> {
        for row in &entries {
            for &v in row {
                ensure_finite("correlation entry", v)?;
            }
        }
        for i in 0..4 {
            if entries[i][i] != 1.0 {
                return Err(SlvError::InvalidParameter(
                    "correlation diagonal must be exactly 1".into(),
                ));
            }
            for j in 0..i {
                if entries[i][j] != entries[j][i] {
                    return Err(SlvError::InvalidParameter(
                        "correlation matrix must be symmetric".into(),
                    ));
                }
                if entries[i][j].abs() > 1.0 {
                    return Err(SlvError::InvalidParameter(
                        "correlations must lie in [-1, 1]".into(),
                    ));
                }
            }
        }
        Ok(Self { entries })
    }

    /// Builds the matrix from the six pairwise correlations.
    pub fn from_pairs(
        rho_sv: f64,
        rho_sd: f64,
        rho_sf: f64,
        rho_vd: f64,
        rho_vf: f64,
        rho_df: f64,
    ) -> Result<Self> {
        Self::new([
            [1.0, rho_sv, rho_sd, rho_sf],
            [rho_sv, 1.0, rho_vd, rho_vf],
            [rho_sd, rho_vd, 1.0, rho_df],
            [rho_sf, rho_vf, rho_df, 1.0],
        ])
    }

    pub fn identity() -> Self {
        let mut entries = [[0.0; 4]; 4];
        for (i, row) in entries.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[[f64; 4]; 4] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    /// Spot/foreign-rate correlation, which drives the quanto correction.
    pub fn rho_sf(&self) -> f64 {
        self.entries[FACTOR_SPOT][FACTOR_FOREIGN]
    }

    /// Whether the matrix admits a Cholesky-type factorization with pivots
    /// no smaller than `-1e-12`.
    pub fn is_psd(&self) -> bool {
        crate::drivers::cholesky(self).is_ok()
    }
}

/// Full parameter set of the 4-factor model.
#[derive(Debug, Clone)]
pub struct ModelParams {
    /// Initial spot exchange rate (domestic units per foreign unit).
    pub s0: f64,
    /// Variance factor of the spot.
    pub variance: CirParams,
    /// Domestic short-rate factor.
    pub domestic: CirParams,
    /// Foreign short-rate factor.
    pub foreign: CirParams,
    /// Deterministic shift of the domestic short rate.
    pub shift_d: ShiftFunction,
    /// Deterministic shift of the foreign short rate.
    pub shift_f: ShiftFunction,
    /// Correlation of the four Brownian drivers.
    pub corr: CorrelationMatrix,
    /// Leverage function sigma(t, x) multiplying sqrt(v).
    pub leverage: Arc<LeverageSurface>,
}

impl ModelParams {
    /// `zeta = xi * sigma_max`, the volatility scale entering every critical
    /// maturity bound on the spot.
    pub fn zeta(&self) -> f64 {
        self.variance.xi * self.leverage.sigma_max()
    }

    /// Whether both shift functions are identically zero.
    pub fn shifts_are_zero(&self) -> bool {
        self.shift_d.is_zero() && self.shift_f.is_zero()
    }
}

/// Feller diagnostics for one square-root factor.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FellerStatus {
    pub ratio: f64,
    pub satisfied: bool,
}

impl FellerStatus {
    fn of(p: &CirParams) -> Self {
        Self {
            ratio: p.feller_ratio(),
            satisfied: p.feller_satisfied(),
        }
    }
}

/// Structured validation output. Produced deterministically: the same input
/// always yields a byte-identical report.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ValidationReport {
    /// Whether the correlation matrix passed the PSD check.
    pub psd_ok: bool,
    pub variance_feller: FellerStatus,
    pub domestic_feller: FellerStatus,
    pub foreign_feller: FellerStatus,
    /// Hard violations; a non-empty list means the model must not be priced.
    pub violations: Vec<String>,
    /// Soft findings; pricing proceeds. A failed foreign Feller condition
    /// lands here because the convergence theorems need it while the
    /// simulation itself runs regardless.
    pub warnings: Vec<String>,
}

impl ValidationReport {
    /// True when no hard violation was found.
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty() && self.psd_ok
    }
}

/// Validates a full parameter set and reports PSD, Feller and positivity
/// findings. Never fails for finite inputs; non-finite inputs are a hard
/// error because no meaningful report exists for them.
pub fn validate(params: &ModelParams) -> Result<ValidationReport> {
    ensure_finite("s0", params.s0)?;
    params.variance.check_finite()?;
    params.domestic.check_finite()?;
    params.foreign.check_finite()?;

    let mut violations = Vec::new();
    let mut warnings = Vec::new();

    if params.s0 <= 0.0 {
        violations.push(format!("s0 must be positive, got {}", params.s0));
    }
    for (label, p) in [
        ("variance", &params.variance),
        ("domestic", &params.domestic),
        ("foreign", &params.foreign),
    ] {
        for (name, v) in [
            ("y0", p.y0),
            ("kappa", p.kappa),
            ("theta", p.theta),
            ("xi", p.xi),
        ] {
            if v < 0.0 {
                violations.push(format!("{label}.{name} must be non-negative, got {v}"));
            }
        }
    }

    let psd_ok = params.corr.is_psd();
    if !psd_ok {
        violations.push("correlation matrix not PSD".into());
    }

    let foreign_feller = FellerStatus::of(&params.foreign);
    if !foreign_feller.satisfied && params.corr.rho_sf() != 0.0 {
        warnings.push(format!(
            "foreign Feller condition violated (2 k theta = {} <= xi^2 = {}); \
             convergence guarantees need it, simulation still runs",
            2.0 * params.foreign.kappa * params.foreign.theta,
            params.foreign.xi * params.foreign.xi
        ));
    } else if !foreign_feller.satisfied {
        warnings.push(
            "foreign Feller condition violated; harmless here since rho_sf = 0".into(),
        );
    }

    Ok(ValidationReport {
        psd_ok,
        variance_feller: FellerStatus::of(&params.variance),
        domestic_feller: FellerStatus::of(&params.domestic),
        foreign_feller,
        violations,
        warnings,
    })
}
