//! Discounted pathwise payoff evaluation.
//!
//! All contracts are monitored on grid dates only; fixing, monitoring and
//! coupon dates must lie on the simulation grid. Barrier conventions: an up
//! barrier triggers on `S >= B`, a down barrier on `S <= B`, applied
//! identically to single and double barriers so that in/out parity holds
//! pathwise by construction.

use crate::drivers::SimGrid;
use crate::error::{Result, SlvError};
use crate::simulator::PathRecord;

/// Call/put selector; for Asian payoffs this is the sign `psi` applied to
/// the average-minus-strike difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionKind {
    Call,
    Put,
}

/// Single-barrier flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierKind {
    UpAndOut,
    UpAndIn,
    DownAndOut,
    DownAndIn,
}

/// How an Asian average is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AveragingMode {
    /// Arithmetic mean over the listed fixing dates.
    Discrete,
    /// Trapezoid approximation of the continuous average over the whole
    /// grid; the fixing-date list is ignored.
    ContinuousTrapezoid,
}

/// One contract to price.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PayoffSpec {
    EuropeanCall {
        strike: f64,
    },
    EuropeanPut {
        strike: f64,
    },
    AsianFixed {
        strike: f64,
        option: OptionKind,
        fixing_dates: Vec<f64>,
        #[serde(default = "default_averaging")]
        averaging: AveragingMode,
    },
    Barrier {
        kind: BarrierKind,
        option: OptionKind,
        strike: f64,
        barrier: f64,
        monitoring_dates: Vec<f64>,
    },
    DoubleKnockOutCall {
        strike: f64,
        lower: f64,
        upper: f64,
        monitoring_dates: Vec<f64>,
    },
    Abdc(AbdcContract),
}

fn default_averaging() -> AveragingMode {
    AveragingMode::Discrete
}

impl PayoffSpec {
    /// Structural validation independent of any grid.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 {
                Ok(())
            } else {
                Err(SlvError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        match self {
            PayoffSpec::EuropeanCall { strike } | PayoffSpec::EuropeanPut { strike } => {
                positive("strike", *strike)
            }
            PayoffSpec::AsianFixed {
                strike,
                fixing_dates,
                averaging,
                ..
            } => {
                positive("strike", *strike)?;
                if *averaging == AveragingMode::Discrete && fixing_dates.is_empty() {
                    return Err(SlvError::InvalidParameter(
                        "asian payoff needs fixing dates".into(),
                    ));
                }
                Ok(())
            }
            PayoffSpec::Barrier {
                strike,
                barrier,
                monitoring_dates,
                ..
            } => {
                positive("strike", *strike)?;
                positive("barrier", *barrier)?;
                if monitoring_dates.is_empty() {
                    return Err(SlvError::InvalidParameter(
                        "barrier payoff needs monitoring dates".into(),
                    ));
                }
                Ok(())
            }
            PayoffSpec::DoubleKnockOutCall {
                strike,
                lower,
                upper,
                monitoring_dates,
            } => {
                positive("strike", *strike)?;
                positive("lower barrier", *lower)?;
                positive("upper barrier", *upper)?;
                if lower >= upper {
                    return Err(SlvError::InvalidParameter(
                        "double barrier needs lower < upper".into(),
                    ));
                }
                if monitoring_dates.is_empty() {
                    return Err(SlvError::InvalidParameter(
                        "barrier payoff needs monitoring dates".into(),
                    ));
                }
                Ok(())
            }
            PayoffSpec::Abdc(contract) => contract.validate(),
        }
    }

    /// Every date the payoff reads from a path.
    pub fn dates(&self) -> Vec<f64> {
        match self {
            PayoffSpec::EuropeanCall { .. } | PayoffSpec::EuropeanPut { .. } => Vec::new(),
            PayoffSpec::AsianFixed {
                fixing_dates,
                averaging,
                ..
            } => {
                if *averaging == AveragingMode::Discrete {
                    fixing_dates.clone()
                } else {
                    Vec::new()
                }
            }
            PayoffSpec::Barrier {
                monitoring_dates, ..
            }
            | PayoffSpec::DoubleKnockOutCall {
                monitoring_dates, ..
            } => monitoring_dates.clone(),
            PayoffSpec::Abdc(contract) => {
                let mut d = contract.fixing_dates.clone();
                d.extend_from_slice(&contract.coupon_dates);
                d
            }
        }
    }

    /// Resolves all payoff dates to indices on `grid`.
    pub fn compile(&self, grid: &SimGrid) -> Result<CompiledPayoff> {
        self.validate()?;
        let to_idx = |dates: &[f64]| -> Result<Vec<usize>> {
            dates.iter().map(|&d| grid.index_of(d)).collect()
        };
        let inner = match self {
            PayoffSpec::EuropeanCall { strike } => Compiled::European {
                strike: *strike,
                call: true,
            },
            PayoffSpec::EuropeanPut { strike } => Compiled::European {
                strike: *strike,
                call: false,
            },
            PayoffSpec::AsianFixed {
                strike,
                option,
                fixing_dates,
                averaging,
            } => Compiled::Asian {
                strike: *strike,
                sign: if *option == OptionKind::Call { 1.0 } else { -1.0 },
                fixings: if *averaging == AveragingMode::Discrete {
                    Some(to_idx(fixing_dates)?)
                } else {
                    None
                },
            },
            PayoffSpec::Barrier {
                kind,
                option,
                strike,
                barrier,
                monitoring_dates,
            } => Compiled::Barrier {
                kind: *kind,
                call: *option == OptionKind::Call,
                strike: *strike,
                barrier: *barrier,
                monitors: to_idx(monitoring_dates)?,
            },
            PayoffSpec::DoubleKnockOutCall {
                strike,
                lower,
                upper,
                monitoring_dates,
            } => Compiled::DoubleKnockOut {
                strike: *strike,
                lower: *lower,
                upper: *upper,
                monitors: to_idx(monitoring_dates)?,
            },
            PayoffSpec::Abdc(contract) => Compiled::Abdc {
                contract: contract.clone(),
                fixings: to_idx(&contract.fixing_dates)?,
                coupons: to_idx(&contract.coupon_dates)?,
            },
        };
        Ok(CompiledPayoff { inner })
    }
}

/// Autocallable barrier dual currency note.
///
/// Monthly fixings monitor both barriers: the first fixing at or above
/// `b_uo` redeems the note early with coupon `coupon_er`; the first fixing
/// at or below `b_di` knocks in a short put settled at expiry. Quarterly
/// coupons pay `coupon` while no early redemption has occurred and the
/// fixing is strictly above `b_di`. Values are fractions of the nominal.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AbdcContract {
    /// Nominal in domestic currency; informational, the payoff is in
    /// fractions of it.
    pub nominal: f64,
    /// Conversion strike (absolute).
    pub strike: f64,
    /// Up-and-out (early redemption) barrier, absolute; may be infinite.
    pub b_uo: f64,
    /// Down-and-in barrier, absolute.
    pub b_di: f64,
    /// Quarterly coupon as a fraction of the nominal.
    pub coupon: f64,
    /// Early-redemption coupon as a fraction of the nominal.
    pub coupon_er: f64,
    /// Barrier fixing dates (monthly in the standard contract).
    pub fixing_dates: Vec<f64>,
    /// Coupon dates, a subset of the fixing horizon.
    pub coupon_dates: Vec<f64>,
    /// Expiry.
    pub expiry: f64,
}

impl AbdcContract {
    /// Standard schedule: percent-of-spot levels, monthly fixings and
    /// quarterly coupons out to an integer number of years.
    #[allow(clippy::too_many_arguments)]
    pub fn from_percent_levels(
        nominal: f64,
        s0: f64,
        strike_pct: f64,
        b_uo_pct: f64,
        b_di_pct: f64,
        coupon: f64,
        coupon_er: f64,
        years: u32,
    ) -> Result<Self> {
        let expiry = f64::from(years);
        let months = years * 12;
        let quarters = years * 4;
        let contract = Self {
            nominal,
            strike: s0 * strike_pct,
            b_uo: s0 * b_uo_pct,
            b_di: s0 * b_di_pct,
            coupon,
            coupon_er,
            fixing_dates: (1..=months).map(|m| f64::from(m) / 12.0).collect(),
            coupon_dates: (1..=quarters).map(|q| f64::from(q) / 4.0).collect(),
            expiry,
        };
        contract.validate()?;
        Ok(contract)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strike > 0.0) {
            return Err(SlvError::InvalidParameter(
                "ABDC strike must be positive".into(),
            ));
        }
        if self.b_uo <= 0.0 || !(self.b_di >= 0.0) {
            return Err(SlvError::InvalidParameter(
                "ABDC barriers must be positive".into(),
            ));
        }
        if self.fixing_dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SlvError::InvalidParameter(
                "ABDC fixing dates must be strictly increasing".into(),
            ));
        }
        let horizon = self.fixing_dates.last().copied().unwrap_or(0.0);
        if self
            .coupon_dates
            .iter()
            .any(|&c| c > horizon || c > self.expiry)
        {
            return Err(SlvError::InvalidParameter(
                "ABDC coupon dates must lie within the fixing horizon".into(),
            ));
        }
        if self.fixing_dates.iter().any(|&d| d > self.expiry) {
            return Err(SlvError::InvalidParameter(
                "ABDC fixing dates must not exceed expiry".into(),
            ));
        }
        Ok(())
    }

    /// Soft checks on the barrier layout relative to the initial spot.
    pub fn warnings(&self, s0: f64) -> Vec<String> {
        let mut w = Vec::new();
        if !(self.b_di < s0 && s0 < self.b_uo) {
            w.push(format!(
                "initial spot {s0} does not lie strictly between b_di = {} and b_uo = {}",
                self.b_di, self.b_uo
            ));
        }
        w
    }
}

/// A payoff with all dates resolved to grid indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledPayoff {
    inner: Compiled,
}

#[derive(Debug, Clone, PartialEq)]
enum Compiled {
    European {
        strike: f64,
        call: bool,
    },
    Asian {
        strike: f64,
        sign: f64,
        /// Fixing indices, or `None` for the trapezoid average of the grid.
        fixings: Option<Vec<usize>>,
    },
    Barrier {
        kind: BarrierKind,
        call: bool,
        strike: f64,
        barrier: f64,
        monitors: Vec<usize>,
    },
    DoubleKnockOut {
        strike: f64,
        lower: f64,
        upper: f64,
        monitors: Vec<usize>,
    },
    Abdc {
        contract: AbdcContract,
        fixings: Vec<usize>,
        coupons: Vec<usize>,
    },
}

impl CompiledPayoff {
    /// Discounted payoff of one path, in domestic currency units (fractions
    /// of the nominal for the structured note).
    pub fn value(&self, path: &PathRecord) -> f64 {
        let terminal = path.spot.len() - 1;
        match &self.inner {
            Compiled::European { strike, call } => {
                let s_t = path.spot[terminal];
                let intrinsic = if *call { s_t - strike } else { strike - s_t };
                path.discount_d_at(terminal) * intrinsic.max(0.0)
            }
            Compiled::Asian {
                strike,
                sign,
                fixings,
            } => {
                let avg = match fixings {
                    Some(idx) => {
                        idx.iter().map(|&n| path.spot[n]).sum::<f64>() / idx.len() as f64
                    }
                    None => {
                        // Trapezoid average of the whole grid.
                        let n = terminal;
                        let mut acc = 0.5 * (path.spot[0] + path.spot[n]);
                        for &s in &path.spot[1..n] {
                            acc += s;
                        }
                        acc / n as f64
                    }
                };
                path.discount_d_at(terminal) * (sign * (avg - strike)).max(0.0)
            }
            Compiled::Barrier {
                kind,
                call,
                strike,
                barrier,
                monitors,
            } => {
                let triggered = match kind {
                    BarrierKind::UpAndOut | BarrierKind::UpAndIn => {
                        monitors.iter().any(|&n| path.spot[n] >= *barrier)
                    }
                    BarrierKind::DownAndOut | BarrierKind::DownAndIn => {
                        monitors.iter().any(|&n| path.spot[n] <= *barrier)
                    }
                };
                let alive = match kind {
                    BarrierKind::UpAndOut | BarrierKind::DownAndOut => !triggered,
                    BarrierKind::UpAndIn | BarrierKind::DownAndIn => triggered,
                };
                if !alive {
                    return 0.0;
                }
                let s_t = path.spot[terminal];
                let intrinsic = if *call { s_t - strike } else { strike - s_t };
                path.discount_d_at(terminal) * intrinsic.max(0.0)
            }
            Compiled::DoubleKnockOut {
                strike,
                lower,
                upper,
                monitors,
            } => {
                let knocked = monitors
                    .iter()
                    .any(|&n| path.spot[n] <= *lower || path.spot[n] >= *upper);
                if knocked {
                    return 0.0;
                }
                path.discount_d_at(terminal) * (path.spot[terminal] - strike).max(0.0)
            }
            Compiled::Abdc {
                contract,
                fixings,
                coupons,
            } => abdc_on_indices(contract, fixings, coupons, path),
        }
    }
}

/// Net present value of the structured note on one path, in fractions of
/// the nominal: the discounted coupon strip while alive, plus the
/// early-redemption coupon if the up barrier was hit, minus the knocked-in
/// short put settled at expiry.
fn abdc_on_indices(
    contract: &AbdcContract,
    fixings: &[usize],
    coupons: &[usize],
    path: &PathRecord,
) -> f64 {
    let terminal = path.spot.len() - 1;
    // First fixing at or above the up barrier / at or below the down barrier.
    let mut er_index: Option<usize> = None;
    let mut ki_seen = false;
    for &n in fixings {
        let s = path.spot[n];
        if er_index.is_none() && s >= contract.b_uo {
            er_index = Some(n);
        }
        if !ki_seen && s <= contract.b_di {
            ki_seen = true;
        }
        if er_index.is_some() && ki_seen {
            break;
        }
    }

    let mut value = 0.0;
    for &n in coupons {
        let before_er = er_index.map_or(true, |er| n < er);
        if before_er && path.spot[n] > contract.b_di {
            value += path.discount_d_at(n) * contract.coupon;
        }
    }
    if let Some(er) = er_index {
        value += path.discount_d_at(er) * contract.coupon_er;
    } else if ki_seen {
        let s_t = path.spot[terminal];
        value -= path.discount_d_at(terminal) / contract.strike * (contract.strike - s_t).max(0.0);
    }
    value
}

/// Evaluates a payoff spec on a path, compiling dates on the fly. Pricing
/// loops should compile once via [`PayoffSpec::compile`] instead.
pub fn payoff_value(spec: &PayoffSpec, path: &PathRecord) -> Result<f64> {
    Ok(spec.compile(path.grid())?.value(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drivers::{cholesky, sample_block, SimGrid};
    use crate::leverage::LeverageSurface;
    use crate::model::{CirParams, CorrelationMatrix, ModelParams, ShiftFunction};
    use crate::simulator::{simulate_path, RecordSpec};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    /// Hand-built record: flat rate `r`, prescribed spot fixings.
    fn hand_path(grid: &SimGrid, r: f64, spot: Vec<f64>) -> PathRecord {
        assert_eq!(spot.len(), grid.n_steps() + 1);
        let mut rec = crate::simulator::empty_record(grid);
        rec.spot = spot;
        rec.int_rd = (0..=grid.n_steps()).map(|n| r * grid.time_at(n)).collect();
        rec.terminal_int_rf = 0.0;
        rec
    }

    fn heston_like() -> ModelParams {
        ModelParams {
            s0: 1.0,
            variance: CirParams::new(0.04, 1.2, 0.04, 0.5).unwrap(),
            domestic: CirParams::new(0.02, 0.6, 0.02, 0.15).unwrap(),
            foreign: CirParams::new(0.01, 0.5, 0.012, 0.12).unwrap(),
            shift_d: ShiftFunction::zero(),
            shift_f: ShiftFunction::zero(),
            corr: CorrelationMatrix::from_pairs(-0.5, 0.1, -0.2, 0.05, -0.05, 0.15).unwrap(),
            leverage: Arc::new(LeverageSurface::constant(1.0).unwrap()),
        }
    }

    #[test]
    fn constant_path_call_pays_intrinsic() {
        let grid = SimGrid::new(1.0, 4).unwrap();
        let path = hand_path(&grid, 0.0, vec![1.0; 5]);
        let spec = PayoffSpec::EuropeanCall { strike: 0.5 };
        assert_relative_eq!(payoff_value(&spec, &path).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn up_and_out_with_barrier_below_strike_is_worthless() {
        let grid = SimGrid::new(1.0, 12).unwrap();
        let dates: Vec<f64> = (1..=12).map(|m| f64::from(m) / 12.0).collect();
        let spec = PayoffSpec::Barrier {
            kind: BarrierKind::UpAndOut,
            option: OptionKind::Call,
            strike: 1.2,
            barrier: 1.1,
            monitoring_dates: dates,
        };
        let m = heston_like();
        let factor = cholesky(&m.corr).unwrap();
        for p in 0..100 {
            let block = sample_block(41, p, &grid, &factor);
            let path = simulate_path(&m, &grid, &block, RecordSpec::default()).unwrap();
            // A positive call payoff needs S_T > 1.2 > barrier, which would
            // have knocked the option out at the last monitoring date.
            assert_eq!(payoff_value(&spec, &path).unwrap(), 0.0);
        }
    }

    #[test]
    fn barrier_in_out_parity_is_exact_pathwise() {
        let grid = SimGrid::new(1.0, 24).unwrap();
        let dates: Vec<f64> = (1..=24).map(|m| f64::from(m) / 24.0).collect();
        let m = heston_like();
        let factor = cholesky(&m.corr).unwrap();
        for (kind_in, kind_out) in [
            (BarrierKind::DownAndIn, BarrierKind::DownAndOut),
            (BarrierKind::UpAndIn, BarrierKind::UpAndOut),
        ] {
            for option in [OptionKind::Put, OptionKind::Call] {
                for p in 0..100 {
                    let block = sample_block(43, p, &grid, &factor);
                    let path =
                        simulate_path(&m, &grid, &block, RecordSpec::default()).unwrap();
                    let barrier = if matches!(kind_in, BarrierKind::DownAndIn) {
                        0.95
                    } else {
                        1.05
                    };
                    let mk = |kind| PayoffSpec::Barrier {
                        kind,
                        option,
                        strike: 1.0,
                        barrier,
                        monitoring_dates: dates.clone(),
                    };
                    let vin = payoff_value(&mk(kind_in), &path).unwrap();
                    let vout = payoff_value(&mk(kind_out), &path).unwrap();
                    let vanilla = match option {
                        OptionKind::Call => payoff_value(
                            &PayoffSpec::EuropeanCall { strike: 1.0 },
                            &path,
                        )
                        .unwrap(),
                        OptionKind::Put => payoff_value(
                            &PayoffSpec::EuropeanPut { strike: 1.0 },
                            &path,
                        )
                        .unwrap(),
                    };
                    assert_eq!(vin + vout, vanilla);
                }
            }
        }
    }

    #[test]
    fn put_call_parity_is_exact_pathwise() {
        let grid = SimGrid::new(1.0, 16).unwrap();
        let m = heston_like();
        let factor = cholesky(&m.corr).unwrap();
        let k = 1.05;
        for p in 0..200 {
            let block = sample_block(44, p, &grid, &factor);
            let path = simulate_path(&m, &grid, &block, RecordSpec::default()).unwrap();
            let call = payoff_value(&PayoffSpec::EuropeanCall { strike: k }, &path).unwrap();
            let put = payoff_value(&PayoffSpec::EuropeanPut { strike: k }, &path).unwrap();
            let forward = path.terminal_discount_d() * (path.terminal_spot() - k);
            assert_relative_eq!(call - put, forward, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn boundary_touch_knocks_under_the_closed_convention() {
        let grid = SimGrid::new(1.0, 2).unwrap();
        // Touches the barrier exactly at the first monitoring date.
        let path = hand_path(&grid, 0.0, vec![1.0, 1.3, 1.25]);
        let uo = PayoffSpec::Barrier {
            kind: BarrierKind::UpAndOut,
            option: OptionKind::Call,
            strike: 1.0,
            barrier: 1.3,
            monitoring_dates: vec![0.5, 1.0],
        };
        assert_eq!(payoff_value(&uo, &path).unwrap(), 0.0);
        let dko = PayoffSpec::DoubleKnockOutCall {
            strike: 1.0,
            lower: 0.5,
            upper: 1.3,
            monitoring_dates: vec![0.5, 1.0],
        };
        assert_eq!(payoff_value(&dko, &path).unwrap(), 0.0);
    }

    #[test]
    fn double_knock_out_equals_the_two_sided_indicator() {
        let grid = SimGrid::new(1.0, 12).unwrap();
        let dates: Vec<f64> = (1..=12).map(|m| f64::from(m) / 12.0).collect();
        let m = heston_like();
        let factor = cholesky(&m.corr).unwrap();
        let spec = PayoffSpec::DoubleKnockOutCall {
            strike: 0.98,
            lower: 0.9,
            upper: 1.12,
            monitoring_dates: dates.clone(),
        };
        let compiled = spec.compile(&grid).unwrap();
        let idx: Vec<usize> = dates.iter().map(|&d| grid.index_of(d).unwrap()).collect();
        for p in 0..300 {
            let block = sample_block(45, p, &grid, &factor);
            let path = simulate_path(&m, &grid, &block, RecordSpec::default()).unwrap();
            let alive = idx
                .iter()
                .all(|&n| path.spot[n] > 0.9 && path.spot[n] < 1.12);
            let expected = if alive {
                path.terminal_discount_d() * (path.terminal_spot() - 0.98).max(0.0)
            } else {
                0.0
            };
            assert_eq!(compiled.value(&path), expected);
        }
    }

    #[test]
    fn asian_discrete_average_and_trapezoid() {
        let grid = SimGrid::new(1.0, 4).unwrap();
        let path = hand_path(&grid, 0.0, vec![1.0, 1.1, 0.9, 1.2, 1.0]);
        let spec = PayoffSpec::AsianFixed {
            strike: 1.0,
            option: OptionKind::Call,
            fixing_dates: vec![0.25, 0.5, 0.75, 1.0],
            averaging: AveragingMode::Discrete,
        };
        let avg = (1.1 + 0.9 + 1.2 + 1.0) / 4.0;
        assert_relative_eq!(
            payoff_value(&spec, &path).unwrap(),
            avg - 1.0,
            epsilon = 1e-15
        );
        let put = PayoffSpec::AsianFixed {
            strike: 1.1,
            option: OptionKind::Put,
            fixing_dates: vec![0.25, 0.5, 0.75, 1.0],
            averaging: AveragingMode::Discrete,
        };
        assert_relative_eq!(
            payoff_value(&put, &path).unwrap(),
            1.1 - avg,
            epsilon = 1e-15
        );
        let cont = PayoffSpec::AsianFixed {
            strike: 0.9,
            option: OptionKind::Call,
            fixing_dates: vec![],
            averaging: AveragingMode::ContinuousTrapezoid,
        };
        let trap = (0.5 * (1.0 + 1.0) + 1.1 + 0.9 + 1.2) / 4.0;
        assert_relative_eq!(
            payoff_value(&cont, &path).unwrap(),
            trap - 0.9,
            epsilon = 1e-15
        );
    }

    #[test]
    fn dates_off_the_grid_are_rejected() {
        let grid = SimGrid::new(1.0, 12).unwrap();
        let spec = PayoffSpec::Barrier {
            kind: BarrierKind::UpAndOut,
            option: OptionKind::Call,
            strike: 1.0,
            barrier: 1.3,
            monitoring_dates: vec![0.1],
        };
        assert!(matches!(
            spec.compile(&grid),
            Err(SlvError::DateNotOnGrid(_))
        ));
    }

    fn abdc_for_tests(b_uo: f64, b_di: f64, coupon: f64, coupon_er: f64) -> AbdcContract {
        AbdcContract {
            nominal: 100_000.0,
            strike: 1.05,
            b_uo,
            b_di,
            coupon,
            coupon_er,
            fixing_dates: (1..=24).map(|m| f64::from(m) / 12.0).collect(),
            coupon_dates: (1..=8).map(|q| f64::from(q) / 4.0).collect(),
            expiry: 2.0,
        }
    }

    #[test]
    fn abdc_early_redemption_at_the_first_fixing() {
        let grid = SimGrid::new(2.0, 12).unwrap();
        let r = 0.03;
        let mut spots = vec![1.0; 25];
        spots[1] = 1.31; // crosses the up barrier at t = 1/12
        let path = hand_path(&grid, r, spots);
        let contract = abdc_for_tests(1.3, 0.8, 0.025, 0.015);
        let spec = PayoffSpec::Abdc(contract);
        let value = payoff_value(&spec, &path).unwrap();
        assert_relative_eq!(
            value,
            (-r / 12.0f64).exp() * 0.015,
            epsilon = 1e-15
        );
    }

    #[test]
    fn abdc_degenerates_to_a_coupon_strip() {
        // Unreachable barriers and deterministic rates: the note is a strip
        // of discounted coupons.
        let grid = SimGrid::new(2.0, 12).unwrap();
        let r = 0.02;
        let path = hand_path(&grid, r, vec![1.0; 25]);
        let contract = abdc_for_tests(f64::INFINITY, 0.0, 0.025, 0.015);
        let value = payoff_value(&PayoffSpec::Abdc(contract.clone()), &path).unwrap();
        let strip: f64 = contract
            .coupon_dates
            .iter()
            .map(|&t| (-r * t).exp() * contract.coupon)
            .sum();
        assert_relative_eq!(value, strip, epsilon = 1e-12);
    }

    #[test]
    fn abdc_knock_in_path_matches_term_by_term_oracle() {
        // 24 monthly fixings over two years; the spot dips through the down
        // barrier in month 7 and finishes below the strike, with no early
        // redemption. The oracle transcribes the cashflow definition term by
        // term on the same fixed path.
        let grid = SimGrid::new(2.0, 12).unwrap();
        let r = 0.015;
        let spots = vec![
            1.0, 1.01, 0.99, 1.02, 0.97, 0.95, 0.92, 0.79, 0.84, 0.9, 0.95, 1.0, 1.01, 1.04,
            1.08, 1.1, 1.12, 1.15, 1.1, 1.05, 1.0, 0.97, 0.96, 0.95, 0.94,
        ];
        let path = hand_path(&grid, r, spots.clone());
        let contract = abdc_for_tests(1.3, 0.8, 0.025, 0.015);
        let value = payoff_value(&PayoffSpec::Abdc(contract.clone()), &path).unwrap();

        // Oracle. Fixing m (1-based) sits at grid index m, time m/12.
        let disc = |t: f64| (-r * t).exp();
        let mut tau_er = f64::INFINITY;
        let mut tau_ki = f64::INFINITY;
        for m in 1..=24 {
            let t = f64::from(m) / 12.0;
            let s = spots[m as usize];
            if tau_er.is_infinite() && s >= contract.b_uo {
                tau_er = t;
            }
            if tau_ki.is_infinite() && s <= contract.b_di {
                tau_ki = t;
            }
        }
        assert!(tau_er.is_infinite());
        assert_relative_eq!(tau_ki, 7.0 / 12.0, epsilon = 1e-12);
        let mut oracle = 0.0;
        for q in 1..=8 {
            let t = f64::from(q) / 4.0;
            let s = spots[(q * 3) as usize];
            if t < tau_er && s > contract.b_di {
                oracle += disc(t) * contract.coupon;
            }
        }
        if tau_er <= contract.expiry {
            oracle += disc(tau_er) * contract.coupon_er;
        }
        if tau_ki <= contract.expiry && contract.expiry < tau_er {
            oracle -= disc(contract.expiry) / contract.strike
                * (contract.strike - spots[24]).max(0.0);
        }
        assert_relative_eq!(value, oracle, epsilon = 1e-14);
        // The knocked-in put strictly reduces the value below the pure
        // coupon strip.
        let strip: f64 = (1..=8)
            .map(|q| disc(f64::from(q) / 4.0) * contract.coupon)
            .sum();
        assert!(value < strip, "knock-in leg missing: {value} >= {strip}");
    }

    #[test]
    fn abdc_er_coupon_and_quarterly_coupon_are_exclusive_at_the_same_date() {
        // ER fires exactly on a coupon date; the strict t_i < tau_er rule
        // drops that coupon.
        let grid = SimGrid::new(2.0, 12).unwrap();
        let r = 0.0;
        let mut spots = vec![1.0; 25];
        spots[3] = 1.35; // fixing 3 = first coupon date (t = 0.25)
        let path = hand_path(&grid, r, spots);
        let contract = abdc_for_tests(1.3, 0.8, 0.025, 0.015);
        let value = payoff_value(&PayoffSpec::Abdc(contract), &path).unwrap();
        assert_relative_eq!(value, 0.015, epsilon = 1e-15);
    }

    #[test]
    fn abdc_later_early_redemption_never_increases_the_er_leg() {
        // Zero coupons isolate the ER leg; with positive rates the leg is
        // non-increasing in the redemption date.
        let grid = SimGrid::new(2.0, 12).unwrap();
        let contract = abdc_for_tests(1.3, 0.0, 0.0, 0.02);
        let mut prev = f64::INFINITY;
        for er_month in 1..=24 {
            let mut spots = vec![1.0; 25];
            spots[er_month] = 1.4;
            let path = hand_path(&grid, 0.04, spots);
            let v = payoff_value(&PayoffSpec::Abdc(contract.clone()), &path).unwrap();
            assert!(v <= prev + 1e-15, "ER leg increased at month {er_month}");
            prev = v;
        }
    }

    #[test]
    fn abdc_without_coupons_is_a_knocked_in_short_put_overlay() {
        let grid = SimGrid::new(2.0, 12).unwrap();
        let contract = abdc_for_tests(1.25, 0.85, 0.0, 0.0);
        let m = heston_like();
        let factor = cholesky(&m.corr).unwrap();
        let fixing_idx: Vec<usize> = contract
            .fixing_dates
            .iter()
            .map(|&d| grid.index_of(d).unwrap())
            .collect();
        for p in 0..300 {
            let block = sample_block(46, p, &grid, &factor);
            let path = simulate_path(&m, &grid, &block, RecordSpec::default()).unwrap();
            let value = payoff_value(&PayoffSpec::Abdc(contract.clone()), &path).unwrap();
            let down = fixing_idx.iter().any(|&n| path.spot[n] <= contract.b_di);
            let up = fixing_idx.iter().any(|&n| path.spot[n] >= contract.b_uo);
            let expected = if down && !up {
                -path.terminal_discount_d() / contract.strike
                    * (contract.strike - path.terminal_spot()).max(0.0)
            } else {
                0.0
            };
            assert_eq!(value, expected);
        }
    }

    #[test]
    fn abdc_validation_catches_bad_schedules() {
        let mut c = abdc_for_tests(1.3, 0.8, 0.025, 0.015);
        c.coupon_dates.push(3.0);
        assert!(c.validate().is_err());
        let c = abdc_for_tests(1.3, 0.8, 0.025, 0.015);
        assert!(c.validate().is_ok());
        assert!(c.warnings(1.0).is_empty());
        assert_eq!(c.warnings(0.5).len(), 1);
    }
}
