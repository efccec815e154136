//! Discrete-time evolution of the joint 4-factor system.
//!
//! The variance and the two short-rate factors advance by full truncation
//! Euler: the auxiliary state may go negative, but drift and diffusion only
//! ever read its positive part, and the reported processes are the positive
//! parts themselves. The log-spot advances by a log-Euler step that reads the
//! leverage at the pre-step spot, so positivity of the spot is structural.
//! Discount integrals accumulate with the left-endpoint rule, which is exact
//! here because the truncated factors are constant on each step and the rate
//! shifts integrate in closed form.

use crate::drivers::{IncrementBlock, SimGrid};
use crate::error::{Result, SlvError};
use crate::model::{ModelParams, ShiftFunction};

/// One full-truncation Euler step of a square-root factor:
/// `y + kappa (theta - y+) dt + xi sqrt(y+) dW`.
#[inline]
pub fn fte_step(y_tilde: f64, kappa: f64, theta: f64, xi: f64, dw: f64, dt: f64) -> f64 {
    let y_plus = y_tilde.max(0.0);
    y_tilde + kappa * (theta - y_plus) * dt + xi * y_plus.sqrt() * dw
}

/// Full-truncation step of the foreign-rate factor, whose drift carries the
/// quanto correction `-rho_sf xi_f sigma_n sqrt(v-bar g+)` from pricing the
/// foreign money market under the domestic measure.
#[inline]
pub fn fte_foreign_step(
    gf_tilde: f64,
    kappa_f: f64,
    theta_f: f64,
    xi_f: f64,
    v_bar: f64,
    sigma_n: f64,
    rho_sf: f64,
    dw_f: f64,
    dt: f64,
) -> f64 {
    let g_plus = gf_tilde.max(0.0);
    let quanto = rho_sf * xi_f * sigma_n * (v_bar * g_plus).sqrt();
    gf_tilde + (kappa_f * theta_f - kappa_f * g_plus - quanto) * dt + xi_f * g_plus.sqrt() * dw_f
}

/// Log-Euler step of the log-spot:
/// `x + int h + (gd - gf - sigma^2 v / 2) dt + sigma sqrt(v) dW_s`,
/// with `sigma` evaluated at the pre-step spot.
#[inline]
pub fn log_euler_step(
    x_bar: f64,
    gd_bar: f64,
    gf_bar: f64,
    h_integral: f64,
    sigma_n: f64,
    v_bar: f64,
    dw_s: f64,
    dt: f64,
) -> f64 {
    let inst_var = sigma_n * sigma_n * v_bar;
    x_bar + h_integral + (gd_bar - gf_bar - 0.5 * inst_var) * dt + sigma_n * v_bar.sqrt() * dw_s
}

/// Mutable state of one path between steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    /// Auxiliary variance level; may be negative.
    pub tilde_v: f64,
    /// Auxiliary domestic-rate level.
    pub tilde_gd: f64,
    /// Auxiliary foreign-rate level.
    pub tilde_gf: f64,
    /// Log-spot.
    pub x_bar: f64,
    /// Accumulated domestic rate integral (discount exponent).
    pub int_rd: f64,
    /// Accumulated foreign rate integral.
    pub int_rf: f64,
    /// Step index.
    pub step: usize,
}

impl PathState {
    pub fn initial(params: &ModelParams) -> Self {
        Self {
            tilde_v: params.variance.y0,
            tilde_gd: params.domestic.y0,
            tilde_gf: params.foreign.y0,
            x_bar: params.s0.ln(),
            int_rd: 0.0,
            int_rf: 0.0,
            step: 0,
        }
    }

    /// Reported variance: the positive part of the auxiliary level.
    #[inline]
    pub fn v_bar(&self) -> f64 {
        self.tilde_v.max(0.0)
    }

    #[inline]
    pub fn gd_bar(&self) -> f64 {
        self.tilde_gd.max(0.0)
    }

    #[inline]
    pub fn gf_bar(&self) -> f64 {
        self.tilde_gf.max(0.0)
    }

    #[inline]
    pub fn spot(&self) -> f64 {
        self.x_bar.exp()
    }
}

/// Which optional columns a simulation records.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RecordSpec {
    /// Record the per-step variance column.
    pub variance: bool,
    /// Record the per-step short-rate factor columns.
    pub rate_factors: bool,
}

impl RecordSpec {
    pub fn all() -> Self {
        Self {
            variance: true,
            rate_factors: true,
        }
    }
}

/// Grid values of one simulated path.
///
/// The spot and the running domestic rate integral are always recorded; the
/// factor columns only on request. Discount factors are exposed lazily from
/// the rate integrals so that paths priced on a handful of dates do not pay
/// for an exponential per step.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    grid: SimGrid,
    /// Spot at every grid point, strictly positive; length `N + 1`.
    pub spot: Vec<f64>,
    /// Accumulated `int_0^{t_n} r-bar^d du`; length `N + 1`.
    pub int_rd: Vec<f64>,
    /// Terminal `int_0^T r-bar^f du`.
    pub terminal_int_rf: f64,
    /// Variance column when requested, else empty.
    pub variance: Vec<f64>,
    /// Domestic rate factor column when requested, else empty.
    pub gd: Vec<f64>,
    /// Foreign rate factor column when requested, else empty.
    pub gf: Vec<f64>,
}

impl PathRecord {
    fn empty(grid: SimGrid) -> Self {
        Self {
            grid,
            spot: Vec::new(),
            int_rd: Vec::new(),
            terminal_int_rf: 0.0,
            variance: Vec::new(),
            gd: Vec::new(),
            gf: Vec::new(),
        }
    }

    pub fn grid(&self) -> &SimGrid {
        &self.grid
    }

    /// Domestic discount factor at grid index `n`.
    #[inline]
    pub fn discount_d_at(&self, n: usize) -> f64 {
        (-self.int_rd[n]).exp()
    }

    /// Terminal domestic discount factor.
    #[inline]
    pub fn terminal_discount_d(&self) -> f64 {
        self.discount_d_at(self.int_rd.len() - 1)
    }

    /// Terminal foreign discount factor.
    pub fn terminal_discount_f(&self) -> f64 {
        (-self.terminal_int_rf).exp()
    }

    pub fn terminal_spot(&self) -> f64 {
        *self.spot.last().expect("simulated path is non-empty")
    }
}

/// Reusable per-grid context: the exact shift integrals of every step.
#[derive(Debug, Clone)]
pub struct SimContext {
    grid: SimGrid,
    /// Exact integral of `h_d` over each step.
    step_shift_d: Vec<f64>,
    /// Exact integral of `h_f` over each step.
    step_shift_f: Vec<f64>,
    rho_sf: f64,
    shifts_zero: bool,
}

impl SimContext {
    pub fn new(params: &ModelParams, grid: &SimGrid) -> Self {
        let integrate = |shift: &ShiftFunction| -> Vec<f64> {
            (0..grid.n_steps())
                .map(|n| shift.integral(grid.time_at(n), grid.time_at(n + 1)))
                .collect()
        };
        Self {
            grid: *grid,
            step_shift_d: integrate(&params.shift_d),
            step_shift_f: integrate(&params.shift_f),
            rho_sf: params.corr.rho_sf(),
            shifts_zero: params.shifts_are_zero(),
        }
    }

    pub fn grid(&self) -> &SimGrid {
        &self.grid
    }

    /// Advances a full path, writing grid values into `record` (its buffers
    /// are reused). The per-step order is fixed by the scheme: read the
    /// leverage at the pre-step spot, accumulate the discount integrals with
    /// the pre-step rates, then advance the variance, the domestic rate, the
    /// foreign rate and finally the log-spot.
    pub fn simulate_into(
        &self,
        params: &ModelParams,
        block: &IncrementBlock,
        spec: RecordSpec,
        record: &mut PathRecord,
    ) -> Result<()> {
        let n_steps = self.grid.n_steps();
        if block.n_steps() != n_steps {
            return Err(SlvError::InvalidParameter(format!(
                "increment block has {} steps, grid has {n_steps}",
                block.n_steps()
            )));
        }
        let dt = self.grid.dt();
        let leverage = params.leverage.as_ref();
        let flat_sigma = if leverage.is_constant() {
            Some(leverage.eval(0.0, params.s0))
        } else {
            None
        };

        record.grid = self.grid;
        record.spot.clear();
        record.int_rd.clear();
        record.variance.clear();
        record.gd.clear();
        record.gf.clear();
        record.spot.reserve(n_steps + 1);
        record.int_rd.reserve(n_steps + 1);

        let mut state = PathState::initial(params);
        let mut spot = params.s0;
        record.spot.push(spot);
        record.int_rd.push(0.0);
        if spec.variance {
            record.variance.reserve(n_steps + 1);
            record.variance.push(state.v_bar());
        }
        if spec.rate_factors {
            record.gd.reserve(n_steps + 1);
            record.gf.reserve(n_steps + 1);
            record.gd.push(state.gd_bar());
            record.gf.push(state.gf_bar());
        }

        for n in 0..n_steps {
            let v_bar = state.v_bar();
            let gd_bar = state.gd_bar();
            let gf_bar = state.gf_bar();
            let sigma_n = match flat_sigma {
                Some(s) => s,
                None => leverage.eval(self.grid.time_at(n), spot),
            };

            // Left-endpoint discount accumulation, exact for the piecewise
            // constant bars plus the closed-form shift integrals.
            state.int_rd += gd_bar * dt + self.step_shift_d[n];
            state.int_rf += gf_bar * dt + self.step_shift_f[n];

            let dw = block.row(n);
            let h_int = if self.shifts_zero {
                0.0
            } else {
                self.step_shift_d[n] - self.step_shift_f[n]
            };
            state.tilde_v = fte_step(
                state.tilde_v,
                params.variance.kappa,
                params.variance.theta,
                params.variance.xi,
                dw[1],
                dt,
            );
            state.tilde_gd = fte_step(
                state.tilde_gd,
                params.domestic.kappa,
                params.domestic.theta,
                params.domestic.xi,
                dw[2],
                dt,
            );
            state.tilde_gf = fte_foreign_step(
                state.tilde_gf,
                params.foreign.kappa,
                params.foreign.theta,
                params.foreign.xi,
                v_bar,
                sigma_n,
                self.rho_sf,
                dw[3],
                dt,
            );
            state.x_bar = log_euler_step(
                state.x_bar, gd_bar, gf_bar, h_int, sigma_n, v_bar, dw[0], dt,
            );
            state.step = n + 1;

            spot = state.x_bar.exp();
            record.spot.push(spot);
            record.int_rd.push(state.int_rd);
            if spec.variance {
                record.variance.push(state.v_bar());
            }
            if spec.rate_factors {
                record.gd.push(state.gd_bar());
                record.gf.push(state.gf_bar());
            }
        }
        record.terminal_int_rf = state.int_rf;
        Ok(())
    }
}

/// Simulates one path into a fresh record.
pub fn simulate_path(
    params: &ModelParams,
    grid: &SimGrid,
    block: &IncrementBlock,
    spec: RecordSpec,
) -> Result<PathRecord> {
    let ctx = SimContext::new(params, grid);
    let mut record = PathRecord::empty(*grid);
    ctx.simulate_into(params, block, spec, &mut record)?;
    Ok(record)
}

/// Allocates an empty record compatible with `grid`, for use with
/// [`SimContext::simulate_into`].
pub fn empty_record(grid: &SimGrid) -> PathRecord {
    PathRecord::empty(*grid)
}

/// Writes paths as CSV with columns `t,S,v,gd,gf` (debugging aid). Requires
/// records produced with [`RecordSpec::all`].
pub fn write_paths_csv<W: std::io::Write>(
    out: &mut W,
    records: &[PathRecord],
) -> std::io::Result<()> {
    writeln!(out, "path,t,S,v,gd,gf")?;
    for (p, rec) in records.iter().enumerate() {
        for n in 0..rec.spot.len() {
            writeln!(
                out,
                "{p},{},{},{},{},{}",
                rec.grid.time_at(n),
                rec.spot[n],
                rec.variance.get(n).copied().unwrap_or(f64::NAN),
                rec.gd.get(n).copied().unwrap_or(f64::NAN),
                rec.gf.get(n).copied().unwrap_or(f64::NAN),
            )?;
        }
    }
    Ok(())
}
