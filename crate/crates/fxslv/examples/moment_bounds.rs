//! Probe the exponential functional of the truncated variance across step
//! refinements and compare against the closed-form uniform bound.
//!
//! ```bash
//! cargo run --release --example moment_bounds
//! ```

use std::sync::Arc;

use fxslv::analytics::{explosion_time_fte_cir, fte_exp_moment_bound};
use fxslv::engine::{moment_probe, MomentSelector, ProcessChoice};
use fxslv::leverage::LeverageSurface;
use fxslv::model::{CirParams, CorrelationMatrix, ModelParams, ShiftFunction};
use fxslv::SimGrid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cir = CirParams::new(0.04, 1.412, 0.04, 0.299)?;
    let params = ModelParams {
        s0: 1.0,
        variance: cir,
        domestic: CirParams::new(0.0, 1.0, 0.0, 0.0)?,
        foreign: CirParams::new(0.0, 1.0, 0.0, 0.0)?,
        shift_d: ShiftFunction::zero(),
        shift_f: ShiftFunction::zero(),
        corr: CorrelationMatrix::identity(),
        leverage: Arc::new(LeverageSurface::constant(1.0)?),
    };

    let lambda = 8.0;
    let maturity = 1.0;
    let horizon = explosion_time_fte_cir(&cir, lambda).value;
    println!("uniform-boundedness horizon at lambda = {lambda}: {horizon} years");

    let grid = SimGrid::new(maturity, 32)?;
    let table = moment_probe(
        &params,
        &grid,
        MomentSelector::ExpIntegral { lambda },
        50_000,
        42,
        4,
    )?;
    let delta_t_max = 2.0 * grid.dt();
    let bound = fte_exp_moment_bound(&cir, lambda, maturity, delta_t_max)?;
    println!("closed-form bound (step sizes below {delta_t_max:.4}): {bound:.4}");
    print!("{}", table.to_csv());

    // A polynomial sup-moment of the same factor for contrast.
    let table = moment_probe(
        &params,
        &grid,
        MomentSelector::SupMoment {
            process: ProcessChoice::Variance,
            order: 2.0,
        },
        50_000,
        42,
        4,
    )?;
    println!("\nE[sup v^2] across refinements:");
    print!("{}", table.to_csv());
    Ok(())
}
