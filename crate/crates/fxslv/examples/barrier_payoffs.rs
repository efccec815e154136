//! Price the barrier family and demonstrate the pathwise in/out parity on
//! shared paths: knock-in plus knock-out equals the vanilla exactly.
//!
//! ```bash
//! cargo run --release --example barrier_payoffs
//! ```

use std::sync::Arc;

use fxslv::engine::price;
use fxslv::leverage::LeverageSurface;
use fxslv::model::{CirParams, CorrelationMatrix, ModelParams, ShiftFunction};
use fxslv::payoffs::{AveragingMode, BarrierKind, OptionKind, PayoffSpec};
use fxslv::SimGrid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ModelParams {
        s0: 1.1271,
        variance: CirParams::new(0.04, 1.412, 0.04, 0.299)?,
        domestic: CirParams::new(0.015, 0.4, 0.02, 0.1)?,
        foreign: CirParams::new(0.01, 0.3, 0.015, 0.08)?,
        shift_d: ShiftFunction::zero(),
        shift_f: ShiftFunction::zero(),
        corr: CorrelationMatrix::from_pairs(-0.31, 0.0, 0.0, 0.0, 0.0, 0.0)?,
        leverage: Arc::new(LeverageSurface::constant(1.1)?),
    };
    let grid = SimGrid::new(1.0, 96)?;
    let monitors: Vec<f64> = (1..=12).map(|m| f64::from(m) / 12.0).collect();
    let (n_paths, seed) = (200_000u64, 9u64);
    let strike = 1.1271;
    let barrier = 1.25;

    let run = |spec: PayoffSpec| price(&params, &grid, &spec, n_paths, seed, 16_384);
    let uo = run(PayoffSpec::Barrier {
        kind: BarrierKind::UpAndOut,
        option: OptionKind::Call,
        strike,
        barrier,
        monitoring_dates: monitors.clone(),
    })?;
    let ui = run(PayoffSpec::Barrier {
        kind: BarrierKind::UpAndIn,
        option: OptionKind::Call,
        strike,
        barrier,
        monitoring_dates: monitors.clone(),
    })?;
    let vanilla = run(PayoffSpec::EuropeanCall { strike })?;
    println!("up-and-out call:  {:.6} +/- {:.6}", uo.estimate, uo.std_error);
    println!("up-and-in call:   {:.6} +/- {:.6}", ui.estimate, ui.std_error);
    println!("vanilla call:     {:.6} +/- {:.6}", vanilla.estimate, vanilla.std_error);
    println!(
        "in + out - vanilla (shared paths): {:+.2e}",
        uo.estimate + ui.estimate - vanilla.estimate
    );

    let dko = run(PayoffSpec::DoubleKnockOutCall {
        strike,
        lower: 1.0,
        upper: 1.3,
        monitoring_dates: monitors.clone(),
    })?;
    println!("double knock-out: {:.6} +/- {:.6}", dko.estimate, dko.std_error);

    let asian = run(PayoffSpec::AsianFixed {
        strike,
        option: OptionKind::Call,
        fixing_dates: monitors,
        averaging: AveragingMode::Discrete,
    })?;
    println!(
        "asian call:       {:.6} +/- {:.6} (averaging dampens the premium)",
        asian.estimate, asian.std_error
    );
    Ok(())
}
