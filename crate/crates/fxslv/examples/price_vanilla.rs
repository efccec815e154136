//! Price a European call under the full 4-factor model and print the
//! JSON report.
//!
//! ```bash
//! cargo run --release --example price_vanilla
//! ```

use std::sync::Arc;

use fxslv::engine::{price, DEFAULT_BATCH_SIZE};
use fxslv::leverage::LeverageSurface;
use fxslv::model::{validate, CirParams, CorrelationMatrix, ModelParams, ShiftFunction};
use fxslv::payoffs::PayoffSpec;
use fxslv::SimGrid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // EURUSD-flavored parameter set: Heston variance, two shifted
    // square-root short rates, spot/vol and spot/rate correlations.
    let params = ModelParams {
        s0: 1.1271,
        variance: CirParams::new(0.04, 1.412, 0.04, 0.299)?,
        domestic: CirParams::new(0.012, 0.35, 0.02, 0.08)?,
        foreign: CirParams::new(0.011, 0.011, 1.166, 0.037)?,
        shift_d: ShiftFunction::new(vec![0.0, 2.0], vec![-0.002, 0.001], 0.01)?,
        shift_f: ShiftFunction::constant(-0.004)?,
        corr: CorrelationMatrix::from_pairs(-0.31, 0.12, -0.08, 0.0, 0.0, 0.05)?,
        leverage: Arc::new(LeverageSurface::constant(1.1)?),
    };

    let report = validate(&params)?;
    println!("model valid: {}", report.is_valid());
    println!(
        "feller (variance/domestic/foreign): {} / {} / {}",
        report.variance_feller.satisfied,
        report.domestic_feller.satisfied,
        report.foreign_feller.satisfied
    );
    for w in &report.warnings {
        println!("warning: {w}");
    }

    let grid = SimGrid::new(2.0, 96)?;
    let spec = PayoffSpec::EuropeanCall { strike: 1.15 };
    let result = price(&params, &grid, &spec, 200_000, 42, DEFAULT_BATCH_SIZE)?;
    println!("{}", result.to_json());
    Ok(())
}
