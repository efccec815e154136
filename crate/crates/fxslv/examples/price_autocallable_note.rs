//! Price an autocallable barrier dual currency note: quarterly coupons, an
//! up-and-out early-redemption barrier and a down-and-in short put, all
//! monitored at monthly fixings.
//!
//! ```bash
//! cargo run --release --example price_autocallable_note
//! ```

use std::sync::Arc;

use fxslv::drivers::{cholesky, fill_block, sample_block};
use fxslv::engine::price;
use fxslv::leverage::LeverageSurface;
use fxslv::model::{CirParams, CorrelationMatrix, ModelParams, ShiftFunction};
use fxslv::payoffs::{AbdcContract, PayoffSpec};
use fxslv::simulator::{empty_record, RecordSpec, SimContext};
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

    // Five-year note; strike and barriers quoted as fractions of the spot,
    // coupons as fractions of the nominal.
    let contract = AbdcContract::from_percent_levels(
        100_000.0, params.s0, 1.05, 1.00, 0.95, 0.025, 0.015, 5,
    )?;
    for w in contract.warnings(params.s0) {
        println!("note: {w}");
    }

    let grid = SimGrid::new(5.0, 96)?;
    let n_paths = 100_000u64;
    let seed = 2016;
    let result = price(
        &params,
        &grid,
        &PayoffSpec::Abdc(contract.clone()),
        n_paths,
        seed,
        16_384,
    )?;
    println!(
        "NPV = {:.4}% of nominal, 95% CI [{:.4}%, {:.4}%]",
        100.0 * result.estimate,
        100.0 * result.ci95.0,
        100.0 * result.ci95.1
    );

    // Early-redemption and knock-in probabilities from the same paths.
    let factor = cholesky(&params.corr)?;
    let ctx = SimContext::new(&params, &grid);
    let fixing_idx: Vec<usize> = contract
        .fixing_dates
        .iter()
        .map(|&d| grid.index_of(d))
        .collect::<fxslv::Result<_>>()?;
    let mut record = empty_record(&grid);
    let mut block = sample_block(seed, 0, &grid, &factor);
    let (mut er, mut ki) = (0u64, 0u64);
    for p in 0..n_paths {
        if p != 0 {
            fill_block(seed, p, &grid, &factor, &mut block);
        }
        ctx.simulate_into(&params, &block, RecordSpec::default(), &mut record)?;
        if fixing_idx.iter().any(|&n| record.spot[n] >= contract.b_uo) {
            er += 1;
        }
        if fixing_idx.iter().any(|&n| record.spot[n] <= contract.b_di) {
            ki += 1;
        }
    }
    println!(
        "early redemption prob = {:.1}%, knock-in prob = {:.1}%",
        100.0 * er as f64 / n_paths as f64,
        100.0 * ki as f64 / n_paths as f64
    );
    Ok(())
}
