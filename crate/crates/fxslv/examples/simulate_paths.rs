//! Simulate a handful of joint paths and dump them as CSV
//! (columns: path, t, S, v, gd, gf) for eyeballing or plotting.
//!
//! ```bash
//! cargo run --example simulate_paths > paths.csv
//! ```

use std::sync::Arc;

use fxslv::drivers::{cholesky, sample_block};
use fxslv::leverage::LeverageSurface;
use fxslv::model::{CirParams, CorrelationMatrix, ModelParams, ShiftFunction};
use fxslv::simulator::{simulate_path, write_paths_csv, RecordSpec};
use fxslv::SimGrid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ModelParams {
        s0: 1.1271,
        variance: CirParams::new(0.04, 1.412, 0.04, 0.299)?,
        domestic: CirParams::new(0.015, 0.4, 0.02, 0.1)?,
        foreign: CirParams::new(0.01, 0.3, 0.015, 0.08)?,
        shift_d: ShiftFunction::constant(0.002)?,
        shift_f: ShiftFunction::zero(),
        corr: CorrelationMatrix::from_pairs(-0.31, 0.1, -0.08, 0.0, 0.0, 0.0)?,
        leverage: Arc::new(LeverageSurface::constant(1.1)?),
    };
    let grid = SimGrid::new(1.0, 52)?;
    let factor = cholesky(&params.corr)?;
    let records: Vec<_> = (0..5)
        .map(|p| {
            let block = sample_block(123, p, &grid, &factor);
            simulate_path(&params, &grid, &block, RecordSpec::all())
        })
        .collect::<fxslv::Result<_>>()?;
    write_paths_csv(&mut std::io::stdout().lock(), &records)?;
    Ok(())
}
