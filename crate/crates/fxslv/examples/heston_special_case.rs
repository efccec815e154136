//! With unit leverage and deterministic rates the model collapses to
//! Heston, where a characteristic-function price is available; compare the
//! Monte Carlo estimate against it.
//!
//! ```bash
//! cargo run --release --example heston_special_case
//! ```

use std::sync::Arc;

use fxslv::engine::price;
use fxslv::leverage::LeverageSurface;
use fxslv::model::{CirParams, CorrelationMatrix, ModelParams, ShiftFunction};
use fxslv::payoffs::PayoffSpec;
use fxslv::SimGrid;
use fxslv_oracles::{heston_call, HestonQuote};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (v0, kappa, theta, xi, rho, rd, rf, s0) = (0.04, 1.5, 0.04, 0.4, -0.6, 0.02, 0.01, 1.0);
    let params = ModelParams {
        s0,
        variance: CirParams::new(v0, kappa, theta, xi)?,
        domestic: CirParams::new(rd, 1.0, rd, 0.0)?,
        foreign: CirParams::new(rf, 1.0, rf, 0.0)?,
        shift_d: ShiftFunction::zero(),
        shift_f: ShiftFunction::zero(),
        corr: CorrelationMatrix::from_pairs(rho, 0.0, 0.0, 0.0, 0.0, 0.0)?,
        leverage: Arc::new(LeverageSurface::constant(1.0)?),
    };
    let maturity = 1.0;
    let grid = SimGrid::new(maturity, 128)?;
    println!("{:>8}{:>12}{:>12}{:>12}{:>8}", "strike", "mc", "cf", "stderr", "dev");
    for strike in [0.9, 1.0, 1.1, 1.2] {
        let res = price(
            &params,
            &grid,
            &PayoffSpec::EuropeanCall { strike },
            200_000,
            7,
            16_384,
        )?;
        let cf = heston_call(&HestonQuote {
            v0,
            kappa,
            theta,
            xi,
            rho_sv: rho,
            rate_d: rd,
            rate_f: rf,
            s0,
            strike,
            maturity,
        })?;
        println!(
            "{strike:>8.2}{:>12.6}{cf:>12.6}{:>12.6}{:>8.2}",
            res.estimate,
            res.std_error,
            (res.estimate - cf) / res.std_error
        );
    }
    Ok(())
}
