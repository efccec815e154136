//! Evaluate every closed-form critical maturity for a few calibrated
//! parameter sets: the horizons below which the convergence and calibration
//! guarantees of the scheme hold.
//!
//! ```bash
//! cargo run --example critical_maturities
//! ```

use fxslv::analytics::{
    cir_lambda_for_spot_moment, explosion_time_exact_cir, explosion_time_fte_cir, phi,
    t_star_calibration, t_star_l1, t_star_moments_exact, t_star_moments_fte,
};
use fxslv::model::CirParams;

fn main() {
    println!(
        "{:<28}{:>8}{:>8}{:>11}{:>8}{:>12}{:>14}",
        "calibration", "k", "xi", "sigma_max", "zeta", "T*_L1 (y)", "T*_calib (y)"
    );
    let rows = [
        ("EURUSD 2012, 1m tenor", 0.885, 0.342, 1.600),
        ("EURUSD 2012, 5y tenor", 0.978, 0.499, 1.300),
        ("EURUSD 2016, 5y tenor", 1.412, 0.299, 1.399),
        ("equity-like", 1.977, 0.456, 1.000),
    ];
    for (name, k, xi, sigma_max) in rows {
        let zeta = xi * sigma_max;
        println!(
            "{name:<28}{k:>8.3}{xi:>8.3}{sigma_max:>11.3}{zeta:>8.3}{:>12}{:>14}",
            format!("{:.1}", t_star_l1(k, zeta).value),
            format!("{:.1}", t_star_calibration(k, zeta).value),
        );
    }

    // Moment horizons shrink as the moment order grows, and the scheme's
    // horizon never exceeds the exact one.
    let (k, xi, sigma_max) = (1.412, 0.299, 1.399);
    let zeta = xi * sigma_max;
    println!("\nmoment horizons at k = {k}, zeta = {zeta:.3}:");
    println!("{:>7}{:>10}{:>14}{:>12}", "alpha", "phi(a)", "exact (y)", "scheme (y)");
    for alpha in [1.0, 1.5, 2.0, 3.0, 5.0] {
        println!(
            "{alpha:>7}{:>10.4}{:>14}{:>12}",
            phi(alpha),
            format!("{:.2}", t_star_moments_exact(alpha, k, zeta).value),
            format!("{:.2}", t_star_moments_fte(alpha, k, zeta).value),
        );
    }

    // The same horizons through the variance's exponential functional.
    let cir = CirParams::new(0.04, k, 0.04, xi).expect("valid CIR parameters");
    let lambda = cir_lambda_for_spot_moment(phi(2.0), zeta, xi);
    println!("\nlambda mapped from the second moment: {lambda:.3}");
    println!(
        "exact CIR explosion horizon:  {}",
        explosion_time_exact_cir(&cir, lambda).value
    );
    println!(
        "scheme CIR explosion horizon: {}",
        explosion_time_fte_cir(&cir, lambda).value
    );
}
