//! Leverage function sigma(t, x): bounded grid surface with clamped bilinear
//! interpolation, plus conditional-expectation estimators that recover the
//! leverage from a particle cloud at a fixed maturity.
//!
//! Flat extrapolation outside the grid is what makes the surface globally
//! Lipschitz, so the regularity assumptions of the convergence analysis hold
//! with Holder exponent 1 by construction.

use std::fmt::Write as _;

use crate::error::{Result, SlvError};

/// Bounded leverage surface on a rectangular (time, spot) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LeverageSurface {
    t_knots: Vec<f64>,
    x_knots: Vec<f64>,
    /// Row-major: `values[i * n_x + j]` is sigma(t_knots[i], x_knots[j]).
    values: Vec<f64>,
    sigma_max: f64,
    lipschitz_b: f64,
    holder_a: f64,
}

impl LeverageSurface {
    pub fn new(t_knots: Vec<f64>, x_knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if t_knots.is_empty() || x_knots.is_empty() {
            return Err(SlvError::InvalidParameter(
                "leverage surface needs at least one knot per axis".into(),
            ));
        }
        if values.len() != t_knots.len() * x_knots.len() {
            return Err(SlvError::InvalidParameter(format!(
                "leverage surface expects {} values, got {}",
                t_knots.len() * x_knots.len(),
                values.len()
            )));
        }
        for &t in &t_knots {
            if !t.is_finite() {
                return Err(SlvError::NonFiniteParameter("leverage t knot".into()));
            }
        }
        for &x in &x_knots {
            if !x.is_finite() {
                return Err(SlvError::NonFiniteParameter("leverage x knot".into()));
            }
        }
        if t_knots.windows(2).any(|w| w[0] >= w[1]) || x_knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SlvError::InvalidParameter(
                "leverage knots must be strictly increasing".into(),
            ));
        }
        let mut sigma_max = 0.0f64;
        for &v in &values {
            if !v.is_finite() {
                return Err(SlvError::NonFiniteParameter("leverage value".into()));
            }
            if v < 0.0 {
                return Err(SlvError::InvalidParameter(format!(
                    "leverage values must be non-negative, got {v}"
                )));
            }
            sigma_max = sigma_max.max(v);
        }

        let n_x = x_knots.len();
        let mut lipschitz_b = 0.0f64;
        let mut holder_a = 0.0f64;
        for i in 0..t_knots.len() {
            for j in 0..n_x {
                if j + 1 < n_x {
                    let slope = (values[i * n_x + j + 1] - values[i * n_x + j]).abs()
                        / (x_knots[j + 1] - x_knots[j]);
                    lipschitz_b = lipschitz_b.max(slope);
                }
                if i + 1 < t_knots.len() {
                    let slope = (values[(i + 1) * n_x + j] - values[i * n_x + j]).abs()
                        / (t_knots[i + 1] - t_knots[i]);
                    holder_a = holder_a.max(slope);
                }
            }
        }

        Ok(Self {
            t_knots,
            x_knots,
            values,
            sigma_max,
            lipschitz_b,
            holder_a,
        })
    }

    /// Surface that is identically `value`.
    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![1.0], vec![value])
    }

    /// Smallest upper bound on the surface: the supremum over grid values.
    /// Clamped bilinear interpolation can never exceed it.
    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// Lipschitz modulus in the spot direction implied by the grid.
    pub fn lipschitz_b(&self) -> f64 {
        self.lipschitz_b
    }

    /// Modulus in the time direction implied by the grid.
    pub fn holder_a(&self) -> f64 {
        self.holder_a
    }

    pub fn t_knots(&self) -> &[f64] {
        &self.t_knots
    }

    pub fn x_knots(&self) -> &[f64] {
        &self.x_knots
    }

    /// True when a single stored value covers the whole surface; the
    /// simulation loop takes a cheaper path in that case.
    pub fn is_constant(&self) -> bool {
        self.values.len() == 1
    }

    #[inline]
    fn segment(knots: &[f64], q: f64) -> (usize, f64) {
        let last = knots.len() - 1;
        if q <= knots[0] || last == 0 {
            return (0, 0.0);
        }
        if q >= knots[last] {
            return (last - 1, 1.0);
        }
        let hi = knots.partition_point(|&k| k <= q);
        let lo = hi - 1;
        let w = (q - knots[lo]) / (knots[hi] - knots[lo]);
        (lo, w)
    }

    /// sigma at `(t, x)`: bilinear interpolation at the point clamped into
    /// the grid rectangle. Total on positive reals and bounded by
    /// [`Self::sigma_max`].
    #[inline]
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        if self.values.len() == 1 {
            return self.values[0];
        }
        let n_x = self.x_knots.len();
        let (i, wt) = Self::segment(&self.t_knots, t);
        let (j, wx) = Self::segment(&self.x_knots, x);
        if n_x == 1 {
            let lo = self.values[i];
            let hi = self.values[i + 1];
            return lo + wt * (hi - lo);
        }
        let row = i * n_x + j;
        let v00 = self.values[row];
        let v01 = self.values[row + 1];
        let lo = v00 + wx * (v01 - v00);
        if self.t_knots.len() == 1 {
            return lo;
        }
        let row2 = (i + 1) * n_x + j;
        let v10 = self.values[row2];
        let v11 = self.values[row2 + 1];
        let hi = v10 + wx * (v11 - v10);
        lo + wt * (hi - lo)
    }

    /// Plain-text table encoding: a header row with the spot knots, then one
    /// row per time knot (the knot followed by the sigma values). Numbers are
    /// written with 17 significant digits so the round-trip is bit-exact.
    pub fn to_table_string(&self) -> String {
        let mut out = String::new();
        let mut header = String::new();
        for (j, x) in self.x_knots.iter().enumerate() {
            if j > 0 {
                header.push(' ');
            }
            let _ = write!(header, "{x:.16e}");
        }
        out.push_str(&header);
        out.push('\n');
        let n_x = self.x_knots.len();
        for (i, t) in self.t_knots.iter().enumerate() {
            let _ = write!(out, "{t:.16e}");
            for j in 0..n_x {
                let _ = write!(out, " {:.16e}", self.values[i * n_x + j]);
            }
            out.push('\n');
        }
        out
    }

    /// Parses the encoding produced by [`Self::to_table_string`].
    pub fn from_table_string(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| SlvError::Parse("empty leverage table".into()))?;
        let x_knots = parse_row(header)?;
        let n_x = x_knots.len();
        let mut t_knots = Vec::new();
        let mut values = Vec::new();
        for line in lines {
            let row = parse_row(line)?;
            if row.len() != n_x + 1 {
                return Err(SlvError::Parse(format!(
                    "leverage table row has {} fields, expected {}",
                    row.len(),
                    n_x + 1
                )));
            }
            t_knots.push(row[0]);
            values.extend_from_slice(&row[1..]);
        }
        Self::new(t_knots, x_knots, values)
    }
}

fn parse_row(line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|e| SlvError::Parse(format!("bad number {tok:?}: {e}")))
        })
        .collect()
}

/// Per-particle state at one fixed maturity, as produced by a simulation of
/// the model up to that date.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParticleCloud {
    pub spot: Vec<f64>,
    pub variance: Vec<f64>,
    /// Realized domestic discount factor per particle.
    pub discount_d: Vec<f64>,
    pub rate_d: Vec<f64>,
    pub rate_f: Vec<f64>,
    /// Particle weights; uniform when empty.
    pub weights: Vec<f64>,
}

impl ParticleCloud {
    pub fn len(&self) -> usize {
        self.spot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spot.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.spot.len();
        let sizes_ok = self.variance.len() == n
            && self.discount_d.len() == n
            && self.rate_d.len() == n
            && self.rate_f.len() == n
            && (self.weights.is_empty() || self.weights.len() == n);
        if !sizes_ok {
            return Err(SlvError::InvalidParameter(
                "particle cloud columns have inconsistent lengths".into(),
            ));
        }
        if self.spot.iter().any(|&s| !(s > 0.0)) || self.discount_d.iter().any(|&d| !(d > 0.0)) {
            return Err(SlvError::InvalidParameter(
                "particle spots and discounts must be positive".into(),
            ));
        }
        Ok(())
    }

    #[inline]
    fn weight(&self, i: usize) -> f64 {
        if self.weights.is_empty() {
            1.0
        } else {
            self.weights[i]
        }
    }
}

/// Configuration of the equal-population binning behind the conditional
/// expectations `E[. | S_T = K]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinConfig {
    /// Minimum particles per bin; the bin size is `max(min_bin, n / 100)`.
    pub min_bin: usize,
}

impl Default for BinConfig {
    fn default() -> Self {
        Self { min_bin: 50 }
    }
}

/// Indices (into the cloud) of the bin containing the strike, under
/// equal-population binning of the particles sorted by spot.
fn strike_bin(cloud: &ParticleCloud, strike: f64, config: &BinConfig) -> Result<Vec<usize>> {
    let n = cloud.len();
    let bin_size = config.min_bin.max(n / 100);
    if n < config.min_bin.max(1) {
        return Err(SlvError::InsufficientParticles {
            found: n,
            required: config.min_bin.max(1),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cloud.spot[a].total_cmp(&cloud.spot[b]));
    let n_bins = (n / bin_size).max(1);
    let rank = order.partition_point(|&i| cloud.spot[i] < strike);
    let bin = (rank / bin_size).min(n_bins - 1);
    let lo = bin * bin_size;
    let hi = if bin + 1 == n_bins { n } else { lo + bin_size };
    Ok(order[lo..hi].to_vec())
}

fn weighted_mean(cloud: &ParticleCloud, idx: &[usize], f: impl Fn(usize) -> f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for &i in idx {
        let w = cloud.weight(i);
        num += w * f(i);
        den += w;
    }
    num / den
}

fn weighted_mean_all(cloud: &ParticleCloud, f: impl Fn(usize) -> f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..cloud.len() {
        let w = cloud.weight(i);
        num += w * f(i);
        den += w;
    }
    num / den
}

/// Leverage estimator for the deterministic-rates case:
/// `sigma(T, K) = sigma_LV / sqrt(E[v_T | S_T = K])`, with the conditional
/// expectation taken over the strike's spot bin.
pub fn estimate_leverage_det_rates(
    cloud: &ParticleCloud,
    sigma_lv: f64,
    strike: f64,
    config: &BinConfig,
) -> Result<f64> {
    cloud.validate()?;
    if sigma_lv == 0.0 {
        return Ok(0.0);
    }
    let bin = strike_bin(cloud, strike, config)?;
    let cond_var = weighted_mean(cloud, &bin, |i| cloud.variance[i]);
    Ok(sigma_lv / cond_var.sqrt())
}

/// Market-side inputs to the full leverage formula at one `(T, K)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketTerms {
    /// Market instantaneous forward domestic rate at the maturity.
    pub forward_rate_d: f64,
    /// Market instantaneous forward foreign rate at the maturity.
    pub forward_rate_f: f64,
    /// Strike density of the local-volatility call price,
    /// `d2 C_LV / dK2` at `(T, K)`; must be positive.
    pub call_density: f64,
}

/// Full stochastic-rates leverage estimator; returns `sigma^2(T, K)`.
///
/// Implements the conditional-expectation characterization verbatim: the
/// discount-weighted variance ratio times the local-volatility variance plus
/// the short-rate correction terms, with conditional expectations estimated
/// on the strike's spot bin and unconditional ones as plain sample means.
pub fn estimate_leverage_full(
    cloud: &ParticleCloud,
    sigma_lv: f64,
    strike: f64,
    market: &MarketTerms,
    config: &BinConfig,
) -> Result<f64> {
    cloud.validate()?;
    if !(market.call_density > 0.0) {
        return Err(SlvError::NonPositiveDensity);
    }
    let bin = strike_bin(cloud, strike, config)?;
    let cond_d = weighted_mean(cloud, &bin, |i| cloud.discount_d[i]);
    let cond_dv = weighted_mean(cloud, &bin, |i| cloud.discount_d[i] * cloud.variance[i]);

    let excess_f = |i: usize| cloud.rate_f[i] - market.forward_rate_f;
    let excess_d = |i: usize| cloud.rate_d[i] - market.forward_rate_d;
    let term_call = weighted_mean_all(cloud, |i| {
        cloud.discount_d[i] * excess_f(i) * (cloud.spot[i] - strike).max(0.0)
    });
    let term_dig_d = weighted_mean_all(cloud, |i| {
        if cloud.spot[i] >= strike {
            cloud.discount_d[i] * excess_d(i)
        } else {
            0.0
        }
    });
    let term_dig_f = weighted_mean_all(cloud, |i| {
        if cloud.spot[i] >= strike {
            cloud.discount_d[i] * excess_f(i)
        } else {
            0.0
        }
    });

    let correction = 2.0 / (strike * strike * market.call_density)
        * (term_call - strike * term_dig_d + strike * term_dig_f);
    Ok(cond_d / cond_dv * (sigma_lv * sigma_lv + correction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(rng: &mut ChaCha8Rng) -> f64 {
        ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    fn sample_surface() -> LeverageSurface {
        LeverageSurface::new(
            vec![0.0, 1.0],
            vec![0.8, 1.2],
            vec![1.0, 2.0, 3.0, 4.0],
        )
        .unwrap()
    }

    #[test]
    fn constant_surface_evaluates_to_the_constant_everywhere() {
        let s = LeverageSurface::constant(1.399).unwrap();
        for (t, x) in [(0.0, 0.5), (3.0, 1.0), (100.0, 1e6), (0.1, 1e-9)] {
            assert_eq!(s.eval(t, x), 1.399);
        }
        assert_eq!(s.sigma_max(), 1.399);
    }

    #[test]
    fn evaluation_clamps_outside_the_grid() {
        let s = sample_surface();
        assert_eq!(s.eval(0.0, 2.4), s.eval(0.0, 1.2));
        assert_eq!(s.eval(0.0, 0.1), s.eval(0.0, 0.8));
        assert_eq!(s.eval(5.0, 1.0), s.eval(1.0, 1.0));
        // Exact clamp identity on random points.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let t = uniform(&mut rng) * 4.0 - 1.0;
            let x = uniform(&mut rng) * 3.0;
            let tc = t.clamp(0.0, 1.0);
            let xc = x.clamp(0.8, 1.2);
            assert_eq!(s.eval(t, x), s.eval(tc, xc));
        }
    }

    #[test]
    fn midcell_bilinear_value_is_the_corner_average() {
        let s = sample_surface();
        // Cell corners (1, 2; 3, 4) at the center interpolate to 2.5.
        assert_relative_eq!(s.eval(0.5, 1.0), 2.5, epsilon = 1e-15);
    }

    #[test]
    fn sigma_max_is_the_grid_supremum() {
        assert_eq!(sample_surface().sigma_max(), 4.0);
        let zero = LeverageSurface::new(vec![0.0], vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(zero.sigma_max(), 0.0);
        // Exhaustive-scan oracle on a random surface.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let t: Vec<f64> = (0..4).map(|i| i as f64 * 0.5).collect();
        let x: Vec<f64> = (0..6).map(|j| 0.5 + j as f64 * 0.25).collect();
        let vals: Vec<f64> = (0..24).map(|_| uniform(&mut rng) * 2.0).collect();
        let max = vals.iter().cloned().fold(0.0f64, f64::max);
        let s = LeverageSurface::new(t, x, vals).unwrap();
        assert_eq!(s.sigma_max(), max);
        // Interpolation never exceeds the supremum.
        for _ in 0..500 {
            let tv = uniform(&mut rng) * 3.0;
            let xv = uniform(&mut rng) * 3.0;
            assert!(s.eval(tv, xv) <= max + 1e-12);
        }
    }

    #[test]
    fn eval_is_lipschitz_with_the_computed_modulus() {
        let s = sample_surface();
        let b = s.lipschitz_b();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let t = uniform(&mut rng) * 1.5;
            let x = uniform(&mut rng) * 2.0;
            let y = uniform(&mut rng) * 2.0;
            let lhs = (s.eval(t, x) - s.eval(t, y)).abs();
            assert!(lhs <= b * (x - y).abs() + 1e-12);
        }
    }

    #[test]
    fn table_round_trip_is_bit_exact() {
        let s = LeverageSurface::new(
            vec![0.0, 0.123456789012345678, 2.0],
            vec![0.9, 1.0 + 1e-13],
            vec![1.0 / 3.0, 0.1, 1.4e-3, 0.77, 1.0, 0.333333333333333314],
        )
        .unwrap();
        let text = s.to_table_string();
        let back = LeverageSurface::from_table_string(&text).unwrap();
        assert_eq!(s, back);
    }

    fn synthetic_cloud(n: usize, seed: u64) -> ParticleCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cloud = ParticleCloud::default();
        for _ in 0..n {
            let s = 0.8 + 0.6 * uniform(&mut rng);
            let v = 0.02 + 0.04 * uniform(&mut rng);
            cloud.spot.push(s);
            cloud.variance.push(v);
            cloud.discount_d.push(1.0);
            cloud.rate_d.push(0.0);
            cloud.rate_f.push(0.0);
        }
        cloud
    }

    #[test]
    fn constant_variance_cloud_recovers_sigma_lv_over_sqrt_v() {
        let mut cloud = synthetic_cloud(5000, 1);
        cloud.variance.iter_mut().for_each(|v| *v = 0.04);
        let cfg = BinConfig::default();
        for k in [0.5, 1.0, 1.9] {
            let est = estimate_leverage_det_rates(&cloud, 0.3, k, &cfg).unwrap();
            assert_relative_eq!(est, 0.3 / 0.04f64.sqrt(), epsilon = 1e-12);
        }
        assert_eq!(
            estimate_leverage_det_rates(&cloud, 0.0, 1.0, &cfg).unwrap(),
            0.0
        );
    }

    #[test]
    fn independent_variance_matches_the_unconditional_mean() {
        // v independent of S: the conditional mean at any strike estimates
        // the grand mean; tolerance is three delta-method standard errors.
        let cloud = synthetic_cloud(200_000, 2);
        let cfg = BinConfig::default();
        let n = cloud.len() as f64;
        let mean_v = cloud.variance.iter().sum::<f64>() / n;
        let var_v = cloud
            .variance
            .iter()
            .map(|v| (v - mean_v).powi(2))
            .sum::<f64>()
            / n;
        let bin_n = (cloud.len() / 100).max(50) as f64;
        let sigma_lv = 0.25;
        let expected = sigma_lv / mean_v.sqrt();
        // d(sigma_lv / sqrt(m)) / dm = -expected / (2 m).
        let stderr = expected / (2.0 * mean_v) * (var_v / bin_n).sqrt();
        let est = estimate_leverage_det_rates(&cloud, sigma_lv, 1.1, &cfg).unwrap();
        assert!(
            (est - expected).abs() <= 3.0 * stderr,
            "est {est}, expected {expected}, stderr {stderr}"
        );
    }

    #[test]
    fn estimator_is_invariant_under_particle_permutation() {
        let cloud = synthetic_cloud(4000, 3);
        let cfg = BinConfig::default();
        let a = estimate_leverage_det_rates(&cloud, 0.2, 1.05, &cfg).unwrap();
        let mut permuted = ParticleCloud::default();
        let mut order: Vec<usize> = (0..cloud.len()).collect();
        // Deterministic shuffle.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for i in (1..order.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            order.swap(i, j);
        }
        for &i in &order {
            permuted.spot.push(cloud.spot[i]);
            permuted.variance.push(cloud.variance[i]);
            permuted.discount_d.push(cloud.discount_d[i]);
            permuted.rate_d.push(cloud.rate_d[i]);
            permuted.rate_f.push(cloud.rate_f[i]);
        }
        let b = estimate_leverage_det_rates(&permuted, 0.2, 1.05, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monotone_variance_in_spot_gives_monotone_leverage() {
        // v decreasing in S implies the estimated sigma(T, .) increases.
        let mut cloud = ParticleCloud::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20_000 {
            let s = 0.8 + 0.6 * uniform(&mut rng);
            cloud.spot.push(s);
            cloud.variance.push(0.09 - 0.05 * (s - 0.8) / 0.6);
            cloud.discount_d.push(1.0);
            cloud.rate_d.push(0.0);
            cloud.rate_f.push(0.0);
        }
        let cfg = BinConfig::default();
        let strikes = [0.85, 0.95, 1.05, 1.15, 1.3];
        let mut prev = 0.0;
        for k in strikes {
            let est = estimate_leverage_det_rates(&cloud, 0.2, k, &cfg).unwrap();
            assert!(est > prev, "not monotone at K = {k}: {est} <= {prev}");
            prev = est;
        }
    }

    #[test]
    fn too_small_bins_are_reported() {
        let cloud = synthetic_cloud(20, 5);
        let cfg = BinConfig::default();
        match estimate_leverage_det_rates(&cloud, 0.2, 1.0, &cfg) {
            Err(SlvError::InsufficientParticles { found, required }) => {
                assert_eq!(found, 20);
                assert_eq!(required, 50);
            }
            other => panic!("expected insufficient particles, got {other:?}"),
        }
    }

    #[test]
    fn full_estimator_collapses_under_deterministic_rates() {
        // r == f and a constant discount: all correction terms vanish and
        // the full estimator equals the square of the det-rates one.
        let mut cloud = synthetic_cloud(8000, 6);
        let r = 0.015;
        cloud.rate_d.iter_mut().for_each(|x| *x = r);
        cloud.rate_f.iter_mut().for_each(|x| *x = 0.005);
        cloud.discount_d.iter_mut().for_each(|x| *x = 0.97);
        let market = MarketTerms {
            forward_rate_d: r,
            forward_rate_f: 0.005,
            call_density: 1.3,
        };
        let cfg = BinConfig::default();
        for k in [0.9, 1.0, 1.2] {
            let full = estimate_leverage_full(&cloud, 0.22, k, &market, &cfg).unwrap();
            let det = estimate_leverage_det_rates(&cloud, 0.22, k, &cfg).unwrap();
            assert_relative_eq!(full, det * det, epsilon = 1e-12);
        }
    }

    #[test]
    fn full_estimator_with_constant_variance_and_rates() {
        let mut cloud = synthetic_cloud(6000, 7);
        cloud.variance.iter_mut().for_each(|v| *v = 0.09);
        cloud.rate_d.iter_mut().for_each(|x| *x = 0.01);
        cloud.rate_f.iter_mut().for_each(|x| *x = 0.02);
        let market = MarketTerms {
            forward_rate_d: 0.01,
            forward_rate_f: 0.02,
            call_density: 2.0,
        };
        let full =
            estimate_leverage_full(&cloud, 0.3, 1.0, &market, &BinConfig::default()).unwrap();
        assert_relative_eq!(full, 0.09 / 0.09, epsilon = 1e-12);
    }

    #[test]
    fn full_estimator_matches_direct_sample_means() {
        // Known joint law: v independent of S, stochastic rates correlated
        // with nothing. The oracle recomputes every expectation term with
        // plain loops and global (unbinned) conditional means, valid here
        // because v and the rates are independent of S.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut cloud = ParticleCloud::default();
        let n = 400_000;
        for _ in 0..n {
            cloud.spot.push(0.7 + 0.8 * uniform(&mut rng));
            cloud.variance.push(0.02 + 0.06 * uniform(&mut rng));
            cloud.discount_d.push(0.9 + 0.08 * uniform(&mut rng));
            cloud.rate_d.push(0.01 + 0.02 * uniform(&mut rng));
            cloud.rate_f.push(0.005 + 0.01 * uniform(&mut rng));
        }
        let market = MarketTerms {
            forward_rate_d: 0.02,
            forward_rate_f: 0.01,
            call_density: 1.7,
        };
        let k = 1.1;
        let sigma_lv = 0.24;

        let nf = n as f64;
        let mean = |f: &dyn Fn(usize) -> f64| (0..n).map(f).sum::<f64>() / nf;
        let e_d = mean(&|i| cloud.discount_d[i]);
        let e_dv = mean(&|i| cloud.discount_d[i] * cloud.variance[i]);
        let t1 = mean(&|i| {
            cloud.discount_d[i] * (cloud.rate_f[i] - market.forward_rate_f)
                * (cloud.spot[i] - k).max(0.0)
        });
        let t2 = mean(&|i| {
            if cloud.spot[i] >= k {
                cloud.discount_d[i] * (cloud.rate_d[i] - market.forward_rate_d)
            } else {
                0.0
            }
        });
        let t3 = mean(&|i| {
            if cloud.spot[i] >= k {
                cloud.discount_d[i] * (cloud.rate_f[i] - market.forward_rate_f)
            } else {
                0.0
            }
        });
        let oracle = e_d / e_dv
            * (sigma_lv * sigma_lv
                + 2.0 / (k * k * market.call_density) * (t1 - k * t2 + k * t3));

        let est =
            estimate_leverage_full(&cloud, sigma_lv, k, &market, &BinConfig::default()).unwrap();
        // The only statistical difference is binned-vs-global conditional
        // means; bound it by three standard errors of the bin means.
        let bin_n = (n / 100) as f64;
        let sd_dv = {
            let m = e_dv;
            (0..n)
                .map(|i| (cloud.discount_d[i] * cloud.variance[i] - m).powi(2))
                .sum::<f64>()
                / nf
        }
        .sqrt();
        let deriv = (oracle / e_dv).abs();
        let tol = 3.0 * deriv * sd_dv / bin_n.sqrt() * 2.0;
        assert!(
            (est - oracle).abs() <= tol,
            "est {est}, oracle {oracle}, tol {tol}"
        );
    }

    #[test]
    fn non_positive_density_is_rejected() {
        let cloud = synthetic_cloud(1000, 9);
        let market = MarketTerms {
            forward_rate_d: 0.0,
            forward_rate_f: 0.0,
            call_density: 0.0,
        };
        assert_eq!(
            estimate_leverage_full(&cloud, 0.2, 1.0, &market, &BinConfig::default()),
            Err(SlvError::NonPositiveDensity)
        );
    }
}
