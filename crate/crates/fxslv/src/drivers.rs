//! Correlated Gaussian increments on an evenly spaced time grid.
//!
//! Increments are generated from counter-style substreams keyed by
//! `(seed, batch_index)`, so a block is a pure function of its key and the
//! result never depends on worker count or call order. Normal variates come
//! from the inverse CDF applied to a high-quality uniform stream, which keeps
//! every stream position deterministic (no rejection steps) and leaves a
//! low-discrepancy upgrade path open.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SlvError};
use crate::model::CorrelationMatrix;

/// Pivot tolerance of the Cholesky factorization: pivots below `-PIVOT_TOL`
/// reject the matrix, pivots in `[-PIVOT_TOL, 0]` are clamped to zero.
pub const PIVOT_TOL: f64 = 1e-12;

/// Relative tolerance when matching payoff dates to grid points.
const DATE_TOL: f64 = 1e-9;

/// Evenly spaced simulation grid `t_n = n * dt`, `N * dt = T`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimGrid {
    maturity: f64,
    steps_per_year: u32,
    n_steps: usize,
    dt: f64,
}

impl SimGrid {
    /// Builds a grid with `round(maturity * steps_per_year)` steps.
    pub fn new(maturity: f64, steps_per_year: u32) -> Result<Self> {
        if !maturity.is_finite() || maturity <= 0.0 {
            return Err(SlvError::InvalidParameter(format!(
                "maturity must be positive and finite, got {maturity}"
            )));
        }
        if steps_per_year == 0 {
            return Err(SlvError::InvalidParameter(
                "steps_per_year must be positive".into(),
            ));
        }
        let n_steps = (maturity * f64::from(steps_per_year)).round().max(1.0) as usize;
        Ok(Self {
            maturity,
            steps_per_year,
            n_steps,
            dt: maturity / n_steps as f64,
        })
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn steps_per_year(&self) -> u32 {
        self.steps_per_year
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Time of grid point `n`.
    pub fn time_at(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// Grid index of a calendar date, or an error when the date does not lie
    /// on the grid (relative tolerance 1e-9).
    pub fn index_of(&self, date: f64) -> Result<usize> {
        if !date.is_finite() || date < 0.0 || date > self.maturity * (1.0 + DATE_TOL) {
            return Err(SlvError::DateNotOnGrid(date));
        }
        let n = (date / self.dt).round() as usize;
        let n = n.min(self.n_steps);
        if (self.time_at(n) - date).abs() <= DATE_TOL * date.abs().max(1.0) {
            Ok(n)
        } else {
            Err(SlvError::DateNotOnGrid(date))
        }
    }
}

/// Lower-triangular factor `L` with `L L^T` equal to a correlation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationFactor {
    l: [[f64; 4]; 4],
}

impl CorrelationFactor {
    pub fn lower(&self) -> &[[f64; 4]; 4] {
        &self.l
    }

    /// Applies `L` to a standard-normal vector in place.
    #[inline]
    pub fn correlate(&self, z: [f64; 4]) -> [f64; 4] {
        [
            self.l[0][0] * z[0],
            self.l[1][0] * z[0] + self.l[1][1] * z[1],
            self.l[2][0] * z[0] + self.l[2][1] * z[1] + self.l[2][2] * z[2],
            self.l[3][0] * z[0] + self.l[3][1] * z[1] + self.l[3][2] * z[2] + self.l[3][3] * z[3],
        ]
    }
}

/// Cholesky factorization of a correlation matrix with pivot clamping.
///
/// Fails with "matrix not PSD" when a pivot drops below `-1e-12`; pivots in
/// `[-1e-12, 0]` are treated as exact zeros, in which case the remainder of
/// the column is zeroed (the semi-definite case).
pub fn cholesky(corr: &CorrelationMatrix) -> Result<CorrelationFactor> {
    let a = corr.entries();
    let mut l = [[0.0f64; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum < -PIVOT_TOL {
                    return Err(SlvError::NotPsd);
                }
                l[i][j] = sum.max(0.0).sqrt();
            } else if l[j][j] > 0.0 {
                l[i][j] = sum / l[j][j];
            } else {
                l[i][j] = 0.0;
            }
        }
    }
    Ok(CorrelationFactor { l })
}

/// One path's worth of correlated Brownian increments: `n_steps` rows in the
/// factor order (spot, variance, domestic, foreign), each row distributed
/// `N(0, dt)` marginally with cross-covariance `corr * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementBlock {
    values: Vec<[f64; 4]>,
    seed: u64,
    batch_index: u64,
}

impl IncrementBlock {
    pub fn n_steps(&self) -> usize {
        self.values.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn batch_index(&self) -> u64 {
        self.batch_index
    }

    #[inline]
    pub fn row(&self, n: usize) -> &[f64; 4] {
        &self.values[n]
    }

    pub fn rows(&self) -> &[[f64; 4]] {
        &self.values
    }

    /// Sums consecutive groups of `ratio` rows, producing the increments of
    /// the grid coarsened by that factor. Used by coupled-refinement studies.
    pub fn coarsen(&self, ratio: usize) -> Result<IncrementBlock> {
        if ratio == 0 || self.values.len() % ratio != 0 {
            return Err(SlvError::DatesNotAlignable(format!(
                "cannot coarsen {} steps by a factor of {ratio}",
                self.values.len()
            )));
        }
        let mut values = Vec::with_capacity(self.values.len() / ratio);
        for chunk in self.values.chunks_exact(ratio) {
            let mut acc = [0.0; 4];
            for row in chunk {
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += v;
                }
            }
            values.push(acc);
        }
        Ok(IncrementBlock {
            values,
            seed: self.seed,
            batch_index: self.batch_index,
        })
    }
}

/// Uniform in the open interval (0, 1) from 53 random bits.
#[inline]
fn uniform_open01(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal quantile function via statrs' `erfc_inv`; relative error
/// stays at the few-ulp level across the whole open unit interval.
#[inline]
pub fn inverse_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p)
}

/// Generates the increment block for one substream. Pure in
/// `(seed, batch_index, grid, factor)`.
pub fn sample_block(
    seed: u64,
    batch_index: u64,
    grid: &SimGrid,
    factor: &CorrelationFactor,
) -> IncrementBlock {
    let mut block = IncrementBlock {
        values: Vec::new(),
        seed,
        batch_index,
    };
    fill_block(seed, batch_index, grid, factor, &mut block);
    block
}

/// Re-fills an existing block in place, reusing its allocation.
pub fn fill_block(
    seed: u64,
    batch_index: u64,
    grid: &SimGrid,
    factor: &CorrelationFactor,
    block: &mut IncrementBlock,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch_index);
    let sqrt_dt = grid.dt().sqrt();
    block.seed = seed;
    block.batch_index = batch_index;
    block.values.clear();
    block.values.reserve(grid.n_steps());
    for _ in 0..grid.n_steps() {
        let z = [
            inverse_normal_cdf(uniform_open01(rng.next_u64())),
            inverse_normal_cdf(uniform_open01(rng.next_u64())),
            inverse_normal_cdf(uniform_open01(rng.next_u64())),
            inverse_normal_cdf(uniform_open01(rng.next_u64())),
        ];
        let mut w = factor.correlate(z);
        for v in &mut w {
            *v *= sqrt_dt;
        }
        block.values.push(w);
    }
}
