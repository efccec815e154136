//! Batched Monte Carlo pricing, coupled-step convergence studies and moment
//! probes.
//!
//! Paths are keyed by their global index, so every estimate is a pure
//! function of `(config, seed)`. Batches may run on any number of worker
//! threads: per-batch partial sums are collected in batch order and merged
//! sequentially with compensated summation, which makes the reduction
//! bit-stable regardless of the thread count.

use rayon::prelude::*;

use crate::drivers::{cholesky, fill_block, sample_block, IncrementBlock, SimGrid};
use crate::error::{Result, SlvError};
use crate::model::{self, ModelParams};
use crate::payoffs::PayoffSpec;
use crate::simulator::{empty_record, RecordSpec, SimContext};

/// Default number of paths per work item.
pub const DEFAULT_BATCH_SIZE: u64 = 16_384;

/// Compensated (Kahan) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(-other.carry);
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Monte Carlo estimate with its sampling error.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PricingResult {
    pub estimate: f64,
    /// Sample standard deviation divided by sqrt(n_paths).
    pub std_error: f64,
    /// `estimate -/+ 1.96 std_error`.
    pub ci95: (f64, f64),
    pub n_paths: u64,
    pub steps_per_year: u32,
    pub seed: u64,
    /// Wall-clock seconds; excluded from serialized output so identical jobs
    /// produce byte-identical reports.
    #[serde(skip)]
    pub wall_time: f64,
}

impl PricingResult {
    fn from_moments(sum: f64, sum_sq: f64, n: u64, grid: &SimGrid, seed: u64, wall: f64) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
        let std_error = (var / nf).sqrt();
        Self {
            estimate: mean,
            std_error,
            ci95: (mean - 1.96 * std_error, mean + 1.96 * std_error),
            n_paths: n,
            steps_per_year: grid.steps_per_year(),
            seed,
            wall_time: wall,
        }
    }

    /// Stable-key-order JSON document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pricing result serializes")
    }
}

fn batch_ranges(n_paths: u64, batch_size: u64) -> Vec<(u64, u64)> {
    let batch_size = batch_size.max(1);
    let mut out = Vec::new();
    let mut start = 0;
    while start < n_paths {
        let end = (start + batch_size).min(n_paths);
        out.push((start, end));
        start = end;
    }
    out
}

/// Prices one payoff by Monte Carlo. Deterministic in `(params, grid, spec,
/// n_paths, seed)`; the batch size and worker count never change the result.
pub fn price(
    params: &ModelParams,
    grid: &SimGrid,
    spec: &PayoffSpec,
    n_paths: u64,
    seed: u64,
    batch_size: u64,
) -> Result<PricingResult> {
    let started = std::time::Instant::now();
    if n_paths < 2 {
        return Err(SlvError::TooFewPaths(n_paths));
    }
    let report = model::validate(params)?;
    if !report.is_valid() {
        return Err(SlvError::InvalidParameter(report.violations.join("; ")));
    }
    let compiled = spec.compile(grid)?;
    let factor = cholesky(&params.corr)?;
    let ctx = SimContext::new(params, grid);

    let partials: Vec<Result<(KahanSum, KahanSum)>> = batch_ranges(n_paths, batch_size)
        .par_iter()
        .map(|&(start, end)| {
            let mut sum = KahanSum::default();
            let mut sum_sq = KahanSum::default();
            let mut record = empty_record(grid);
            let mut block = sample_block(seed, start, grid, &factor);
            for p in start..end {
                if p != start {
                    fill_block(seed, p, grid, &factor, &mut block);
                }
                ctx.simulate_into(params, &block, RecordSpec::default(), &mut record)?;
                let v = compiled.value(&record);
                sum.add(v);
                sum_sq.add(v * v);
            }
            Ok((sum, sum_sq))
        })
        .collect();

    let mut sum = KahanSum::default();
    let mut sum_sq = KahanSum::default();
    for partial in partials {
        let (s, q) = partial?;
        sum.merge(&s);
        sum_sq.merge(&q);
    }
    Ok(PricingResult::from_moments(
        sum.value(),
        sum_sq.value(),
        n_paths,
        grid,
        seed,
        started.elapsed().as_secs_f64(),
    ))
}

/// One row of a step-refinement study.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConvergenceRow {
    pub steps_per_year: u32,
    pub estimate: f64,
    /// Previous estimate minus this one; absent on the first row.
    pub diff: Option<f64>,
    /// `log2 |diff_prev / diff|`; defined from the third row onward and only
    /// when both differences are non-zero.
    pub order: Option<f64>,
}

/// Step-refinement table in the style of an empirical-order report.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub n_paths: u64,
    pub seed: u64,
}

impl ConvergenceTable {
    /// CSV with a header row, LF line endings and '.' decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("steps_per_year,estimate,diff,order\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.steps_per_year,
                row.estimate,
                row.diff.map(|d| d.to_string()).unwrap_or_default(),
                row.order.map(|o| o.to_string()).unwrap_or_default(),
            ));
        }
        out
    }
}

/// Estimates the payoff at every step count in `steps_list`, coupling all
/// levels through one fine increment stream per path (coarse increments are
/// sums of fine ones). The coupling removes Monte Carlo noise from adjacent
/// differences, so the table isolates the time-discretization error.
pub fn convergence_study(
    params: &ModelParams,
    maturity: f64,
    spec: &PayoffSpec,
    steps_list: &[u32],
    n_paths: u64,
    seed: u64,
    batch_size: u64,
) -> Result<ConvergenceTable> {
    if n_paths < 2 {
        return Err(SlvError::TooFewPaths(n_paths));
    }
    if steps_list.is_empty() || steps_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SlvError::DatesNotAlignable(
            "steps list must be non-empty and strictly increasing".into(),
        ));
    }
    let report = model::validate(params)?;
    if !report.is_valid() {
        return Err(SlvError::InvalidParameter(report.violations.join("; ")));
    }
    let fine_spy = *steps_list.last().expect("non-empty steps list");
    for &spy in steps_list {
        if fine_spy % spy != 0 {
            return Err(SlvError::DatesNotAlignable(format!(
                "steps {spy} does not divide the finest level {fine_spy}"
            )));
        }
    }
    let fine_grid = SimGrid::new(maturity, fine_spy)?;
    let levels: Vec<(SimGrid, usize)> = steps_list
        .iter()
        .map(|&spy| -> Result<(SimGrid, usize)> {
            let grid = SimGrid::new(maturity, spy)?;
            if fine_grid.n_steps() % grid.n_steps() != 0 {
                return Err(SlvError::DatesNotAlignable(format!(
                    "grid at {spy} steps/year does not nest in {fine_spy}"
                )));
            }
            Ok((grid, fine_grid.n_steps() / grid.n_steps()))
        })
        .collect::<Result<_>>()?;
    // Every payoff date must sit on every level of the ladder.
    let compiled: Vec<_> = levels
        .iter()
        .map(|(grid, _)| {
            spec.compile(grid).map_err(|e| match e {
                SlvError::DateNotOnGrid(d) => SlvError::DatesNotAlignable(format!(
                    "payoff date {d} is off the {}-steps/year grid",
                    grid.steps_per_year()
                )),
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let contexts: Vec<SimContext> = levels
        .iter()
        .map(|(grid, _)| SimContext::new(params, grid))
        .collect();
    let factor = cholesky(&params.corr)?;

    let n_levels = levels.len();
    let partials: Vec<Result<Vec<KahanSum>>> = batch_ranges(n_paths, batch_size)
        .par_iter()
        .map(|&(start, end)| {
            let mut sums = vec![KahanSum::default(); n_levels];
            let mut fine = sample_block(seed, start, &fine_grid, &factor);
            let mut records: Vec<_> = levels.iter().map(|(g, _)| empty_record(g)).collect();
            for p in start..end {
                if p != start {
                    fill_block(seed, p, &fine_grid, &factor, &mut fine);
                }
                for (i, (_, ratio)) in levels.iter().enumerate() {
                    let block: IncrementBlock = fine.coarsen(*ratio)?;
                    contexts[i].simulate_into(
                        params,
                        &block,
                        RecordSpec::default(),
                        &mut records[i],
                    )?;
                    sums[i].add(compiled[i].value(&records[i]));
                }
            }
            Ok(sums)
        })
        .collect();

    let mut totals = vec![KahanSum::default(); n_levels];
    for partial in partials {
        for (total, s) in totals.iter_mut().zip(partial?.iter()) {
            total.merge(s);
        }
    }

    let estimates: Vec<f64> = totals.iter().map(|s| s.value() / n_paths as f64).collect();
    let mut rows = Vec::with_capacity(n_levels);
    for (i, &est) in estimates.iter().enumerate() {
        let diff = (i >= 1).then(|| estimates[i - 1] - est);
        let order = if i >= 2 {
            let prev = estimates[i - 2] - estimates[i - 1];
            let cur = diff.expect("diff exists from the second row");
            (prev != 0.0 && cur != 0.0).then(|| (prev.abs() / cur.abs()).log2())
        } else {
            None
        };
        rows.push(ConvergenceRow {
            steps_per_year: steps_list[i],
            estimate: est,
            diff,
            order,
        });
    }
    Ok(ConvergenceTable {
        rows,
        n_paths,
        seed,
    })
}

/// What a moment probe estimates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentSelector {
    /// `E[ max_n y-bar_{t_n}^p ]` for one truncated factor.
    SupMoment { process: ProcessChoice, order: f64 },
    /// `E[ exp(lambda int_0^T v-bar dt) ]`, the exponential functional of
    /// the truncated variance.
    ExpIntegral { lambda: f64 },
}

/// Which truncated factor a sup-moment probe reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessChoice {
    Variance,
    DomesticRate,
    ForeignRate,
}

/// One refinement level of a moment probe.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MomentProbeRow {
    pub steps_per_year: u32,
    pub dt: f64,
    pub estimate: f64,
    pub std_error: f64,
}

/// Moment estimates across a step-refinement ladder.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MomentProbeTable {
    pub rows: Vec<MomentProbeRow>,
}

impl MomentProbeTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("steps_per_year,dt,estimate,std_error\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.steps_per_year, row.dt, row.estimate, row.std_error
            ));
        }
        out
    }
}

/// Estimates the selected moment at `n_refinements` successive halvings of
/// the base step (the base level included).
pub fn moment_probe(
    params: &ModelParams,
    base_grid: &SimGrid,
    selector: MomentSelector,
    n_paths: u64,
    seed: u64,
    n_refinements: usize,
) -> Result<MomentProbeTable> {
    if n_paths < 2 {
        return Err(SlvError::TooFewPaths(n_paths));
    }
    match selector {
        MomentSelector::SupMoment { order, .. } if order < 1.0 => {
            return Err(SlvError::InvalidParameter(format!(
                "moment order must be >= 1, got {order}"
            )));
        }
        MomentSelector::ExpIntegral { lambda } if lambda <= 0.0 => {
            return Err(SlvError::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        _ => {}
    }
    let factor = cholesky(&params.corr)?;
    let record_spec = match selector {
        MomentSelector::SupMoment {
            process: ProcessChoice::Variance,
            ..
        }
        | MomentSelector::ExpIntegral { .. } => RecordSpec {
            variance: true,
            rate_factors: false,
        },
        _ => RecordSpec {
            variance: false,
            rate_factors: true,
        },
    };

    let mut rows = Vec::with_capacity(n_refinements);
    for level in 0..n_refinements.max(1) {
        let spy = base_grid.steps_per_year() << level;
        let grid = SimGrid::new(base_grid.maturity(), spy)?;
        let ctx = SimContext::new(params, &grid);
        let partials: Vec<Result<(KahanSum, KahanSum)>> =
            batch_ranges(n_paths, DEFAULT_BATCH_SIZE)
                .par_iter()
                .map(|&(start, end)| {
                    let mut sum = KahanSum::default();
                    let mut sum_sq = KahanSum::default();
                    let mut record = empty_record(&grid);
                    let mut block = sample_block(seed, start, &grid, &factor);
                    for p in start..end {
                        if p != start {
                            fill_block(seed, p, &grid, &factor, &mut block);
                        }
                        ctx.simulate_into(params, &block, record_spec, &mut record)?;
                        let v = match selector {
                            MomentSelector::SupMoment { process, order } => {
                                let column = match process {
                                    ProcessChoice::Variance => &record.variance,
                                    ProcessChoice::DomesticRate => &record.gd,
                                    ProcessChoice::ForeignRate => &record.gf,
                                };
                                column
                                    .iter()
                                    .fold(0.0f64, |m, &y| m.max(y))
                                    .powf(order)
                            }
                            MomentSelector::ExpIntegral { lambda } => {
                                // Left-endpoint integral, exact for the
                                // piecewise-constant truncated variance.
                                let n = record.variance.len() - 1;
                                let integral: f64 =
                                    record.variance[..n].iter().sum::<f64>() * grid.dt();
                                (lambda * integral).exp()
                            }
                        };
                        sum.add(v);
                        sum_sq.add(v * v);
                    }
                    Ok((sum, sum_sq))
                })
                .collect();
        let mut sum = KahanSum::default();
        let mut sum_sq = KahanSum::default();
        for partial in partials {
            let (s, q) = partial?;
            sum.merge(&s);
            sum_sq.merge(&q);
        }
        let nf = n_paths as f64;
        let mean = sum.value() / nf;
        let var = ((sum_sq.value() - nf * mean * mean) / (nf - 1.0)).max(0.0);
        rows.push(MomentProbeRow {
            steps_per_year: spy,
            dt: grid.dt(),
            estimate: mean,
            std_error: (var / nf).sqrt(),
        });
    }
    Ok(MomentProbeTable { rows })
}
