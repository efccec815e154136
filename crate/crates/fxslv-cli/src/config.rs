//! Job configuration: one TOML document describes one pricing job.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use fxslv::leverage::LeverageSurface;
use fxslv::model::{CirParams, CorrelationMatrix, ModelParams, ShiftFunction};
use fxslv::payoffs::{AbdcContract, AveragingMode, BarrierKind, OptionKind, PayoffSpec};
use fxslv::SimGrid;

/// Validation failure (bad config, bad file, bad model); exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CirConfig {
    pub y0: f64,
    pub kappa: f64,
    pub theta: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CorrelationConfig {
    #[serde(default)]
    pub rho_sv: f64,
    #[serde(default)]
    pub rho_sd: f64,
    #[serde(default)]
    pub rho_sf: f64,
    #[serde(default)]
    pub rho_vd: f64,
    #[serde(default)]
    pub rho_vf: f64,
    #[serde(default)]
    pub rho_df: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ShiftConfig {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub h_max: f64,
}

/// Exactly one of `constant` or `file`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LeverageConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

/// Payoff description; date schedules may be listed explicitly or expanded
/// from per-year counts against the job maturity.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PayoffConfig {
    EuropeanCall {
        strike: f64,
    },
    EuropeanPut {
        strike: f64,
    },
    AsianFixed {
        strike: f64,
        option: OptionKind,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        fixing_dates: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fixings_per_year: Option<u32>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        continuous: bool,
    },
    Barrier {
        kind: BarrierKind,
        option: OptionKind,
        strike: f64,
        barrier: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        monitoring_dates: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        monitorings_per_year: Option<u32>,
    },
    DoubleKnockOutCall {
        strike: f64,
        lower: f64,
        upper: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        monitoring_dates: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        monitorings_per_year: Option<u32>,
    },
    /// Autocallable note with monthly fixings and quarterly coupons out to
    /// the job maturity; levels are fractions of the initial spot.
    Abdc {
        nominal: f64,
        strike_pct: f64,
        b_uo_pct: f64,
        b_di_pct: f64,
        coupon: f64,
        coupon_er: f64,
    },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct JobConfig {
    pub s0: f64,
    pub maturity: f64,
    pub steps_per_year: u32,
    pub n_paths: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<u64>,
    pub variance: CirConfig,
    pub domestic: CirConfig,
    pub foreign: CirConfig,
    pub correlation: CorrelationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift_domestic: Option<ShiftConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift_foreign: Option<ShiftConfig>,
    pub leverage: LeverageConfig,
    pub payoff: PayoffConfig,
}

/// A fully constructed job: model, grid and payoff ready for the engine.
pub struct Job {
    pub params: ModelParams,
    pub grid: SimGrid,
    pub spec: PayoffSpec,
    pub n_paths: u64,
    pub seed: u64,
    pub batch_size: u64,
}

impl JobConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("bad config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("job config serializes")
    }

    fn cir(c: &CirConfig, label: &str) -> Result<CirParams, ConfigError> {
        CirParams::new(c.y0, c.kappa, c.theta, c.xi)
            .map_err(|e| ConfigError(format!("{label}: {e}")))
    }

    fn shift(c: &Option<ShiftConfig>, label: &str) -> Result<ShiftFunction, ConfigError> {
        match c {
            None => Ok(ShiftFunction::zero()),
            Some(s) => ShiftFunction::new(s.knots.clone(), s.values.clone(), s.h_max)
                .map_err(|e| ConfigError(format!("{label}: {e}"))),
        }
    }

    fn leverage(&self, base_dir: &Path) -> Result<LeverageSurface, ConfigError> {
        match (&self.leverage.constant, &self.leverage.file) {
            (Some(c), None) => LeverageSurface::constant(*c)
                .map_err(|e| ConfigError(format!("leverage: {e}"))),
            (None, Some(file)) => {
                let path = if file.is_absolute() {
                    file.clone()
                } else {
                    base_dir.join(file)
                };
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    ConfigError(format!(
                        "cannot read leverage surface {}: {e}",
                        path.display()
                    ))
                })?;
                LeverageSurface::from_table_string(&text)
                    .map_err(|e| ConfigError(format!("leverage surface {}: {e}", path.display())))
            }
            _ => Err(ConfigError(
                "leverage needs exactly one of `constant` or `file`".into(),
            )),
        }
    }

    fn expand_schedule(
        explicit: &[f64],
        per_year: Option<u32>,
        maturity: f64,
        what: &str,
    ) -> Result<Vec<f64>, ConfigError> {
        match (explicit.is_empty(), per_year) {
            (false, None) => Ok(explicit.to_vec()),
            (true, Some(per_year)) if per_year > 0 => {
                let count = (maturity * f64::from(per_year)).round() as u32;
                Ok((1..=count)
                    .map(|j| f64::from(j) / f64::from(per_year))
                    .collect())
            }
            _ => Err(ConfigError(format!(
                "{what} needs either explicit dates or a positive per-year count"
            ))),
        }
    }

    fn payoff(&self) -> Result<PayoffSpec, ConfigError> {
        let spec = match &self.payoff {
            PayoffConfig::EuropeanCall { strike } => PayoffSpec::EuropeanCall { strike: *strike },
            PayoffConfig::EuropeanPut { strike } => PayoffSpec::EuropeanPut { strike: *strike },
            PayoffConfig::AsianFixed {
                strike,
                option,
                fixing_dates,
                fixings_per_year,
                continuous,
            } => PayoffSpec::AsianFixed {
                strike: *strike,
                option: *option,
                fixing_dates: if *continuous {
                    Vec::new()
                } else {
                    Self::expand_schedule(
                        fixing_dates,
                        *fixings_per_year,
                        self.maturity,
                        "asian fixing schedule",
                    )?
                },
                averaging: if *continuous {
                    AveragingMode::ContinuousTrapezoid
                } else {
                    AveragingMode::Discrete
                },
            },
            PayoffConfig::Barrier {
                kind,
                option,
                strike,
                barrier,
                monitoring_dates,
                monitorings_per_year,
            } => PayoffSpec::Barrier {
                kind: *kind,
                option: *option,
                strike: *strike,
                barrier: *barrier,
                monitoring_dates: Self::expand_schedule(
                    monitoring_dates,
                    *monitorings_per_year,
                    self.maturity,
                    "barrier monitoring schedule",
                )?,
            },
            PayoffConfig::DoubleKnockOutCall {
                strike,
                lower,
                upper,
                monitoring_dates,
                monitorings_per_year,
            } => PayoffSpec::DoubleKnockOutCall {
                strike: *strike,
                lower: *lower,
                upper: *upper,
                monitoring_dates: Self::expand_schedule(
                    monitoring_dates,
                    *monitorings_per_year,
                    self.maturity,
                    "barrier monitoring schedule",
                )?,
            },
            PayoffConfig::Abdc {
                nominal,
                strike_pct,
                b_uo_pct,
                b_di_pct,
                coupon,
                coupon_er,
            } => {
                if (self.maturity.round() - self.maturity).abs() > 1e-12 {
                    return Err(ConfigError(
                        "abdc payoff needs a whole number of years".into(),
                    ));
                }
                let contract = AbdcContract::from_percent_levels(
                    *nominal,
                    self.s0,
                    *strike_pct,
                    *b_uo_pct,
                    *b_di_pct,
                    *coupon,
                    *coupon_er,
                    self.maturity.round() as u32,
                )
                .map_err(|e| ConfigError(format!("abdc: {e}")))?;
                PayoffSpec::Abdc(contract)
            }
        };
        spec.validate()
            .map_err(|e| ConfigError(format!("payoff: {e}")))?;
        Ok(spec)
    }

    /// Builds the job, validating the model on the way. `base_dir` anchors
    /// relative file references, normally the config's directory.
    pub fn build(&self, base_dir: &Path) -> Result<Job, ConfigError> {
        let corr = CorrelationMatrix::from_pairs(
            self.correlation.rho_sv,
            self.correlation.rho_sd,
            self.correlation.rho_sf,
            self.correlation.rho_vd,
            self.correlation.rho_vf,
            self.correlation.rho_df,
        )
        .map_err(|e| ConfigError(format!("correlation: {e}")))?;
        let params = ModelParams {
            s0: self.s0,
            variance: Self::cir(&self.variance, "variance")?,
            domestic: Self::cir(&self.domestic, "domestic")?,
            foreign: Self::cir(&self.foreign, "foreign")?,
            shift_d: Self::shift(&self.shift_domestic, "shift_domestic")?,
            shift_f: Self::shift(&self.shift_foreign, "shift_foreign")?,
            corr,
            leverage: Arc::new(self.leverage(base_dir)?),
        };
        let report =
            fxslv::model::validate(&params).map_err(|e| ConfigError(format!("model: {e}")))?;
        if !report.is_valid() {
            return Err(ConfigError(format!(
                "model invalid: {}",
                report.violations.join("; ")
            )));
        }
        for warning in &report.warnings {
            eprintln!("warning: {warning}");
        }
        let grid = SimGrid::new(self.maturity, self.steps_per_year)
            .map_err(|e| ConfigError(format!("grid: {e}")))?;
        let spec = self.payoff()?;
        Ok(Job {
            params,
            grid,
            spec,
            n_paths: self.n_paths,
            seed: self.seed,
            batch_size: self.batch_size.unwrap_or(fxslv::engine::DEFAULT_BATCH_SIZE),
        })
    }
}
