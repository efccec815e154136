//! Command-line front end for the fxslv pricing engine.
//!
//! Subcommands: `price`, `converge`, `analytics`, `leverage`, `moment-probe`.
//! Exit codes: 0 on success, 2 on validation errors (bad config, bad files,
//! invalid model, misaligned dates), 3 on runtime errors.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, JobConfig};
use fxslv::analytics::{
    cir_lambda_for_spot_moment, explosion_time_exact_cir, explosion_time_fte_cir, phi, t_star_calibration,
    t_star_l1, t_star_moments_exact, t_star_moments_fte,
};
use fxslv::engine::{MomentSelector, ProcessChoice};
use fxslv::leverage::{estimate_leverage_det_rates, estimate_leverage_full, BinConfig, MarketTerms, ParticleCloud};
use fxslv::model::CirParams;
use fxslv::SlvError;

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Debug)]
enum CliError {
    Validation(String),
    Runtime(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.0)
    }
}

impl From<SlvError> for CliError {
    fn from(e: SlvError) -> Self {
        match e {
            SlvError::NonFiniteParameter(_)
            | SlvError::InvalidParameter(_)
            | SlvError::NotPsd
            | SlvError::DateNotOnGrid(_)
            | SlvError::DatesNotAlignable(_)
            | SlvError::TooFewPaths(_)
            | SlvError::DeltaTooLarge { .. }
            | SlvError::Parse(_) => CliError::Validation(e.to_string()),
            SlvError::InsufficientParticles { .. }
            | SlvError::NonPositiveDensity
            | SlvError::BeyondCriticalMaturity => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "fxslv",
    about = "Monte Carlo pricing for the 4-factor hybrid SLV FX model",
    version
)]
struct Cli {
    /// Worker threads for path simulation (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct JobArgs {
    /// Job description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the RNG seed (flag beats the SEED environment variable,
    /// which beats the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the parsed config as TOML and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Price the configured payoff; writes a JSON report.
    Price(JobArgs),
    /// Re-price across a steps-per-year ladder; writes a CSV table.
    Converge {
        #[command(flatten)]
        job: JobArgs,
        /// Comma-separated steps-per-year ladder, e.g. 12,24,48,96,192.
        #[arg(long, value_delimiter = ',')]
        steps: Vec<u32>,
    },
    /// Print the critical-maturity table for (alpha, k, xi, sigma_max) as
    /// CSV rows `quantity,value` (infinite horizons print as `inf`).
    Analytics {
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        xi: f64,
        #[arg(long)]
        sigma_max: f64,
        /// Long-run mean of the variance factor; enables the Feller row.
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the leverage function from a particle cloud; writes CSV.
    Leverage {
        /// Particle cloud CSV: spot,variance,discount_d,rate_d,rate_f[,weight].
        #[arg(long)]
        cloud: PathBuf,
        /// Per-strike quotes CSV:
        /// strike,sigma_lv[,call_density,forward_rate_d,forward_rate_f].
        #[arg(long)]
        quotes: PathBuf,
        /// Also evaluate the full stochastic-rates estimator (needs the
        /// optional quote columns).
        #[arg(long)]
        full: bool,
        /// Minimum particles per conditional-expectation bin.
        #[arg(long, default_value_t = 50)]
        min_bin: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate a moment of a truncated factor across step refinements.
    MomentProbe {
        #[command(flatten)]
        job: JobArgs,
        /// Factor to probe for sup-moments.
        #[arg(long, default_value = "variance")]
        process: String,
        /// Moment order p for E[sup y^p].
        #[arg(long)]
        order: Option<f64>,
        /// Exponent lambda for E[exp(lambda int v-bar)].
        #[arg(long)]
        lambda: Option<f64>,
        /// Number of step-halving levels.
        #[arg(long, default_value_t = 4)]
        refinements: usize,
    },
}

fn resolve_seed(cli_seed: Option<u64>, config_seed: u64) -> Result<u64, CliError> {
    if let Some(s) = cli_seed {
        return Ok(s);
    }
    match std::env::var("SEED") {
        Ok(text) => text
            .parse::<u64>()
            .map_err(|e| CliError::Validation(format!("bad SEED environment variable: {e}"))),
        Err(_) => Ok(config_seed),
    }
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_job(args: &JobArgs) -> Result<(JobConfig, config::Job), CliError> {
    let cfg = JobConfig::from_path(&args.config)?;
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let mut job = cfg.build(&base)?;
    job.seed = resolve_seed(args.seed, job.seed)?;
    Ok((cfg, job))
}

fn cmd_price(args: &JobArgs) -> Result<(), CliError> {
    let (cfg, job) = load_job(args)?;
    if args.dump_config {
        return write_output(&args.out, &cfg.to_toml());
    }
    let result = fxslv::engine::price(
        &job.params,
        &job.grid,
        &job.spec,
        job.n_paths,
        job.seed,
        job.batch_size,
    )?;
    eprintln!(
        "priced {} paths in {:.2}s",
        result.n_paths, result.wall_time
    );
    write_output(&args.out, &format!("{}\n", result.to_json()))
}

fn cmd_converge(args: &JobArgs, steps: &[u32]) -> Result<(), CliError> {
    let (cfg, job) = load_job(args)?;
    if args.dump_config {
        return write_output(&args.out, &cfg.to_toml());
    }
    if steps.is_empty() {
        return Err(CliError::Validation("converge needs --steps".into()));
    }
    let table = fxslv::engine::convergence_study(
        &job.params,
        job.grid.maturity(),
        &job.spec,
        steps,
        job.n_paths,
        job.seed,
        job.batch_size,
    )?;
    write_output(&args.out, &table.to_csv())
}

fn cmd_analytics(
    alpha: f64,
    k: f64,
    xi: f64,
    sigma_max: f64,
    theta: Option<f64>,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    if !(alpha >= 1.0) {
        return Err(CliError::Validation(format!(
            "alpha must be >= 1, got {alpha}"
        )));
    }
    for (name, v) in [("k", k), ("xi", xi), ("sigma_max", sigma_max)] {
        if !v.is_finite() || v < 0.0 {
            return Err(CliError::Validation(format!(
                "{name} must be finite and non-negative, got {v}"
            )));
        }
    }
    let zeta = xi * sigma_max;
    let mut csv = String::from("quantity,value\n");
    let mut row = |name: &str, value: String| {
        let _ = writeln!(csv, "{name},{value}");
    };
    row("alpha", alpha.to_string());
    row("k", k.to_string());
    row("xi", xi.to_string());
    row("sigma_max", sigma_max.to_string());
    row("zeta", zeta.to_string());
    row("t_star_l1", t_star_l1(k, zeta).value.to_string());
    row(
        "t_star_calibration",
        t_star_calibration(k, zeta).value.to_string(),
    );
    // The CIR exponential-moment horizons at the lambda matched to the
    // requested moment order.
    if xi > 0.0 {
        let lambda = cir_lambda_for_spot_moment(phi(alpha), zeta, xi);
        let theta_for_cir = theta.unwrap_or(0.0);
        let cir = CirParams::new(1.0, k, theta_for_cir.max(0.0), xi)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        row("lambda", lambda.to_string());
        row(
            "explosion_exact_cir",
            explosion_time_exact_cir(&cir, lambda).value.to_string(),
        );
        row(
            "explosion_fte_cir",
            explosion_time_fte_cir(&cir, lambda).value.to_string(),
        );
    } else {
        row("lambda", "inf".into());
        row("explosion_exact_cir", "inf".into());
        row("explosion_fte_cir", "inf".into());
    }
    row(
        "t_star_moments_exact",
        t_star_moments_exact(alpha, k, zeta).value.to_string(),
    );
    row(
        "t_star_moments_fte",
        t_star_moments_fte(alpha, k, zeta).value.to_string(),
    );
    if let Some(theta) = theta {
        let ratio = 2.0 * k * theta / (xi * xi);
        row("feller_ratio", ratio.to_string());
        row(
            "feller_ok",
            (2.0 * k * theta > xi * xi).to_string(),
        );
    }
    write_output(out, &csv)
}

fn parse_csv_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Validation(format!("{} is empty", path.display())))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|e| {
                    CliError::Validation(format!(
                        "{} row {}: bad number {tok:?}: {e}",
                        path.display(),
                        i + 2
                    ))
                })
            })
            .collect::<Result<_, _>>()?;
        if row.len() != header.len() {
            return Err(CliError::Validation(format!(
                "{} row {} has {} fields, expected {}",
                path.display(),
                i + 2,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn cmd_leverage(
    cloud_path: &Path,
    quotes_path: &Path,
    full: bool,
    min_bin: usize,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    let (header, rows) = parse_csv_table(cloud_path)?;
    let col = |name: &str| -> Result<usize, CliError> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| {
                CliError::Validation(format!(
                    "{} misses column {name}",
                    cloud_path.display()
                ))
            })
    };
    let (c_spot, c_var, c_disc, c_rd, c_rf) = (
        col("spot")?,
        col("variance")?,
        col("discount_d")?,
        col("rate_d")?,
        col("rate_f")?,
    );
    let c_weight = header.iter().position(|h| h == "weight");
    let mut cloud = ParticleCloud::default();
    for row in &rows {
        cloud.spot.push(row[c_spot]);
        cloud.variance.push(row[c_var]);
        cloud.discount_d.push(row[c_disc]);
        cloud.rate_d.push(row[c_rd]);
        cloud.rate_f.push(row[c_rf]);
        if let Some(cw) = c_weight {
            cloud.weights.push(row[cw]);
        }
    }
    cloud.validate()?;

    let (qheader, qrows) = parse_csv_table(quotes_path)?;
    let qcol = |name: &str| qheader.iter().position(|h| h == name);
    let q_strike = qcol("strike").ok_or_else(|| {
        CliError::Validation(format!("{} misses column strike", quotes_path.display()))
    })?;
    let q_sigma = qcol("sigma_lv").ok_or_else(|| {
        CliError::Validation(format!("{} misses column sigma_lv", quotes_path.display()))
    })?;
    let full_cols = match (qcol("call_density"), qcol("forward_rate_d"), qcol("forward_rate_f")) {
        (Some(a), Some(b), Some(c)) => Some((a, b, c)),
        _ => None,
    };
    if full && full_cols.is_none() {
        return Err(CliError::Validation(format!(
            "--full needs call_density, forward_rate_d and forward_rate_f columns in {}",
            quotes_path.display()
        )));
    }

    let bin = BinConfig { min_bin };
    let mut csv = String::from(if full {
        "strike,sigma_lv,sigma_det_rates,sigma_sq_full\n"
    } else {
        "strike,sigma_lv,sigma_det_rates\n"
    });
    for row in &qrows {
        let strike = row[q_strike];
        let sigma_lv = row[q_sigma];
        let det = estimate_leverage_det_rates(&cloud, sigma_lv, strike, &bin)?;
        if full {
            let (cd, frd, frf) = full_cols.expect("checked above");
            let market = MarketTerms {
                forward_rate_d: row[frd],
                forward_rate_f: row[frf],
                call_density: row[cd],
            };
            let sq = estimate_leverage_full(&cloud, sigma_lv, strike, &market, &bin)?;
            let _ = writeln!(csv, "{strike},{sigma_lv},{det},{sq}");
        } else {
            let _ = writeln!(csv, "{strike},{sigma_lv},{det}");
        }
    }
    write_output(out, &csv)
}

fn cmd_moment_probe(
    args: &JobArgs,
    process: &str,
    order: Option<f64>,
    lambda: Option<f64>,
    refinements: usize,
) -> Result<(), CliError> {
    let (cfg, job) = load_job(args)?;
    if args.dump_config {
        return write_output(&args.out, &cfg.to_toml());
    }
    let process = match process {
        "variance" | "v" => ProcessChoice::Variance,
        "domestic" | "gd" => ProcessChoice::DomesticRate,
        "foreign" | "gf" => ProcessChoice::ForeignRate,
        other => {
            return Err(CliError::Validation(format!(
                "unknown process {other:?}; use variance, domestic or foreign"
            )))
        }
    };
    let selector = match (order, lambda) {
        (Some(p), None) => MomentSelector::SupMoment { process, order: p },
        (None, Some(l)) => MomentSelector::ExpIntegral { lambda: l },
        _ => {
            return Err(CliError::Validation(
                "moment-probe needs exactly one of --order or --lambda".into(),
            ))
        }
    };
    let table = fxslv::engine::moment_probe(
        &job.params,
        &job.grid,
        selector,
        job.n_paths,
        job.seed,
        refinements,
    )?;
    write_output(&args.out, &table.to_csv())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Price(args) => cmd_price(args),
        Command::Converge { job, steps } => cmd_converge(job, steps),
        Command::Analytics {
            alpha,
            k,
            xi,
            sigma_max,
            theta,
            out,
        } => cmd_analytics(*alpha, *k, *xi, *sigma_max, *theta, out),
        Command::Leverage {
            cloud,
            quotes,
            full,
            min_bin,
            out,
        } => cmd_leverage(cloud, quotes, *full, *min_bin, out),
        Command::MomentProbe {
            job,
            process,
            order,
            lambda,
            refinements,
        } => cmd_moment_probe(job, process, *order, *lambda, *refinements),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: cannot build thread pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
