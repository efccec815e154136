//! Command-line behavior: exit codes, file handling, output formats.

use std::path::Path;
use std::process::Command;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fxslv"))
}

const BASE_CONFIG: &str = r#"
s0 = 1.0
maturity = 1.0
steps_per_year = 16
n_paths = 4000
seed = 7

[variance]
y0 = 0.04
kappa = 1.5
theta = 0.04
xi = 0.4

[domestic]
y0 = 0.02
kappa = 0.6
theta = 0.02
xi = 0.15

[foreign]
y0 = 0.01
kappa = 0.5
theta = 0.012
xi = 0.12

[correlation]
rho_sv = -0.5

[leverage]
constant = 1.0

[payoff]
type = "european_call"
strike = 1.05
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("job.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn price_succeeds_and_reports_all_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE_CONFIG);
    let out = bin()
        .args(["price", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for field in ["estimate", "std_error", "ci95", "n_paths", "steps_per_year", "seed"] {
        assert!(json.get(field).is_some(), "missing field {field}");
    }
    assert_eq!(json["n_paths"], 4000);
    assert_eq!(json["seed"], 7);
    let est = json["estimate"].as_f64().unwrap();
    let lo = json["ci95"][0].as_f64().unwrap();
    let hi = json["ci95"][1].as_f64().unwrap();
    assert!(lo < est && est < hi);
}

#[test]
fn missing_surface_file_exits_2_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &BASE_CONFIG.replace("constant = 1.0", "file = \"no_such_surface.txt\""),
    );
    let out = bin()
        .args(["price", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("no_such_surface.txt"),
        "stderr does not name the file: {stderr}"
    );
}

#[test]
fn non_psd_correlation_exits_2_with_the_psd_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &BASE_CONFIG.replace(
            "rho_sv = -0.5",
            "rho_sv = 0.99\nrho_sd = 0.99\nrho_vd = 0.0",
        ),
    );
    let out = bin()
        .args(["price", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("matrix not PSD"),
        "stderr misses PSD message: {stderr}"
    );
}

#[test]
fn converge_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE_CONFIG);
    // Valid ladder.
    let out = bin()
        .args([
            "converge",
            "--config",
            cfg.to_str().unwrap(),
            "--steps",
            "4,8,16",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("steps_per_year,estimate,diff,order\n"));
    assert_eq!(csv.lines().count(), 4);

    // Non-nesting ladder is a validation failure.
    let out = bin()
        .args([
            "converge",
            "--config",
            cfg.to_str().unwrap(),
            "--steps",
            "4,6",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Missing config file.
    let out = bin()
        .args(["converge", "--config", "nowhere.toml", "--steps", "4,8"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.toml"));
}

#[test]
fn analytics_prints_inf_for_unbounded_horizons() {
    // k >= phi * zeta puts the calibration horizon in the infinite branch.
    let out = bin()
        .args([
            "analytics", "--alpha", "2", "--k", "5.0", "--xi", "0.2", "--sigma-max", "1.0",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let line = csv
        .lines()
        .find(|l| l.starts_with("t_star_calibration,"))
        .unwrap();
    assert_eq!(line, "t_star_calibration,inf");
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE_CONFIG);
    let out = bin()
        .args(["price", "--config", cfg.to_str().unwrap(), "--dump-config"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let dumped = dir.path().join("dumped.toml");
    std::fs::write(&dumped, &out.stdout).unwrap();
    let out2 = bin()
        .args(["price", "--config", dumped.to_str().unwrap(), "--dump-config"])
        .output()
        .unwrap();
    assert!(out2.status.success());
    assert_eq!(out.stdout, out2.stdout, "dump-config is not a fixed point");
}

#[test]
fn seed_precedence_flag_beats_env_beats_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE_CONFIG);
    let run = |seed_flag: Option<&str>, seed_env: Option<&str>| -> serde_json::Value {
        let mut cmd = bin();
        cmd.args(["price", "--config", cfg.to_str().unwrap()]);
        if let Some(s) = seed_flag {
            cmd.args(["--seed", s]);
        }
        match seed_env {
            Some(s) => cmd.env("SEED", s),
            None => cmd.env_remove("SEED"),
        };
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        serde_json::from_slice(&out.stdout).unwrap()
    };
    assert_eq!(run(None, None)["seed"], 7);
    assert_eq!(run(None, Some("11"))["seed"], 11);
    assert_eq!(run(Some("13"), Some("11"))["seed"], 13);
}

fn write_cloud(path: &Path, n: usize, constant_variance: Option<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut uniform = move || ((rng.next_u64() >> 11) as f64 + 0.5) / 9_007_199_254_740_992.0;
    let mut csv = String::from("spot,variance,discount_d,rate_d,rate_f\n");
    for _ in 0..n {
        let s = 0.8 + 0.6 * uniform();
        let v = constant_variance.unwrap_or(0.02 + 0.04 * uniform());
        csv.push_str(&format!("{s},{v},0.97,0.015,0.015\n"));
    }
    std::fs::write(path, csv).unwrap();
}

#[test]
fn leverage_constant_variance_cloud_recovers_the_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("cloud.csv");
    write_cloud(&cloud, 4000, Some(0.04));
    let quotes = dir.path().join("quotes.csv");
    std::fs::write(&quotes, "strike,sigma_lv\n0.9,0.3\n1.1,0.24\n").unwrap();
    let out = bin()
        .args([
            "leverage",
            "--cloud",
            cloud.to_str().unwrap(),
            "--quotes",
            quotes.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{:?}", out);
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "strike,sigma_lv,sigma_det_rates");
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|t| t.parse().unwrap())
        .collect();
    assert!((row[2] - 0.3 / 0.2).abs() < 1e-12);
}

#[test]
fn leverage_full_estimator_collapses_under_deterministic_rates() {
    // rate == forward rate on every particle: the full estimator equals the
    // squared deterministic-rates one.
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("cloud.csv");
    write_cloud(&cloud, 6000, None);
    let quotes = dir.path().join("quotes.csv");
    std::fs::write(
        &quotes,
        "strike,sigma_lv,call_density,forward_rate_d,forward_rate_f\n\
         1.0,0.25,1.4,0.015,0.015\n",
    )
    .unwrap();
    let out = bin()
        .args([
            "leverage",
            "--cloud",
            cloud.to_str().unwrap(),
            "--quotes",
            quotes.to_str().unwrap(),
            "--full",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{:?}", out);
    let csv = String::from_utf8(out.stdout).unwrap();
    let row: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|t| t.parse().unwrap())
        .collect();
    let (det, full) = (row[2], row[3]);
    assert!(
        (full - det * det).abs() < 1e-12,
        "full {full} vs det^2 {}",
        det * det
    );
}

#[test]
fn leverage_independent_cloud_matches_the_unconditional_mean() {
    // v independent of S: sigma_lv / sqrt(mean v) is the statistical target.
    let dir = tempfile::tempdir().unwrap();
    let cloud_path = dir.path().join("cloud.csv");
    write_cloud(&cloud_path, 100_000, None);
    let quotes = dir.path().join("quotes.csv");
    std::fs::write(&quotes, "strike,sigma_lv\n1.05,0.3\n").unwrap();
    let out = bin()
        .args([
            "leverage",
            "--cloud",
            cloud_path.to_str().unwrap(),
            "--quotes",
            quotes.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let est: f64 = csv.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    // Mean of Uniform(0.02, 0.06) is 0.04; the bin mean fluctuates with
    // sd(v)/sqrt(bin size), bin size 1000; three sigmas via delta method.
    let expected = 0.3 / 0.04f64.sqrt();
    let sd_v = 0.04 / 12f64.sqrt();
    let tol = 3.0 * expected / (2.0 * 0.04) * sd_v / 1000f64.sqrt();
    assert!(
        (est - expected).abs() < tol,
        "est {est}, expected {expected} +/- {tol}"
    );
}

#[test]
fn leverage_rejects_small_clouds_at_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("cloud.csv");
    write_cloud(&cloud, 10, Some(0.04));
    let quotes = dir.path().join("quotes.csv");
    std::fs::write(&quotes, "strike,sigma_lv\n1.0,0.3\n").unwrap();
    let out = bin()
        .args([
            "leverage",
            "--cloud",
            cloud.to_str().unwrap(),
            "--quotes",
            quotes.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient particles"));
}

#[test]
fn moment_probe_writes_the_refinement_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE_CONFIG);
    let out = bin()
        .args([
            "moment-probe",
            "--config",
            cfg.to_str().unwrap(),
            "--lambda",
            "0.5",
            "--refinements",
            "3",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{:?}", out);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("steps_per_year,dt,estimate,std_error\n"));
    assert_eq!(csv.lines().count(), 4);

    // Needs exactly one of --order / --lambda.
    let out = bin()
        .args(["moment-probe", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
