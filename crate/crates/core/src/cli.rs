//! Command-line driver. Exit codes: 0 success, 1 runtime or `--check`
//! failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{resolve, ChecksConfig, ConfigError, RunConfig, DEFAULT_SEED, ENV_OUT, ENV_SEED, ENV_WORKERS};
use crate::experiments::{rate_over, run_plan, with_workers, ExperimentReport, RunOptions};
use crate::functionals::{stabilization_probe_with, t_vector, xi_at, StabilizationProbeResult};
use crate::point_process::{sample_binomial_with, sample_poisson_with};
use crate::rng::stream_rng;
use crate::special_fn::{delta_alpha, exp_moment, v_alpha, WeightExponent};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const DEFAULT_OUT: &str = "stabclt-out";

#[derive(Parser, Debug)]
#[command(name = "stabclt", version, about = "Stabilizing-functional CLT toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print V_a, delta_a, delta_a^2 and 2^-a G(1+a) for each alpha.
    Constants {
        #[arg(allow_negative_numbers = true, default_values_t = [0.5, 1.0, 2.0, 3.0, 4.0])]
        alphas: Vec<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Draw one configuration and evaluate the statistics on it.
    Sample {
        config: PathBuf,
        /// Intensity (default: first value of lambda_grid).
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Write the points as CSV to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run the Monte Carlo experiment described by a config (or a report).
    Simulate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit 1 when a threshold from the `checks` block is violated.
        #[arg(long)]
        check: bool,
        #[arg(long)]
        json: bool,
    },
    /// Estimate the radius-of-stabilization tail.
    StabProbe {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        probe_count: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Refit the convergence rate from an existing report.json.
    Rate {
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
    /// Already reported; exit 1.
    Check,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.0)
    }
}

type CliResult = std::result::Result<(), Failure>;

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, env: &dyn Fn(&str) -> Option<String>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Constants { alphas, json } => cmd_constants(&alphas, json),
        Command::Sample {
            config,
            lambda,
            seed,
            stream,
            out,
            json,
        } => cmd_sample(&config, lambda, seed, stream, out.as_deref(), json, env),
        Command::Simulate {
            config,
            seed,
            workers,
            out,
            check,
            json,
        } => cmd_simulate(&config, seed, workers, out, check, json, env),
        Command::StabProbe {
            config,
            seed,
            workers,
            out,
            probe_count,
            json,
        } => cmd_stab_probe(&config, seed, workers, out, probe_count, json, env),
        Command::Rate { report, out, json } => cmd_rate(&report, out.as_deref(), json),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
        Err(Failure::Check) => EXIT_FAILURE,
    }
}

/// Real numbers in CSV: 17 significant digits, '.' separator.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Serialize)]
struct ConstantsRow {
    alpha: f64,
    v_alpha: f64,
    delta_alpha: f64,
    delta_alpha_sq: f64,
    mean_coefficient: f64,
}

fn cmd_constants(alphas: &[f64], json: bool) -> CliResult {
    let mut rows = Vec::with_capacity(alphas.len());
    for &a in alphas {
        let alpha = WeightExponent::new(a).map_err(|e| Failure::Usage(format!("alpha {a}: {e}")))?;
        let delta = delta_alpha(alpha).map_err(runtime)?;
        rows.push(ConstantsRow {
            alpha: a,
            v_alpha: v_alpha(alpha).map_err(runtime)?,
            delta_alpha: delta,
            delta_alpha_sq: delta * delta,
            mean_coefficient: exp_moment(a).map_err(runtime)?,
        });
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&rows).map_err(runtime)?);
    } else {
        println!(
            "{:>8} {:>24} {:>24} {:>24} {:>24}",
            "alpha", "V_alpha", "delta_alpha", "delta_alpha^2", "2^-a*Gamma(1+a)"
        );
        for r in &rows {
            println!(
                "{:>8} {:>24.16e} {:>24.16e} {:>24.16e} {:>24.16e}",
                r.alpha, r.v_alpha, r.delta_alpha, r.delta_alpha_sq, r.mean_coefficient
            );
        }
    }
    Ok(())
}

/// A config file, or a report.json whose embedded config is rerun.
fn load_config(path: &Path) -> std::result::Result<(RunConfig, Option<u64>), ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(&text) {
        if let (Some(payload), true) = (map.get("payload"), map.contains_key("meta")) {
            let config = payload.get("config").cloned().ok_or_else(|| {
                ConfigError(format!("{}: report has no payload.config", path.display()))
            })?;
            let cfg: RunConfig = serde_json::from_value(config)
                .map_err(|e| ConfigError(format!("{}: embedded config: {e}", path.display())))?;
            let seed = payload.get("seed").and_then(Value::as_u64);
            return Ok((cfg, seed));
        }
    }
    RunConfig::from_json(&text)
        .map(|c| (c, None))
        .map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
}

struct Resolved {
    config: RunConfig,
    seed: u64,
    workers: Option<usize>,
    out: PathBuf,
}

fn resolve_run(
    path: &Path,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    env: &dyn Fn(&str) -> Option<String>,
) -> std::result::Result<Resolved, ConfigError> {
    let (config, embedded_seed) = load_config(path)?;
    let seed = resolve(seed, config.seed.or(embedded_seed), ENV_SEED, env)?.unwrap_or(DEFAULT_SEED);
    let workers = resolve(workers, config.workers, ENV_WORKERS, env)?;
    if workers == Some(0) {
        return Err(ConfigError("workers must be >= 1".into()));
    }
    let out = resolve(out, config.output.as_ref().map(PathBuf::from), ENV_OUT, env)?
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Ok(Resolved {
        config,
        seed,
        workers,
        out,
    })
}

fn meta(started: SystemTime, clock: Instant, workers: Option<usize>) -> Value {
    json!({
        "artifact": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "started_unix_seconds": started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "wall_clock_seconds": clock.elapsed().as_secs_f64(),
        "workers": workers,
    })
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    std::fs::write(path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> CliResult {
    std::fs::create_dir_all(path)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", path.display())))
}

#[allow(clippy::too_many_arguments)]
fn cmd_sample(
    path: &Path,
    lambda: Option<f64>,
    seed: Option<u64>,
    stream: u64,
    out: Option<&Path>,
    json: bool,
    env: &dyn Fn(&str) -> Option<String>,
) -> CliResult {
    let (config, embedded) = load_config(path)?;
    let seed = resolve(seed, config.seed.or(embedded), ENV_SEED, env)?.unwrap_or(DEFAULT_SEED);
    let lambda = match lambda.or_else(|| config.lambda_grid.first().copied()) {
        Some(l) if l.is_finite() && l > 0.0 => l,
        other => return Err(Failure::Usage(format!("need a positive --lambda, got {other:?}"))),
    };
    let density = config.density_spec()?;
    let fs = config.test_functions()?;
    let spec = config.functional_spec(lambda)?;
    let mut rng = stream_rng(seed, stream);
    let points = match config.process {
        crate::experiments::ProcessKind::Poisson => {
            sample_poisson_with(&density, lambda, &mut rng).map_err(runtime)?
        }
        crate::experiments::ProcessKind::Binomial => {
            let n = (lambda * density.total_mass()).round() as usize;
            sample_binomial_with(&density, n, &mut rng)
        }
    };
    let stats = t_vector(&points, &fs, &spec).ok().map(|s| s.values);
    let mut csv = String::new();
    let d = points.dimension();
    let header: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    let _ = writeln!(csv, "{}", header.join(","));
    for p in points.points() {
        let row: Vec<String> = p.iter().map(|&v| num(v)).collect();
        let _ = writeln!(csv, "{}", row.join(","));
    }
    if let Some(out) = out {
        write_file(out, &csv)?;
    }
    if json {
        let pts: Vec<&[f64]> = points.points().collect();
        let doc = json!({
            "lambda": lambda,
            "seed": seed,
            "stream": stream,
            "count": points.len(),
            "statistics": stats,
            "points": pts,
        });
        println!("{}", serde_json::to_string_pretty(&doc).map_err(runtime)?);
    } else if out.is_none() {
        print!("{csv}");
    } else {
        println!("{} points at lambda {lambda}", points.len());
        if let Some(s) = stats {
            println!("statistics: {s:?}");
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

fn run_checks(report: &ExperimentReport, checks: &ChecksConfig) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let k = checks.se_multiplier;
    for l in &report.lambdas {
        for r in &l.regions {
            if let Some(t) = r.target_mean {
                let tol = (k * r.se_scaled_mean).max(checks.mean_abs_tolerance.unwrap_or(0.0));
                out.push(CheckOutcome {
                    name: format!("lambda={} region={} scaled_mean", l.lambda, r.region),
                    value: r.scaled_mean,
                    bound: format!("{t} +/- {tol}"),
                    pass: (r.scaled_mean - t).abs() <= tol,
                });
            }
            if let Some(t) = r.target_var {
                let tol = (k * r.se_scaled_var).max(checks.var_abs_tolerance.unwrap_or(0.0));
                out.push(CheckOutcome {
                    name: format!("lambda={} region={} scaled_var", l.lambda, r.region),
                    value: r.scaled_var,
                    bound: format!("{t} +/- {tol}"),
                    pass: (r.scaled_var - t).abs() <= tol,
                });
            }
        }
        if let (Some(max), Some(d)) = (checks.max_joint_discrepancy, l.joint_discrepancy) {
            out.push(CheckOutcome {
                name: format!("lambda={} joint_discrepancy", l.lambda),
                value: d,
                bound: format!("<= {max}"),
                pass: d <= max,
            });
        }
        if let Some(max) = checks.max_abs_correlation {
            let m = l.correlation.len();
            for i in 0..m {
                for j in (i + 1)..m {
                    let c = l.correlation[i][j];
                    out.push(CheckOutcome {
                        name: format!("lambda={} corr_{i}_{j}", l.lambda),
                        value: c,
                        bound: format!("|.| <= {max}"),
                        pass: c.abs() <= max,
                    });
                }
            }
        }
    }
    if let Some((lo, hi)) = checks.rate_band {
        let slope = report.rate.as_ref().map_or(f64::NAN, |r| r.slope);
        out.push(CheckOutcome {
            name: "rate_slope".into(),
            value: slope,
            bound: format!("[{lo}, {hi}]"),
            pass: (lo..=hi).contains(&slope),
        });
    }
    out
}

/// One row per (lambda, region).
pub fn summary_csv(report: &ExperimentReport) -> String {
    let m = report.lambdas.first().map_or(0, |l| l.regions.len());
    let mut header = vec![
        "lambda", "region", "mean", "se_mean", "scaled_mean", "var", "se_var", "scaled_var",
        "target_mean", "target_var", "ks", "joint_discrepancy",
    ]
    .into_iter()
    .map(String::from)
    .collect::<Vec<_>>();
    for i in 0..m {
        for j in (i + 1)..m {
            header.push(format!("corr_{i}_{j}"));
        }
    }
    let mut s = header.join(",");
    s.push('\n');
    for l in &report.lambdas {
        for r in &l.regions {
            let mut row = vec![
                num(l.lambda),
                r.region.to_string(),
                num(r.mean),
                num(r.se_mean),
                num(r.scaled_mean),
                num(r.var),
                num(r.se_var),
                num(r.scaled_var),
                opt_num(r.target_mean),
                opt_num(r.target_var),
                opt_num(r.ks),
                opt_num(l.joint_discrepancy),
            ];
            for i in 0..m {
                for j in (i + 1)..m {
                    row.push(num(l.correlation[i][j]));
                }
            }
            s.push_str(&row.join(","));
            s.push('\n');
        }
    }
    s
}

pub fn rate_csv(report: &ExperimentReport) -> String {
    let mut s = String::from("slope,intercept,r_squared,points_used,censored_lambdas\n");
    let censored: Vec<String> = report.censored_lambdas.iter().map(|&l| num(l)).collect();
    match &report.rate {
        Some(r) => {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                num(r.slope),
                num(r.intercept),
                num(r.r_squared),
                r.points_used,
                censored.join(";")
            );
        }
        None => {
            let _ = writeln!(s, ",,,0,{}", censored.join(";"));
        }
    }
    s
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    path: &Path,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    check: bool,
    json_out: bool,
    env: &dyn Fn(&str) -> Option<String>,
) -> CliResult {
    let started = SystemTime::now();
    let clock = Instant::now();
    let run = resolve_run(path, seed, workers, out, env)?;
    let plan = run.config.plan(run.seed)?;
    let hash = run.config.hash(run.seed);
    let progress = |l: &crate::experiments::LambdaReport| {
        let means: Vec<String> = l.regions.iter().map(|r| format!("{:.6}", r.scaled_mean)).collect();
        let vars: Vec<String> = l.regions.iter().map(|r| format!("{:.6}", r.scaled_var)).collect();
        eprintln!(
            "lambda {}: scaled mean [{}], scaled var [{}], joint discrepancy {}",
            l.lambda,
            means.join(", "),
            vars.join(", "),
            l.joint_discrepancy.map_or("n/a".into(), |d| format!("{d:.5}"))
        );
    };
    let report = run_plan(
        &plan,
        &RunOptions {
            workers: run.workers,
            progress: Some(&progress),
        },
    )
    .map_err(runtime)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let checks = if check {
        run_checks(&report, &run.config.checks.clone().unwrap_or_default())
    } else {
        Vec::new()
    };
    let mut embedded = run.config.clone();
    embedded.seed = Some(run.seed);
    embedded.workers = None;
    embedded.output = None;
    let payload = json!({
        "config_hash": hash,
        "seed": run.seed,
        "config": embedded,
        "report": report,
        "checks": checks,
    });
    let doc = json!({ "meta": meta(started, clock, run.workers), "payload": payload });

    create_dir(&run.out)?;
    write_file(&run.out.join("report.json"), &serde_json::to_string_pretty(&doc).map_err(runtime)?)?;
    write_file(&run.out.join("summary.csv"), &summary_csv(&report))?;
    write_file(&run.out.join("rate_fit.csv"), &rate_csv(&report))?;

    if json_out {
        println!("{}", serde_json::to_string_pretty(&doc).map_err(runtime)?);
    } else {
        print!("{}", summary_csv(&report));
        if let Some(r) = &report.rate {
            println!("rate slope {:.4} (R^2 {:.3}, {} points)", r.slope, r.r_squared, r.points_used);
        }
        println!("wrote {}", run.out.display());
    }
    let failed: Vec<&CheckOutcome> = checks.iter().filter(|c| !c.pass).collect();
    for c in &checks {
        eprintln!(
            "{} {}: {} (bound {})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.bound
        );
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

/// `(t, P[R > t], censored count)` rows.
pub fn tail_csv(result: &StabilizationProbeResult) -> String {
    let mut s = String::from("t,tail_prob,censored_count\n");
    for ((t, p), c) in result.t_grid.iter().zip(&result.tail_probs).zip(&result.censored_counts) {
        let _ = writeln!(s, "{},{},{}", num(*t), num(*p), c);
    }
    s
}

#[allow(clippy::too_many_arguments)]
fn cmd_stab_probe(
    path: &Path,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    probe_count: Option<usize>,
    json_out: bool,
    env: &dyn Fn(&str) -> Option<String>,
) -> CliResult {
    let started = SystemTime::now();
    let clock = Instant::now();
    let run = resolve_run(path, seed, workers, out, env)?;
    let probe = run.config.probe.clone().unwrap_or_default();
    let mut options = probe.options();
    if let Some(n) = probe_count {
        options.probe_count = n;
    }
    if options.probe_count == 0 {
        return Err(Failure::Usage("probe_count must be >= 1".into()));
    }
    let lambda = probe
        .lambda
        .or_else(|| run.config.lambda_grid.first().copied())
        .ok_or_else(|| Failure::Usage("probe.lambda or lambda_grid is required".into()))?;
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return Err(Failure::Usage(format!("probe lambda must be >= 1, got {lambda}")));
    }
    let density = run.config.density_spec()?;
    let spec = run.config.functional_spec(lambda)?;
    let xi = move |cfg: &crate::point_process::PointConfiguration, i: usize| xi_at(cfg, i, &spec);
    let result = with_workers(run.workers, || {
        stabilization_probe_with(&density, lambda, &options, run.seed, &xi)
    })
    .map_err(|e| Failure::Usage(e.to_string()))?
    .map_err(runtime)?;

    let payload = json!({
        "config_hash": run.config.hash(run.seed),
        "seed": run.seed,
        "lambda": lambda,
        "options": options,
        "fit": result.fit,
        "t_grid": result.t_grid,
        "tail_probs": result.tail_probs,
        "censored_counts": result.censored_counts,
        "radii": result.radii,
        "censored": result.censored,
    });
    let doc = json!({ "meta": meta(started, clock, run.workers), "payload": payload });
    create_dir(&run.out)?;
    write_file(&run.out.join("probe.json"), &serde_json::to_string_pretty(&doc).map_err(runtime)?)?;
    write_file(&run.out.join("probe_tail.csv"), &tail_csv(&result))?;
    if json_out {
        println!("{}", serde_json::to_string_pretty(&doc).map_err(runtime)?);
    } else {
        print!("{}", tail_csv(&result));
        match &result.fit {
            Some(f) => println!(
                "decay slope {:.4} (R^2 {:.3}, {} grid points)",
                f.slope, f.r_squared, f.points_used
            ),
            None => println!("too few tail points for a decay fit"),
        }
        println!("wrote {}", run.out.display());
    }
    Ok(())
}

fn cmd_rate(path: &Path, out: Option<&Path>, json_out: bool) -> CliResult {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let report_value = doc
        .get("payload")
        .and_then(|p| p.get("report"))
        .cloned()
        .ok_or_else(|| Failure::Usage(format!("{}: missing payload.report", path.display())))?;
    let mut report: ExperimentReport = serde_json::from_value(report_value)
        .map_err(|e| Failure::Usage(format!("{}: payload.report: {e}", path.display())))?;
    let mut warnings = Vec::new();
    let (rate, censored) = rate_over(&report.lambdas, report.replicates, &mut warnings);
    report.rate = rate;
    report.censored_lambdas = censored;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if let Some(out) = out {
        write_file(out, &rate_csv(&report))?;
    }
    if json_out {
        let doc = json!({ "rate": report.rate, "censored_lambdas": report.censored_lambdas });
        println!("{}", serde_json::to_string_pretty(&doc).map_err(runtime)?);
    } else {
        print!("{}", rate_csv(&report));
    }
    if report.rate.is_none() {
        return Err(Failure::Runtime("no rate fit: fewer than 3 usable intensities".into()));
    }
    Ok(())
}
