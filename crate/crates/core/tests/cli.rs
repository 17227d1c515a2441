//! End-to-end runs of the `stabclt` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn stabclt(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabclt"))
        .args(args)
        .current_dir(dir)
        .env_remove("STABCLT_SEED")
        .env_remove("STABCLT_WORKERS")
        .env_remove("STABCLT_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn minimal() -> Value {
    json!({
        "dimension": 1,
        "density": { "support": [{ "lower": [0], "upper": [1] }], "homogeneous": true },
        "regions": [[{ "lower": [0], "upper": [1] }]],
        "functional": { "family": "nn_directed", "alpha": 1.0 },
        "lambda_grid": [50],
        "replicates": 10
    })
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn constants_table_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = stabclt(&["constants", "1", "3", "4"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 4, "{text}");
    assert!(text.contains("1.6666666666666"), "V_1 = 1/6: {text}");

    let o = stabclt(&["constants", "2", "--json"], dir.path());
    assert_eq!(code(&o), 0);
    let rows: Value = serde_json::from_slice(&o.stdout).unwrap();
    let v = rows[0]["v_alpha"].as_f64().unwrap();
    assert!((v - 85.0 / 108.0).abs() < 1e-12);
    assert!((rows[0]["delta_alpha"].as_f64().unwrap() + 0.5).abs() < 1e-12);
}

#[test]
fn nonpositive_alpha_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&stabclt(&["constants", "0"], dir.path())), 2);
    assert_eq!(code(&stabclt(&["constants", "-1"], dir.path())), 2);
    assert_eq!(code(&stabclt(&["no-such-command"], dir.path())), 2);
}

#[test]
fn simulate_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &minimal());
    let o = stabclt(&["simulate", &cfg, "--seed", "42", "--out", "run"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("lambda 50"), "progress line missing");

    let doc = read_json(&dir.path().join("run/report.json"));
    for key in ["artifact", "version", "started_unix_seconds", "wall_clock_seconds", "workers"] {
        assert!(doc["meta"].get(key).is_some(), "meta.{key}");
    }
    let payload = &doc["payload"];
    for key in ["config_hash", "seed", "config", "report", "checks"] {
        assert!(payload.get(key).is_some(), "payload.{key}");
    }
    assert_eq!(payload["seed"], 42);
    assert_eq!(payload["config_hash"].as_str().unwrap().len(), 64);
    let row = &payload["report"]["lambdas"][0]["regions"][0];
    for key in ["mean", "se_mean", "var", "se_var", "scaled_mean", "scaled_var", "target_mean", "target_var"] {
        assert!(row.get(key).is_some(), "region row {key}");
    }

    let summary = std::fs::read_to_string(dir.path().join("run/summary.csv")).unwrap();
    let header = summary.lines().next().unwrap();
    assert!(header.starts_with("lambda,region,mean,se_mean,scaled_mean,var,se_var,scaled_var,target_mean,target_var"));
    assert_eq!(summary.lines().count(), 2);
    assert!(dir.path().join("run/rate_fit.csv").exists());
}

#[test]
fn seeded_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &minimal());
    for out in ["a", "b"] {
        assert_eq!(code(&stabclt(&["simulate", &cfg, "--seed", "42", "--out", out], dir.path())), 0);
    }
    let a = read_json(&dir.path().join("a/report.json"));
    let b = read_json(&dir.path().join("b/report.json"));
    assert_eq!(a["payload"], b["payload"]);

    // rerunning from the report reproduces it
    let report = dir.path().join("a/report.json");
    let o = stabclt(&["simulate", report.to_str().unwrap(), "--out", "c"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let c = read_json(&dir.path().join("c/report.json"));
    assert_eq!(a["payload"], c["payload"]);
}

#[test]
fn seed_precedence_flag_over_config_over_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &minimal());
    let with_env = |args: &[&str], seed: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_stabclt"))
            .args(args)
            .current_dir(dir.path())
            .env("STABCLT_SEED", seed)
            .env_remove("STABCLT_OUT")
            .env_remove("STABCLT_WORKERS")
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    };
    with_env(&["simulate", &cfg, "--out", "env"], "7");
    assert_eq!(read_json(&dir.path().join("env/report.json"))["payload"]["seed"], 7);
    with_env(&["simulate", &cfg, "--out", "flag", "--seed", "9"], "7");
    assert_eq!(read_json(&dir.path().join("flag/report.json"))["payload"]["seed"], 9);

    let mut seeded = minimal();
    seeded["seed"] = json!(11);
    let cfg2 = write(dir.path(), "s.json", &seeded);
    with_env(&["simulate", &cfg2, "--out", "cfg"], "7");
    assert_eq!(read_json(&dir.path().join("cfg/report.json"))["payload"]["seed"], 11);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = minimal();
    v.as_object_mut().unwrap().remove("density");
    let cfg = write(dir.path(), "missing.json", &v);
    let o = stabclt(&["simulate", &cfg, "--out", "x"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("density"), "{}", stderr(&o));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"dimension\": 1,\n  \"density\": [\n").unwrap();
    let o = stabclt(&["simulate", bad.to_str().unwrap(), "--out", "x"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let mut v = minimal();
    v["replicates"] = json!(1);
    let cfg = write(dir.path(), "n1.json", &v);
    assert_eq!(code(&stabclt(&["simulate", &cfg, "--out", "x"], dir.path())), 2);

    let cfg = write(dir.path(), "ok.json", &minimal());
    assert_eq!(code(&stabclt(&["simulate", &cfg, "--workers", "0", "--out", "x"], dir.path())), 2);
}

#[test]
fn failing_check_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = minimal();
    // a single intensity gives no rate fit, so any band fails
    v["checks"] = json!({ "rate_band": [-0.6, -0.4] });
    let cfg = write(dir.path(), "c.json", &v);
    let o = stabclt(&["simulate", &cfg, "--check", "--out", "x"], dir.path());
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).contains("FAIL rate_slope"));
    // without --check the same run succeeds
    assert_eq!(code(&stabclt(&["simulate", &cfg, "--out", "y"], dir.path())), 0);
}

#[test]
fn rate_refits_from_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = minimal();
    v["lambda_grid"] = json!([20, 80, 320]);
    v["functional"]["alpha"] = json!(3.0);
    v["replicates"] = json!(400);
    let cfg = write(dir.path(), "c.json", &v);
    assert_eq!(code(&stabclt(&["simulate", &cfg, "--seed", "3", "--out", "r"], dir.path())), 0);
    let report = dir.path().join("r/report.json");
    let o = stabclt(&["rate", report.to_str().unwrap(), "--json"], dir.path());
    let fit: Value = serde_json::from_slice(&o.stdout).unwrap();
    let stored = &read_json(&report)["payload"]["report"];
    if stored["rate"].is_null() {
        assert_eq!(code(&o), 1);
    } else {
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_eq!(fit["rate"], stored["rate"]);
    }

    // a one-intensity report has nothing to fit
    let cfg = write(dir.path(), "one.json", &minimal());
    assert_eq!(code(&stabclt(&["simulate", &cfg, "--out", "one"], dir.path())), 0);
    let one = dir.path().join("one/report.json");
    assert_eq!(code(&stabclt(&["rate", one.to_str().unwrap()], dir.path())), 1);
}

#[test]
fn stab_probe_outputs_a_decaying_tail() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = minimal();
    v["lambda_grid"] = json!([200]);
    v["probe"] = json!({ "lambda": 200, "probe_count": 200 });
    let cfg = write(dir.path(), "c.json", &v);

    assert_eq!(code(&stabclt(&["stab-probe", &cfg, "--probe-count", "0", "--out", "p"], dir.path())), 2);

    let o = stabclt(&["stab-probe", &cfg, "--seed", "5", "--out", "p"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc = read_json(&dir.path().join("p/probe.json"));
    let slope = doc["payload"]["fit"]["slope"].as_f64().unwrap();
    assert!(slope < 0.0, "slope {slope}");
    let tail = std::fs::read_to_string(dir.path().join("p/probe_tail.csv")).unwrap();
    let mut lines = tail.lines();
    assert_eq!(lines.next(), Some("t,tail_prob,censored_count"));
    let probs: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(probs.windows(2).all(|w| w[1] <= w[0]), "{probs:?}");
}

#[test]
fn sample_writes_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &minimal());
    let o = stabclt(&["sample", &cfg, "--lambda", "100", "--seed", "1", "--json"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let n = doc["count"].as_u64().unwrap() as usize;
    assert_eq!(doc["points"].as_array().unwrap().len(), n);

    let o = stabclt(&["sample", &cfg, "--lambda", "100", "--seed", "1", "--out", "pts.csv"], dir.path());
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("pts.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x0"));
    assert_eq!(csv.lines().count(), n + 1);
    assert!(csv.lines().skip(1).all(|l| (0.0..=1.0).contains(&l.parse::<f64>().unwrap())));
}
