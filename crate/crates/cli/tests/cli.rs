use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn usd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_usd"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "0")
        .env_remove("USD_SEED")
        .output()
        .expect("run usd")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against a stored file; `UPDATE_GOLDEN=1` rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {name}"));
    assert_eq!(actual, expected, "output differs from {name}");
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

#[test]
fn curves_n3_csv_golden() {
    let o = usd(&["curves", "--n", "3", "--mu-min", "0", "--mu-max", "2", "--points", "5"]);
    assert_eq!(o.status.code(), Some(0));
    check_golden("curves_n3.csv", &stdout(&o));
}

#[test]
fn curves_n4_json_golden() {
    let o = usd(&[
        "curves", "--n", "4", "--mu-min", "0.5", "--mu-max", "1.5", "--points", "3", "--m", "50", "--trials", "300",
        "--seed", "11", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    check_golden("curves_n4.json", &stdout(&o));
}

#[test]
fn qkd_csv_golden() {
    let o = usd(&["qkd", "--pulses", "2000", "--mu", "1.2", "--m", "100", "--seed", "5", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    check_golden("qkd.csv", &stdout(&o));
}

#[test]
fn simulate_json_golden() {
    let o =
        usd(&["simulate", "--scheme", "bs3-feedback", "--mu", "0.5", "--m", "60", "--trials", "1000", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    check_golden("simulate.json", &stdout(&o));
}

#[test]
fn curve_columns_and_values() {
    let o = usd(&["curves", "--n", "4", "--mu-min", "0", "--mu-max", "1", "--points", "3"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "mu,p_optimal,p_simple_analytic,p_feedback_analytic,p_pol_analytic");
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    assert!((last[2] - 0.097_863_717_634_980_119).abs() < 1e-11);
    assert!((last[3] - 0.205_158_651_497_294_17).abs() < 1e-11);
    assert!((last[4] - 0.175_406_875_295_465_47).abs() < 1e-11);
}

#[test]
fn tiny_grid_is_near_zero() {
    let o = usd(&["curves", "--points", "2", "--mu-min", "0", "--mu-max", "0.001"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        for v in r.split(',').skip(1) {
            assert!(v.parse::<f64>().unwrap() < 1e-5);
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["simulate", "--scheme", "bsn-feedback:5", "--mu", "1", "--trials", "5000", "--seed", "9"];
    assert_eq!(usd(&args).stdout, usd(&args).stdout);
}

#[test]
fn reports_differ_only_in_timestamp() {
    let args = ["qkd", "--pulses", "500", "--seed", "2"];
    let a = usd(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_usd")).args(args).env("SOURCE_DATE_EPOCH", "86400").output().unwrap();
    let (mut ja, mut jb) = (json(&a), json(&b));
    assert_ne!(ja["config"]["generated_at"], jb["config"]["generated_at"]);
    ja["config"]["generated_at"] = serde_json::Value::Null;
    jb["config"]["generated_at"] = serde_json::Value::Null;
    assert_eq!(ja, jb);
}

#[test]
fn saved_config_and_report_replay_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let report = dir.path().join("report.json");
    let o = usd(&[
        "simulate",
        "--scheme",
        "bs4-feedback",
        "--mu",
        "0.7",
        "--m",
        "200",
        "--trials",
        "4000",
        "--save-config",
        cfg.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let original = std::fs::read_to_string(&report).unwrap();
    let from_cfg = usd(&["replay", cfg.to_str().unwrap()]);
    let from_report = usd(&["replay", report.to_str().unwrap()]);
    assert_eq!(stdout(&from_cfg), original);
    assert_eq!(stdout(&from_report), original);
}

#[test]
fn csv_runs_replay_too() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let o = usd(&[
        "curves",
        "--n",
        "5",
        "--points",
        "4",
        "--trials",
        "200",
        "--m",
        "40",
        "--save-config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(stdout(&usd(&["replay", cfg.to_str().unwrap()])), stdout(&o));
}

#[test]
fn seed_from_environment_and_flag_precedence() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_usd"));
        c.args(["simulate", "--scheme", "bs3-simple", "--trials", "3000", "--format", "csv"]);
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        match env {
            Some(e) => c.env("USD_SEED", e),
            None => c.env_remove("USD_SEED"),
        };
        c.output().unwrap().stdout
    };
    assert_ne!(run(Some("77"), None), run(None, None));
    assert_eq!(run(Some("77"), None), run(None, Some("77")));
    assert_eq!(run(Some("1"), Some("77")), run(None, Some("77")));
}

#[test]
fn blind_detector_never_succeeds() {
    let o = usd(&["simulate", "--scheme", "bs4-feedback", "--eta", "0", "--trials", "1000"]);
    assert_eq!(json(&o)["results"]["estimate"]["p_hat"], 0.0);
}

#[test]
fn qkd_report_fields() {
    let o = usd(&["qkd", "--pulses", "3000", "--mu", "0.1"]);
    let j = json(&o);
    assert_eq!(j["schema_version"], 1);
    assert_eq!(j["results"]["stats"]["error_rate"], 0.0);
    assert_eq!(j["results"]["stats"]["errors"], 0);
    for key in ["a", "b", "c", "d", "total"] {
        assert!(j["results"]["key_fractions"][key].is_number());
    }
    assert_eq!(j["checks"][0]["passed"], true);
}

#[test]
fn exit_codes() {
    assert_eq!(usd(&["--help"]).status.code(), Some(0));
    assert_eq!(usd(&["curves", "--bogus"]).status.code(), Some(1));
    assert_eq!(usd(&["curves", "--mu-min", "2", "--mu-max", "1"]).status.code(), Some(1));
    assert_eq!(usd(&["curves", "--points", "1"]).status.code(), Some(1));
    assert_eq!(usd(&["simulate", "--scheme", "nope"]).status.code(), Some(1));
    assert_eq!(usd(&["simulate", "--scheme", "bs4-feedback", "--n", "3"]).status.code(), Some(1));
    assert_eq!(usd(&["qkd", "--pulses", "0"]).status.code(), Some(1));
    assert_eq!(usd(&["curves", "--out", "/nonexistent-dir/x.csv"]).status.code(), Some(2));
    assert_eq!(usd(&["replay", "/nonexistent-dir/cfg.json"]).status.code(), Some(2));
}

#[test]
fn validate_quick_passes() {
    let o = usd(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(&o);
    assert_eq!(j["results"]["passed"], true);
    assert!(j["checks"].as_array().unwrap().len() >= 8);
}
