use std::process::{Command, Output};

use serde_json::Value;

fn adoption(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adoption")).args(args).output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = adoption(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn help_for_every_subcommand() {
    assert!(adoption(&["--help"]).status.success());
    for cmd in ["fit", "phase", "crlb", "test", "compare", "threshold", "simulate", "benchmark", "pilot", "gradient"] {
        let out = adoption(&[cmd, "--help"]);
        assert!(out.status.success(), "{cmd}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn phase_reference_curve() {
    let v = json(&["phase", "--n0", "3", "--alpha", "0.8", "--umax", "2", "--beta", "0.25"]);
    let text = v.to_string();
    assert!(text.contains("trough") || text.contains("Trough"), "{text}");
    let ts = v.pointer("/phase/t_star").or_else(|| v.pointer("/t_star")).and_then(Value::as_f64).unwrap();
    assert!((ts - 2.852).abs() < 1e-3);
}

#[test]
fn fit_writes_file_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit.json");
    let plot = dir.path().join("plot.csv");
    let st = adoption(&[
        "fit",
        "--data",
        "builtin:synthetic21",
        "--out",
        out.to_str().unwrap(),
        "--plot",
        plot.to_str().unwrap(),
    ]);
    assert!(st.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v.pointer("/fit/family").and_then(Value::as_str), Some("two_comp"));
    assert_eq!(v.pointer("/fit/converged"), Some(&Value::Bool(true)));
    let csv = std::fs::read_to_string(&plot).unwrap();
    assert!(csv.starts_with("series,t,value\n"));
    assert!(csv.lines().count() > 42);
}

#[test]
fn twocomp_beats_bass_on_synthetic21() {
    let aic = |family: &str| {
        json(&["fit", "--data", "builtin:synthetic21", "--family", family]).pointer("/fit/aic").and_then(Value::as_f64).unwrap()
    };
    assert!(aic("twocomp") < aic("bass"));
}

#[test]
fn simulate_csv_roundtrips_through_fit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.csv");
    let st = adoption(&["simulate", "--sigma", "0.01", "--n-points", "41", "--seed", "5", "--out", path.to_str().unwrap()]);
    assert!(st.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t,y\n"));
    assert_eq!(text.lines().count(), 42);
    let v = json(&["fit", "--data", path.to_str().unwrap()]);
    let theta = v.pointer("/fit/theta").and_then(Value::as_array).unwrap();
    let alpha = theta[1].as_f64().unwrap();
    assert!((alpha - 0.8).abs() < 0.1, "{alpha}");
}

#[test]
fn compare_writes_csv_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let st = adoption(&["compare", "--data", "builtin:enterprise78", "--csv", path.to_str().unwrap()]);
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let table = std::fs::read_to_string(&path).unwrap();
    assert_eq!(table.lines().count(), 7);
}

#[test]
fn economics_commands() {
    let v = json(&["threshold", "--r-chat", "0.51", "--delta-tau", "0.3", "--delta-phi", "0.1", "--mu-c", "1", "--cf-uniform", "0.5,1.5", "--gap", "0.3"]);
    let text = v.to_string();
    assert!(text.contains("0.91"), "{text}");
    let g = json(&["gradient"]);
    assert!(g.to_string().contains("0.1678"));
    json(&["pilot", "--n-tasks", "50"]);
}

#[test]
fn exit_codes() {
    assert_eq!(adoption(&["phase", "--n0", "-1"]).status.code(), Some(2));
    assert_eq!(adoption(&["fit", "--data", "/does/not/exist.csv"]).status.code(), Some(2));
    assert_eq!(adoption(&["crlb", "--replicates", "5"]).status.code(), Some(2));
    assert_eq!(adoption(&["fit", "--data", "builtin:enterprise78"]).status.code(), Some(3));
    assert_eq!(adoption(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn benchmark_config_errors_are_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "depths = 0.2\nwidgets = 3\n").unwrap();
    let out = adoption(&["benchmark", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
