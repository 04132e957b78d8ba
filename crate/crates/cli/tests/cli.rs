use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn kfbd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kfbd"))
        .args(args)
        .env_remove("KFBD_THREADS")
        .output()
        .expect("run kfbd")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn samples() -> (TempDir, String, String) {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.csv", "x,y\n0.0,0.1\n1.0,-0.3\n2.0,0.4\n");
    let q = write(dir.path(), "q.csv", "x,y\n0.5,0.0\n1.5,0.2\n");
    (dir, p.display().to_string(), q.display().to_string())
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn square_value_matches_mmd_bytes() {
    let (_dir, p, q) = samples();
    let out = kfbd(&["divergence", &p, &q, "--generator", "square"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let field = |key: &str| {
        let line = text
            .lines()
            .find(|l| l.trim_start().starts_with(&format!("\"{key}\":")))
            .unwrap();
        line.split_once(':').unwrap().1.trim().trim_end_matches(',').to_string()
    };
    assert_eq!(field("value"), field("mmd_sq"));
}

#[test]
fn identical_inputs_give_zero() {
    let (_dir, p, _) = samples();
    for g in ["square", "exp_centered", "logcosh"] {
        let out = kfbd(&["divergence", &p, &p, "--generator", g]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(json(&out)["value"].as_f64().unwrap().abs(), 0.0, "{g}");
    }
}

#[test]
fn missing_file_is_input_error() {
    let (dir, p, _) = samples();
    let missing = dir.path().join("absent.csv").display().to_string();
    let out = kfbd(&["divergence", &p, &missing]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(&missing));
}

#[test]
fn bad_arguments_are_input_errors() {
    assert_eq!(kfbd(&["divergence"]).status.code(), Some(2));
    assert_eq!(kfbd(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(kfbd(&["table2", "--json", "--csv"]).status.code(), Some(2));
    assert_eq!(kfbd(&["table2", "--R", "0"]).status.code(), Some(2));
    assert_eq!(kfbd(&["--help"]).status.code(), Some(0));
}

#[test]
fn mismatched_dimensions_are_input_errors() {
    let (dir, p, _) = samples();
    let q = write(dir.path(), "one.csv", "1.0\n2.0\n").display().to_string();
    assert_eq!(kfbd(&["divergence", &p, &q]).status.code(), Some(2));
}

#[test]
fn config_rejects_unknown_keys() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"seed": 1, "sede": 2}"#);
    let out = kfbd(&["--config", cfg.to_str().unwrap(), "table2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sede"));
    assert!(out.stdout.is_empty());
}

#[test]
fn config_supplies_inputs_relative_to_its_directory() {
    let (dir, _, _) = samples();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"inputs": ["p.csv", "q.csv"], "generator": {"profile": "square"}, "kernel": {"family": "laplace", "scale": 2.0}}"#,
    );
    let out = kfbd(&["--config", cfg.to_str().unwrap(), "divergence"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["kernel"], "laplace:2");
    assert!(v["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn out_file_is_written_whole_and_not_on_failure() {
    let (dir, p, q) = samples();
    let target = dir.path().join("report.json");
    let t = target.to_str().unwrap();
    let out = kfbd(&["--out", t, "divergence", &p, &q]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert!(v["value"].is_number());

    let other = dir.path().join("never.json");
    let out = kfbd(&["--out", other.to_str().unwrap(), "divergence", &p, "/nonexistent.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!other.exists());
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 3);
}

#[test]
fn csv_output_has_header_and_row() {
    let (_dir, p, q) = samples();
    let out = kfbd(&["--csv", "divergence", &p, &q, "--generator", "logcosh"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("p,q,kernel,generator,value"));
    assert!(lines.next().unwrap().contains("logcosh"));
}

#[test]
fn operator_divergence_reduces_to_square() {
    let (_dir, p, q) = samples();
    let base = json(&kfbd(&["divergence", &p, &q, "--generator", "square"]));
    let op = json(&kfbd(&[
        "divergence",
        &p,
        &q,
        "--generator",
        "square",
        "--operator",
        "identity",
    ]));
    let (a, b) = (base["value"].as_f64().unwrap(), op["operator_value"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{a} vs {b}");
}

#[test]
fn sandwich_square_is_tight() {
    let out = kfbd(&[
        "verify",
        "--suite",
        "sandwich",
        "--generator",
        "square",
        "--trials",
        "200",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["results"][0];
    assert_eq!(r["violations"], 0);
    assert!(r["worst_lower_gap"].as_f64().unwrap() <= 1e-12);
    assert!(r["worst_upper_gap"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn sandwich_power_notes_vacuous_lower_bound() {
    let out = kfbd(&[
        "verify",
        "--suite",
        "sandwich",
        "--generator",
        "power",
        "--p",
        "3",
        "--trials",
        "200",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["results"][0];
    assert_eq!(r["m"].as_f64(), Some(0.0));
    assert_eq!(r["lower_bound_vacuous"], true);
}

#[test]
fn audit_refuses_power() {
    let out = kfbd(&["audit-bound", "--generator", "power", "--p", "3", "--n-grid", "100"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let (dir, p, q) = samples();
    let one_d = write(dir.path(), "fit.csv", "0.1\n-0.4\n0.3\n1.2\n-0.8\n0.05\n");
    let one_d = one_d.to_str().unwrap();
    let cases: [Vec<&str>; 3] = [
        vec!["verify", "--suite", "findim", "--seed", "42"],
        vec![
            "sandwich-scan",
            "--generator",
            "logcosh",
            "--pairs",
            "300",
            "--seed",
            "9",
        ],
        vec![
            "fit",
            one_d,
            "--seed",
            "3",
            "--model-sample-size",
            "100",
            "--restarts",
            "1",
        ],
    ];
    for args in cases {
        let (a, b) = (kfbd(&args), kfbd(&args));
        assert_eq!(
            a.status.code(),
            Some(0),
            "{args:?}: {}",
            String::from_utf8_lossy(&a.stderr)
        );
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let a = kfbd(&["divergence", &p, &q]);
    assert_eq!(a.stdout, kfbd(&["divergence", &p, &q]).stdout);
}

#[test]
fn table2_csv_is_default_and_agrees() {
    let out = kfbd(&["table2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().any(|l| l.starts_with("logcosh")));
}
