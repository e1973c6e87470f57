use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn symq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symq")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn error_kind(out: &Output) -> String {
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).expect("error is JSON");
    v["error"].as_str().unwrap().to_string()
}

#[test]
fn w_fourth_moment_example() {
    let text = stdout(&symq(&["moments", "--family", "w", "--axis", "x", "--order", "4", "--n", "10"]));
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let exact_col = header.iter().position(|h| *h == "exact").unwrap();
    let exact: f64 = row[exact_col].parse().unwrap();
    assert!((exact - 1216.0).abs() < 1e-9);
}

#[test]
fn project_writes_cloud_and_sidecar_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ghz.xyz");
    let out_s = out.to_str().unwrap();
    let args = ["project", "--family", "ghz", "--n", "18", "--out", out_s];
    stdout(&symq(&args));
    let first = fs::read(&out).unwrap();
    let meta_path = dir.path().join("ghz.xyz.meta.json");
    let first_meta = fs::read(&meta_path).unwrap();
    stdout(&symq(&args));
    assert_eq!(first, fs::read(&out).unwrap());
    assert_eq!(first_meta, fs::read(&meta_path).unwrap());

    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 1330);
    let total: f64 = text.lines().map(|l| l.split_whitespace().nth(3).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total / 2f64.powi(18) - 1.0).abs() < 1e-9);
    let meta: serde_json::Value = serde_json::from_slice(&first_meta).unwrap();
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(meta["tool"], "symq");
}

#[test]
fn thread_cap_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: Option<&str>| {
        let path = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_symq"));
        cmd.args(["project", "--family", "w", "--n", "10", "--bruteforce", "--format", "csv", "--out"]).arg(&path);
        if let Some(t) = threads {
            cmd.env("SYMQ_THREADS", t);
        }
        assert!(cmd.output().unwrap().status.success());
        fs::read(path).unwrap()
    };
    assert_eq!(run("a.csv", None), run("b.csv", Some("1")));
}

#[test]
fn validate_passes_at_eight_qubits() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&symq(&["validate", "--n", "8"]))).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["max_relative_error"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v["states"].as_array().unwrap().len(), 11);
}

#[test]
fn localize_reports_ghz_as_delocalized() {
    let text = stdout(&symq(&["localize", "--family", "ghz", "--sweep", "8:128:*2"]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["localized"], false);
    assert_eq!(v["delocalized"], serde_json::json!([true, false, false]));
}

#[test]
fn gaussian_reports_spherical_singlets() {
    let text = stdout(&symq(&["gaussian", "--family", "biseparable_a", "--a", "-1", "--n", "8"]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((v["spherical"]["r"].as_f64().unwrap() - 3.0).abs() < 1e-9);
}

#[test]
fn figures_emit_all_clouds() {
    let dir = tempfile::tempdir().unwrap();
    stdout(&symq(&["figures", "--out", dir.path().to_str().unwrap()]));
    for name in ["coherent_n18", "w_n18", "ghz_n18", "shifted_ghz_n8"] {
        assert!(Path::new(&dir.path().join(format!("{name}.xyz"))).exists(), "{name}");
        assert!(dir.path().join(format!("{name}_envelope.json")).exists(), "{name}");
        assert!(dir.path().join(format!("{name}.xyz.meta.json")).exists(), "{name}");
    }
}

#[test]
fn closed_form_tables_have_all_rows() {
    let text = stdout(&symq(&["moments", "--paper-tables", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 9);
}

#[test]
fn errors_are_machine_readable() {
    assert_eq!(error_kind(&symq(&["project", "--family", "nope", "--n", "4"])), "unknown_family");
    assert_eq!(error_kind(&symq(&["localize", "--family", "ghz", "--sweep", "8,8"])), "cli");
    assert_eq!(error_kind(&symq(&["project", "--family", "graph_pairs", "--n", "5"])), "invalid_spec");
    assert_eq!(error_kind(&symq(&["gaussian", "--family", "w", "--n", "8", "--format", "xyz"])), "invalid_argument");
    assert_eq!(error_kind(&symq(&["frobnicate"])), "usage");
}
