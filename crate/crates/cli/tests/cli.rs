use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const MIXED_DAG: &str = "node X1 continuous\nnode X2 continuous\nnode X3 ordinal 4\n\
                         edge X1 -> X2 : ls\nedge X1 -> X3 : ls\nedge X2 -> X3 : ls\n";

fn tramdag(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tramdag"))
        .args(args)
        .current_dir(dir)
        .env_remove("TRAMDAG_SEED")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = tramdag(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn fitted_mixed(dir: &Path) {
    ok(dir, &["dgp", "--preset", "mixed_ls", "--n", "1500", "--seed", "4", "--out", "data.csv"]);
    fs::write(dir.join("dag.txt"), MIXED_DAG).unwrap();
    ok(dir, &["fit", "--dag", "dag.txt", "--data", "data.csv", "--epochs", "3", "--seed", "2", "--out", "model.json"]);
}

#[test]
fn fit_writes_model_and_history() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    fitted_mixed(dir);
    assert!(dir.join("model.json").exists());
    let history = fs::read_to_string(dir.join("history.csv")).unwrap();
    let mut lines = history.lines();
    assert_eq!(lines.next().unwrap(), "epoch,mean_nll,beta_X1_X2,beta_X1_X3,beta_X2_X3");
    assert_eq!(lines.count(), 3);
}

#[test]
fn sampling_is_byte_identical_for_a_seed() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    fitted_mixed(dir);
    ok(dir, &["sample", "--model", "model.json", "--n", "300", "--seed", "9", "--out", "a.csv"]);
    ok(dir, &["sample", "--model", "model.json", "--n", "300", "--seed", "9", "--out", "b.csv"]);
    let out = Command::new(env!("CARGO_BIN_EXE_tramdag"))
        .args(["sample", "--model", "model.json", "--n", "300", "--out", "c.csv"])
        .current_dir(dir)
        .env("TRAMDAG_SEED", "9")
        .output()
        .unwrap();
    assert!(out.status.success());
    let a = fs::read(dir.join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.join("b.csv")).unwrap());
    assert_eq!(a, fs::read(dir.join("c.csv")).unwrap());
    ok(dir, &["sample", "--model", "model.json", "--n", "300", "--seed", "10", "--out", "d.csv"]);
    assert_ne!(a, fs::read(dir.join("d.csv")).unwrap());

    ok(dir, &["do", "--model", "model.json", "--set", "X2=-1", "--n", "50", "--seed", "1", "--out", "int.csv"]);
    let int = fs::read_to_string(dir.join("int.csv")).unwrap();
    let rows: Vec<&str> = int.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("-1")));
}

#[test]
fn usage_errors_exit_1_and_runtime_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    assert_eq!(tramdag(dir, &["fit", "--bogus"]).status.code(), Some(1));
    assert_eq!(tramdag(dir, &["sample", "--model", "m.json", "--n", "x", "--out", "o.csv"]).status.code(), Some(1));
    assert_eq!(tramdag(dir, &["--help"]).status.code(), Some(0));

    let missing = tramdag(dir, &["sample", "--model", "missing.json", "--n", "5", "--out", "o.csv"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    fitted_mixed(dir);
    let text = fs::read_to_string(dir.join("model.json")).unwrap();
    fs::write(dir.join("cut.json"), &text[..text.len() / 2]).unwrap();
    let cut = tramdag(dir, &["sample", "--model", "cut.json", "--n", "5", "--out", "o.csv"]);
    assert_eq!(cut.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&cut.stderr).contains("checksum"));

    let bad = tramdag(dir, &["do", "--model", "model.json", "--set", "X9=1", "--n", "5", "--out", "o.csv"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn counterfactual_with_discrete_descendant_is_refused() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    fitted_mixed(dir);
    let out = tramdag(dir, &["cf", "--model", "model.json", "--obs", "0.5,1.0,2", "--set", "X1=-1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("X3"), "{err}");
}

#[test]
fn counterfactual_alpha_sweep_writes_one_row_per_grid_point() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(dir, &["dgp", "--preset", "carefl", "--n", "1500", "--seed", "4", "--out", "data.csv"]);
    fs::write(
        dir.join("dag.txt"),
        "node X1 continuous\nnode X2 continuous\nnode X3 continuous\nnode X4 continuous\n\
         edge X1 -> X3 : ci\nedge X2 -> X3 : ci\nedge X1 -> X4 : ci\nedge X2 -> X4 : ci\n",
    )
    .unwrap();
    ok(dir, &["fit", "--dag", "dag.txt", "--data", "data.csv", "--epochs", "2", "--out", "model.json"]);
    ok(
        dir,
        &[
            "cf", "--model", "model.json", "--obs", "2.0,1.5,0.81,-0.28", "--set", "X2=alpha", "--alpha-grid",
            "-3:3:0.25", "--out", "cf.csv",
        ],
    );
    let cf = fs::read_to_string(dir.join("cf.csv")).unwrap();
    let lines: Vec<&str> = cf.lines().collect();
    assert_eq!(lines[0], "alpha,X1,X2,X3,X4");
    assert_eq!(lines.len(), 26);
    for l in &lines[1..] {
        let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(f[0], f[2]);
        assert!((f[1] - 2.0).abs() < 1e-9);
    }
}

#[test]
fn reported_or_counts_and_eval_report() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let out = ok(
        dir,
        &["reproduce", "--experiment", "or_check", "--n-train", "4000", "--epochs", "2", "--out-dir", "or"],
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS OR from reference counts"), "{stdout}");
    assert!(dir.join("or/summary.txt").exists());

    fitted_mixed(dir);
    ok(dir, &["sample", "--model", "model.json", "--n", "400", "--seed", "1", "--out", "obs.csv"]);
    ok(dir, &["eval", "--a", "obs.csv", "--b", "data.csv", "--dag", "dag.txt", "--report", "report.csv"]);
    let report = fs::read_to_string(dir.join("report.csv")).unwrap();
    assert!(report.lines().any(|l| l.starts_with("X3,tv,")), "{report}");
    assert!(report.lines().any(|l| l.starts_with("X1,ks,")), "{report}");
}
