//! End-to-end runs of the binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shapespline"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn simulate_into(dir: &Path, seed: u64) {
    run_ok(bin().args([
        "simulate",
        "--output",
        dir.to_str().unwrap(),
        "--seed",
        &seed.to_string(),
        "--points-per-segment",
        "2",
        "--sigma",
        "0.05",
    ]));
}

fn manifest(dir: &Path) -> serde_json::Value {
    let text = fs::read_to_string(dir.join("manifest.json")).expect("manifest exists");
    serde_json::from_str(&text).expect("manifest parses")
}

fn embedded_hash(path: &Path) -> String {
    let text = fs::read_to_string(path).expect("file exists");
    let line = text.lines().next().expect("nonempty");
    line.strip_prefix("# manifest_sha256=")
        .expect("hash comment present")
        .to_string()
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    simulate_into(a.path(), 7);
    simulate_into(b.path(), 7);
    for name in ["data.csv", "truth.json", "data.json"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs across identical runs");
    }
    let (ma, mb) = (manifest(a.path()), manifest(b.path()));
    assert_eq!(ma["manifest_sha256"], mb["manifest_sha256"]);
    // and a different seed changes the data
    let c = TempDir::new().unwrap();
    simulate_into(c.path(), 8);
    assert_ne!(
        fs::read(a.path().join("data.csv")).unwrap(),
        fs::read(c.path().join("data.csv")).unwrap()
    );
}

#[test]
fn fit_with_cv_records_choice_and_converges() {
    let sim = TempDir::new().unwrap();
    simulate_into(sim.path(), 5);
    let out = TempDir::new().unwrap();
    run_ok(bin().args([
        "fit",
        "--input",
        sim.path().join("data.json").to_str().unwrap(),
        "--output",
        out.path().to_str().unwrap(),
        "--model",
        "cubic",
        "--lambda",
        "cv",
        "--grid-points",
        "1",
        "--steps-per-unit",
        "25",
        "--min-steps-per-segment",
        "5",
        "--with-size",
    ]));
    let m = manifest(out.path());
    assert_eq!(m["command"], "fit");
    assert!(m["lambda_chosen"].as_f64().is_some());
    assert_eq!(m["converged"], serde_json::json!(true));
    assert!(m["iterations"].as_u64().unwrap() <= 20);
    let hash = m["manifest_sha256"].as_str().unwrap();
    for name in [
        "fitted_shapes.csv",
        "unrolled.csv",
        "pc_scores.csv",
        "cv_table.csv",
        "size_fit.csv",
    ] {
        let path = out.path().join(name);
        assert!(path.exists(), "{name} missing");
        assert_eq!(embedded_hash(&path), hash, "{name} hash mismatch");
    }
    // fitted shapes parse back as a trajectory
    let fitted = shapespline::io::parse_trajectory(&out.path().join("fitted_shapes.csv")).unwrap();
    assert_eq!(fitted.k(), 8);
    assert_eq!(fitted.m(), 3);
    assert_eq!(fitted.frames().len(), 2 * 10 - 1);
}

#[test]
fn compare_emits_one_row_per_model() {
    let sim = TempDir::new().unwrap();
    simulate_into(sim.path(), 11);
    let out = TempDir::new().unwrap();
    run_ok(bin().args([
        "compare",
        "--input",
        sim.path().join("data.json").to_str().unwrap(),
        "--output",
        out.path().to_str().unwrap(),
        "--models",
        "geodesic,linear:3,cubic",
        "--lambda",
        "1e-3",
        "--grid-points",
        "1",
        "--steps-per-unit",
        "25",
        "--min-steps-per-segment",
        "5",
    ]));
    let table = fs::read_to_string(out.path().join("ic_table.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].starts_with("# manifest_sha256="));
    assert_eq!(
        lines[1],
        "model,mean_df,tangent_dim,p,sum_log_sigma2,aic,bic,note"
    );
    assert_eq!(lines.len(), 2 + 3);
    assert!(lines[2].starts_with("geodesic,"));
    assert!(lines[3].starts_with("linear:3,"));
    assert!(lines[4].starts_with("cubic,"));
}

#[test]
fn predict_and_pca_round_trip() {
    let sim = TempDir::new().unwrap();
    simulate_into(sim.path(), 13);
    let out = TempDir::new().unwrap();
    run_ok(bin().args([
        "predict",
        "--input",
        sim.path().join("data.json").to_str().unwrap(),
        "--output",
        out.path().to_str().unwrap(),
        "--model",
        "cubic",
        "--lambda",
        "1e-3",
        "--between",
        "1",
        "--grid-points",
        "1",
        "--steps-per-unit",
        "25",
        "--min-steps-per-segment",
        "5",
    ]));
    let preds = shapespline::io::parse_trajectory(&out.path().join("predictions.csv")).unwrap();
    assert_eq!(preds.frames().len(), 2 * 10 - 1);

    let pca_out = TempDir::new().unwrap();
    run_ok(bin().args([
        "pca",
        "--input",
        sim.path().join("data.json").to_str().unwrap(),
        "--output",
        pca_out.path().to_str().unwrap(),
    ]));
    let scores = fs::read_to_string(pca_out.path().join("pc_scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 2 + 10, "header + one row per shape");
    let m = manifest(pca_out.path());
    let proportions = m["results"]["proportions"].as_array().unwrap();
    let total: f64 = proportions.iter().map(|v| v.as_f64().unwrap()).sum();
    assert!(total <= 1.0 + 1e-12);
}

#[test]
fn cv_command_writes_table() {
    let sim = TempDir::new().unwrap();
    simulate_into(sim.path(), 17);
    let out = TempDir::new().unwrap();
    run_ok(bin().args([
        "cv",
        "--input",
        sim.path().join("data.json").to_str().unwrap(),
        "--output",
        out.path().to_str().unwrap(),
        "--lambda-grid",
        "1e-5,1e-1",
        "--grid-points",
        "1",
        "--steps-per-unit",
        "25",
        "--min-steps-per-segment",
        "5",
    ]));
    let table = fs::read_to_string(out.path().join("cv_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 2 + 2);
    let m = manifest(out.path());
    assert!(m["lambda_chosen"].as_f64().is_some());
}

#[test]
fn failures_emit_machine_readable_json() {
    let out = TempDir::new().unwrap();
    let result = bin()
        .args([
            "fit",
            "--input",
            "/nonexistent/trajectory.json",
            "--output",
            out.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!result.status.success());
    let stderr = String::from_utf8_lossy(&result.stderr);
    let body: serde_json::Value =
        serde_json::from_str(stderr.trim()).expect("stderr is one JSON object");
    assert!(body["error"].as_str().is_some());
    assert!(body["kind"].as_str().is_some());
}
