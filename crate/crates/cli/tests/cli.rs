//! End-to-end checks of the command-line surface.

use std::path::Path;
use std::process::{Command, Output};

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

fn decorr() -> Command {
    Command::new(env!("CARGO_BIN_EXE_decorr"))
}

fn run(args: &[&str]) -> Output {
    decorr().args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Three columns: a strong signal, a 0.95-correlated shadow of it, and an
/// independent second signal.
fn write_toy_csv(path: &Path, seed: u64) {
    let mut rng = decorr::rng::substream(seed, "cli-toy", 0);
    let n = 80;
    let base = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let shadow = &base * 0.95
        + DVector::from_fn(n, |_, _| 0.31 * rng.sample::<f64, _>(StandardNormal));
    let indep = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = &base * 4.0 + &indep * 2.5
        + DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));

    let mut text = String::from("g1,g2,g3,y\n");
    for i in 0..n {
        text.push_str(&format!("{},{},{},{}\n", base[i], shadow[i], indep[i], y[i]));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn select_finds_the_true_columns_in_the_toy_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    write_toy_csv(&csv, 5);
    let out_dir = dir.path().join("out");

    let out = run(&[
        "select",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "y",
        "--B",
        "60",
        "--seed",
        "7",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    let code = out.status.code().unwrap();
    assert!(code == 0 || code == 2, "unexpected exit {code}: {}", stderr(&out));

    let selected: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("selected.json")).unwrap())
            .unwrap();
    let names: Vec<&str> = selected["selected"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"g1"), "selected {names:?}");
    assert!(names.contains(&"g3"), "selected {names:?}");
    assert!(!names.contains(&"g2"), "shadow selected: {names:?}");

    for file in ["profile.csv", "frequencies.csv", "manifest.json"] {
        assert!(out_dir.join(file).exists(), "{file} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "select");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["subsamples"], 60);
}

#[test]
fn trace_emits_the_convergence_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    write_toy_csv(&csv, 6);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "trace",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "y",
        "--B",
        "40",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    let code = out.status.code().unwrap();
    assert!(code == 0 || code == 2, "{}", stderr(&out));
    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "b,phi,ci_halfwidth");
    // b runs from 2 to B.
    assert_eq!(trace.lines().count(), 40);
}

#[test]
fn rank_lists_every_variable_best_first() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    write_toy_csv(&csv, 8);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "rank",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "y",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let ranking = std::fs::read_to_string(out_dir.join("ranking.csv")).unwrap();
    let lines: Vec<&str> = ranking.lines().collect();
    assert_eq!(lines[0], "original_index,name,score");
    assert_eq!(lines.len(), 4);
    // The strong signal outranks its shadow.
    assert!(lines[1].starts_with("1,g1,"), "first row: {}", lines[1]);
}

#[test]
fn decorrelate_dumps_orthonormal_factors() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    write_toy_csv(&csv, 9);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "decorrelate",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "y",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let (q, _names) = decorr::data_model::load_csv_matrix(&out_dir.join("q.csv")).unwrap();
    assert_eq!(q.ncols(), 3);
    let defect = decorr::orthonormalize::orthonormality_defect(&q);
    assert!(defect < 1e-8, "defect {defect}");
    assert!(out_dir.join("r.csv").exists());
    assert!(out_dir.join("ordering.csv").exists());
}

#[test]
fn diagnose_reports_zero_norm_for_orthonormal_designs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    write_toy_csv(&csv, 10);
    let q_dir = dir.path().join("q");
    assert!(run(&[
        "decorrelate",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "y",
        "--out-dir",
        q_dir.to_str().unwrap(),
    ])
    .status
    .success());

    let out = run(&[
        "diagnose",
        "--input",
        q_dir.join("q.csv").to_str().unwrap(),
        "--signal",
        "1,2",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert!(report["norm_value"].as_f64().unwrap() < 1e-10);
    assert_eq!(report["satisfied"], true);
    assert_eq!(report["signal"], serde_json::json!([1, 2]));
}

#[test]
fn simulate_runs_a_scenario_file_and_reports_both_pipelines() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("tiny.json");
    std::fs::write(
        &scenario,
        r#"{
            "name": "tiny",
            "n": 40, "p": 6,
            "groups": [
                { "range": [1, 3], "rho": 0.8 },
                { "range": [4, 6], "rho": 0.0 }
            ],
            "active_rule": { "type": "highest_index" },
            "beta": [3.0, 2.0],
            "noise_sd": 1.0,
            "seed": 11, "b": 30, "dataset_count": 4
        }"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "simulate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let phi = std::fs::read_to_string(out_dir.join("phi.csv")).unwrap();
    assert_eq!(phi.lines().next().unwrap(), "pipeline,replicate,tuned_lambda,phi");
    assert_eq!(phi.lines().count(), 1 + 2 * 4);

    let f1 = std::fs::read_to_string(out_dir.join("f1.csv")).unwrap();
    assert_eq!(f1.lines().count(), 1 + 2 * 7);

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["pipelines"].as_array().unwrap().len(), 2);
}

#[test]
fn identical_seeds_give_byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("tiny.json");
    std::fs::write(
        &scenario,
        r#"{
            "name": "tiny",
            "n": 30, "p": 5,
            "groups": [{ "range": [1, 5], "rho": 0.5 }],
            "active_rule": { "type": "lowest_index" },
            "beta": [2.5],
            "noise_sd": 1.0,
            "seed": 3, "b": 20, "dataset_count": 3
        }"#,
    )
    .unwrap();
    let mut bytes = Vec::new();
    for run_dir in ["a", "b"] {
        let out_dir = dir.path().join(run_dir);
        let out = run(&[
            "simulate",
            "--scenario",
            scenario.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        bytes.push((
            std::fs::read(out_dir.join("phi.csv")).unwrap(),
            std::fs::read(out_dir.join("f1.csv")).unwrap(),
        ));
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn missing_input_fails_with_a_path_in_the_message() {
    let out = run(&[
        "select",
        "--input",
        "/nonexistent/nowhere.csv",
        "--response",
        "y",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("/nonexistent/nowhere.csv"));
}

#[test]
fn unknown_scenario_lists_the_builtins() {
    let out = run(&["simulate", "--scenario", "no-such-thing"]);
    assert_eq!(out.status.code(), Some(1));
    let msg = stderr(&out);
    for name in decorr::simulate::presets::NAMES {
        assert!(msg.contains(name), "missing {name} in: {msg}");
    }
}

#[test]
fn invalid_flags_are_rejected_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    write_toy_csv(&csv, 12);
    let out = run(&[
        "select",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "y",
        "--pi-thr",
        "0.4",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("pi-thr"));
}
