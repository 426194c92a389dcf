//! End-to-end checks of the `robot` binary: file formats, JSON output,
//! exit codes, and seeded reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn robot() -> Command {
    Command::new(env!("CARGO_BIN_EXE_robot"))
}

fn run(args: &[&str]) -> Output {
    robot().args(args).output().expect("binary runs")
}

fn json_stdout(output: &Output) -> Value {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

/// Source/target files for the hand-derived 2×2 instance: points 0 and √3
/// under squared Euclidean give the cost [[0,3],[3,0]].
fn two_by_two(dir: &Path) -> (PathBuf, PathBuf) {
    let source = dir.join("source.csv");
    let target = dir.join("target.csv");
    write(
        &source,
        "w,x1\n0.7,0.0\n0.3,1.7320508075688772\n",
    );
    write(
        &target,
        "w,x1\n0.5,0.0\n0.5,1.7320508075688772\n",
    );
    (source, target)
}

#[test]
fn solve_derived_instance() {
    let dir = tempfile::tempdir().unwrap();
    let (source, target) = two_by_two(dir.path());
    let out = run(&[
        "solve",
        "--source",
        source.to_str().unwrap(),
        "--target",
        target.to_str().unwrap(),
        "--lambda",
        "0.5",
    ]);
    let json = json_stdout(&out);
    assert!((json["objective"].as_f64().unwrap() - 0.2).abs() < 1e-7);
    assert!((json["slack_l1"].as_f64().unwrap() - 0.4).abs() < 1e-7);
    assert_eq!(json["method"], "exact");
}

#[test]
fn solve_identity_and_infinite_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let (source, target) = two_by_two(dir.path());
    let out = run(&[
        "solve",
        "--source",
        source.to_str().unwrap(),
        "--target",
        source.to_str().unwrap(),
        "--lambda",
        "0.7",
    ]);
    assert!(json_stdout(&out)["objective"].as_f64().unwrap().abs() < 1e-12);

    // λ = inf is vanilla OT: move 0.2 across at cost 3
    let out = run(&[
        "solve",
        "--source",
        source.to_str().unwrap(),
        "--target",
        target.to_str().unwrap(),
        "--lambda",
        "inf",
    ]);
    let json = json_stdout(&out);
    assert!((json["objective"].as_f64().unwrap() - 0.6).abs() < 1e-9);
    assert_eq!(json["lambda"], "inf");
    assert_eq!(json["slack_l1"].as_f64().unwrap(), 0.0);
}

#[test]
fn plan_out_writes_dense_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (source, target) = two_by_two(dir.path());
    let plan = dir.path().join("plan.csv");
    run(&[
        "solve",
        "--source",
        source.to_str().unwrap(),
        "--target",
        target.to_str().unwrap(),
        "--lambda",
        "0.5",
        "--plan-out",
        plan.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&plan).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    let total: f64 = rows.iter().flatten().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn detect_three_point_instance() {
    let dir = tempfile::tempdir().unwrap();
    let contaminated = dir.path().join("contaminated.csv");
    let clean = dir.path().join("clean.csv");
    write(&contaminated, "x1\n0.0\n0.1\n100.0\n");
    write(&clean, "x1\n0.0\n0.1\n0.2\n");
    let out = run(&[
        "detect",
        "--contaminated",
        contaminated.to_str().unwrap(),
        "--clean",
        clean.to_str().unwrap(),
        "--lambda",
        "1",
    ]);
    let json = json_stdout(&out);
    assert_eq!(json["outlier_indices"], serde_json::json!([2]));
    assert!((json["slack"][2].as_f64().unwrap() + 1.0 / 3.0).abs() < 1e-9);

    // identical files: nothing flagged
    let out = run(&[
        "detect",
        "--contaminated",
        clean.to_str().unwrap(),
        "--clean",
        clean.to_str().unwrap(),
        "--lambda",
        "1",
    ]);
    assert_eq!(json_stdout(&out)["outlier_indices"], serde_json::json!([]));

    // λ above every cost: nothing flagged
    let out = run(&[
        "detect",
        "--contaminated",
        contaminated.to_str().unwrap(),
        "--clean",
        clean.to_str().unwrap(),
        "--lambda",
        "1e7",
    ]);
    assert_eq!(json_stdout(&out)["outlier_indices"], serde_json::json!([]));
}

#[test]
fn exit_codes_match_error_classes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.csv");
    write(&good, "x1\n0.0\n1.0\n");
    let bad = dir.path().join("bad.csv");
    write(&bad, "x1,x2\n0.0,oops\n");
    let d3 = dir.path().join("d3.csv");
    write(&d3, "x1,x2\n0.0,0.0\n1.0,1.0\n");

    // malformed CSV → 1, with one-line JSON on stderr
    let out = run(&[
        "solve",
        "--source",
        bad.to_str().unwrap(),
        "--target",
        good.to_str().unwrap(),
        "--lambda",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "malformed_csv");

    // invalid flag value → 2
    let out = run(&[
        "solve",
        "--source",
        good.to_str().unwrap(),
        "--target",
        good.to_str().unwrap(),
        "--lambda",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "invalid_flags");

    // unknown flag (clap) → 2
    let out = run(&["solve", "--nope"]);
    assert_eq!(out.status.code(), Some(2));

    // dimension mismatch discovered by the solver → 3
    let out = run(&[
        "solve",
        "--source",
        good.to_str().unwrap(),
        "--target",
        d3.to_str().unwrap(),
        "--lambda",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "solver_failure");
}

#[test]
fn gen_roundtrips_through_solve() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    json_stdout(&run(&[
        "gen", "--model", "gaussian-huber", "--n", "25", "--d", "3", "--eps", "0.1",
        "--seed", "11", "--out", a.to_str().unwrap(),
    ]));
    json_stdout(&run(&[
        "gen", "--model", "cauchy-huber", "--n", "20", "--d", "3", "--eps", "0.0",
        "--seed", "12", "--out", b.to_str().unwrap(),
    ]));
    let out = run(&[
        "solve",
        "--source",
        a.to_str().unwrap(),
        "--target",
        b.to_str().unwrap(),
        "--lambda",
        "2.5",
    ]);
    let json = json_stdout(&out);
    assert!(json["objective"].as_f64().unwrap() >= 0.0);
    assert!(json["row_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn clusters_model_requires_clean_out() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "gen",
        "--model",
        "clusters",
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seeded_commands_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    json_stdout(&run(&[
        "gen", "--model", "gaussian-huber", "--n", "60", "--d", "2", "--eps", "0.2",
        "--seed", "5", "--out", data.to_str().unwrap(),
    ]));

    let gen_args = [
        "gen", "--model", "gaussian-huber", "--n", "30", "--d", "2", "--eps", "0.3",
        "--seed", "21",
    ];
    let out_a = dir.path().join("ga.csv");
    let out_b = dir.path().join("gb.csv");
    run(&[&gen_args[..], &["--out", out_a.to_str().unwrap()]].concat());
    run(&[&gen_args[..], &["--out", out_b.to_str().unwrap()]].concat());
    assert_eq!(
        std::fs::read(&out_a).unwrap(),
        std::fs::read(&out_b).unwrap()
    );

    let est_args = [
        "estimate-mean",
        "--data",
        data.to_str().unwrap(),
        "--lambda",
        "0.5",
        "--outer",
        "50",
        "--seed",
        "7",
    ];
    assert_eq!(run(&est_args).stdout, run(&est_args).stdout);

    let bench_args = ["bench", "equivalence", "--trials", "8", "--max-size", "4", "--seed", "3"];
    let strip_seconds = |out: Output| -> String {
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .filter(|l| !l.contains("\"seconds\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip_seconds(run(&bench_args)), strip_seconds(run(&bench_args)));
}

#[test]
fn weighted_csv_is_renormalized() {
    let dir = tempfile::tempdir().unwrap();
    let weighted = dir.path().join("weighted.csv");
    // weights 2,2,4 → 0.25,0.25,0.5
    write(&weighted, "w,x1\n2,0.0\n2,1.0\n4,2.0\n");
    let uniform = dir.path().join("uniform.csv");
    write(&uniform, "x1\n0.0\n1.0\n2.0\n");
    let out = run(&[
        "solve",
        "--source",
        weighted.to_str().unwrap(),
        "--target",
        uniform.to_str().unwrap(),
        "--lambda",
        "inf",
    ]);
    // 1-D monotone coupling: 1/12 of mass crosses (1,0) and 1/6 crosses (2,1),
    // each at unit squared distance → 1/12 + 1/6 = 1/4
    let json = json_stdout(&out);
    assert!((json["objective"].as_f64().unwrap() - 0.25).abs() < 1e-9);
}

#[test]
fn scan_lambda_reports_nesting() {
    let dir = tempfile::tempdir().unwrap();
    let contaminated = dir.path().join("contaminated.csv");
    let clean = dir.path().join("clean.csv");
    write(&contaminated, "x1\n0.0\n0.1\n100.0\n");
    write(&clean, "x1\n0.0\n0.1\n0.2\n");
    let csv_out = dir.path().join("scan.csv");
    let out = run(&[
        "scan-lambda",
        "--contaminated",
        contaminated.to_str().unwrap(),
        "--clean",
        clean.to_str().unwrap(),
        "--grid",
        "1,10000",
        "--csv-out",
        csv_out.to_str().unwrap(),
    ]);
    let json = json_stdout(&out);
    assert_eq!(json["nested"], serde_json::json!(true));
    assert_eq!(json["outlier_sets"][0], serde_json::json!([2]));
    assert_eq!(json["outlier_sets"][1], serde_json::json!([]));
    let text = std::fs::read_to_string(&csv_out).unwrap();
    assert!(text.starts_with("lambda,outlier_index"));
    assert_eq!(text.lines().count(), 2); // header plus one flagged pair
}
