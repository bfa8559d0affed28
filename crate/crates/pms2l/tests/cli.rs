use std::fs;
use std::path::Path;
use std::process::Command;

use pms2l::data::{make_synthetic_blobs, write_libsvm};
use pms2l::trainer::LinearModel;

fn pms2l(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pms2l"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_pool(path: &Path, seed: u64) {
    let pool = make_synthetic_blobs(3, 40, 8.0, 1.0, seed).unwrap();
    write_libsvm(path, &pool).unwrap();
}

/// Run the split -> cluster -> confident -> train -> bound pipeline into
/// `dir`; panics on any nonzero exit.
fn run_pipeline(dir: &Path) {
    let pool = dir.join("pool.svm");
    write_pool(&pool, 4);
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();

    let (code, _, err) = pms2l(&[
        "split",
        "--pool",
        &p("pool.svm"),
        "--fraction",
        "0.2",
        "--seed",
        "7",
        "--out-dir",
        &p(""),
    ]);
    assert_eq!(code, 0, "split failed: {err}");

    let (code, _, err) = pms2l(&[
        "cluster",
        "--unlabeled",
        &p("unlabeled.svm"),
        "--clusters",
        "6",
        "--seed",
        "7",
        "--out",
        &p("partition.json"),
    ]);
    assert_eq!(code, 0, "cluster failed: {err}");

    let (code, _, err) = pms2l(&[
        "confident",
        "--partition",
        &p("partition.json"),
        "--labeled",
        &p("labeled.svm"),
        "--unlabeled",
        &p("unlabeled.svm"),
        "--out",
        &p("confident.json"),
    ]);
    assert_eq!(code, 0, "confident failed: {err}");

    let (code, _, err) = pms2l(&[
        "train",
        "--labeled",
        &p("labeled.svm"),
        "--unlabeled",
        &p("unlabeled.svm"),
        "--partition",
        &p("partition.json"),
        "--confident",
        &p("confident.json"),
        "--iterations",
        "100",
        "--seed",
        "7",
        "--out",
        &p("model.json"),
    ]);
    assert_eq!(code, 0, "train failed: {err}");

    let (code, _, err) = pms2l(&[
        "bound",
        "--model",
        &p("model.json"),
        "--labeled",
        &p("labeled.svm"),
        "--unlabeled",
        &p("unlabeled.svm"),
        "--partition",
        &p("partition.json"),
        "--confident",
        &p("confident.json"),
        "--l-hat",
        "1.0",
        "--seed",
        "7",
        "--out",
        &p("bound.json"),
    ]);
    assert_eq!(code, 0, "bound failed: {err}");
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(pms2l(&["--help"]).0, 0);
    assert_eq!(pms2l(&["--version"]).0, 0);
    assert_eq!(pms2l(&["train", "--help"]).0, 0);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(pms2l(&["frobnicate"]).0, 1);
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let (code, _, err) = pms2l(&["cluster"]);
    assert_eq!(code, 1);
    assert!(err.contains("--unlabeled"), "stderr: {err}");
}

#[test]
fn describe_prints_json_schema_for_every_command() {
    for cmd in ["split", "cluster", "confident", "train", "bound", "stability", "experiment"] {
        let (code, out, _) = pms2l(&[cmd, "--describe"]);
        assert_eq!(code, 0, "{cmd} --describe failed");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["command"], cmd);
        assert!(v["parameters"].is_object());
        assert!(v["artifacts"].is_array());
    }
}

#[test]
fn full_pipeline_emits_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(dir.path());
    for f in [
        "labeled.svm",
        "unlabeled.svm",
        "manifest.json",
        "partition.json",
        "confident.json",
        "model.json",
        "bound.json",
    ] {
        assert!(dir.path().join(f).exists(), "missing artifact {f}");
    }
    let model: LinearModel =
        serde_json::from_str(&fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    assert_eq!(model.num_classes, 3);
    assert!(model.norm() <= model.norm_budget + 1e-9);

    let bound: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bound.json")).unwrap()).unwrap();
    assert!(bound["report"]["total"].as_f64().unwrap() > 0.0);
    assert!(bound["rademacher"]["mc_draws"].is_u64());
    assert!(bound["per_cluster"].is_array());
}

#[test]
fn pipeline_reruns_are_byte_identical() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    run_pipeline(d1.path());
    run_pipeline(d2.path());
    for f in [
        "labeled.svm",
        "unlabeled.svm",
        "manifest.json",
        "partition.json",
        "confident.json",
        "model.json",
        "bound.json",
    ] {
        let a = fs::read(d1.path().join(f)).unwrap();
        let b = fs::read(d2.path().join(f)).unwrap();
        assert_eq!(a, b, "artifact {f} differs between reruns");
    }
}

#[test]
fn train_without_confident_set_exits_two_and_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("pool.svm");
    write_pool(&pool, 1);
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let (code, _, _) = pms2l(&[
        "split", "--pool", &p("pool.svm"), "--fraction", "0.2", "--out-dir", &p(""),
    ]);
    assert_eq!(code, 0);
    let (code, _, _) = pms2l(&[
        "cluster", "--unlabeled", &p("unlabeled.svm"), "--clusters", "4",
        "--out", &p("partition.json"),
    ]);
    assert_eq!(code, 0);
    let (code, _, err) = pms2l(&[
        "train",
        "--labeled", &p("labeled.svm"),
        "--unlabeled", &p("unlabeled.svm"),
        "--partition", &p("partition.json"),
        "--confident", &p("confident.json"), // never produced
        "--out", &p("model.json"),
    ]);
    assert_eq!(code, 2, "stderr: {err}");
    assert!(err.contains("cmd_confident"), "stderr: {err}");
    assert_eq!(err.lines().count(), 1, "error must be a single line: {err}");
}

#[test]
fn cluster_on_missing_input_exits_two_and_names_split() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = pms2l(&[
        "cluster",
        "--unlabeled",
        &dir.path().join("unlabeled.svm").to_string_lossy(),
        "--clusters",
        "4",
        "--out",
        &dir.path().join("partition.json").to_string_lossy(),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("cmd_split"), "stderr: {err}");
}

#[test]
fn malformed_data_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("pool.svm");
    fs::write(&bad, "1 2:1.0 1:0.5\n").unwrap(); // unsorted indices
    let (code, _, err) = pms2l(&[
        "split",
        "--pool",
        &bad.to_string_lossy(),
        "--out-dir",
        &dir.path().to_string_lossy(),
    ]);
    assert_eq!(code, 3, "stderr: {err}");
}

#[test]
fn supervised_train_skips_clustering_stages() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("pool.svm");
    write_pool(&pool, 2);
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let (code, _, _) = pms2l(&[
        "split", "--pool", &p("pool.svm"), "--fraction", "0.3", "--out-dir", &p(""),
    ]);
    assert_eq!(code, 0);
    let (code, _, err) = pms2l(&[
        "train",
        "--labeled", &p("labeled.svm"),
        "--unlabeled", &p("unlabeled.svm"),
        "--supervised",
        "--iterations", "100",
        "--out", &p("model.json"),
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    assert!(dir.path().join("model.json").exists());
}

#[test]
fn stability_command_reports_l_hat_and_suggested_eta() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("pool.svm");
    write_pool(&pool, 3);
    let out = dir.path().join("stability.json");
    let (code, _, err) = pms2l(&[
        "stability",
        "--pool",
        &pool.to_string_lossy(),
        "--clusters",
        "3",
        "--trials",
        "5",
        "--out",
        &out.to_string_lossy(),
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["L_hat"].as_f64().unwrap() >= 0.0);
    assert!(v["delta_hat"].as_f64().unwrap() >= 0.0);
    assert!(v["suggested_eta"].as_f64().unwrap() > 0.0);
}

#[test]
fn experiment_command_writes_summary_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("experiment.json");
    fs::write(
        &config,
        r#"{
            "dataset": {"synthetic": {"num_classes": 3, "per_class": 40,
                         "separation": 8.0, "noise": 1.0, "test_per_class": 15}},
            "labeled_fraction": 0.1,
            "trials": 4,
            "iterations": 100,
            "master_seed": 5
        }"#,
    )
    .unwrap();
    let out1 = dir.path().join("run1");
    let out2 = dir.path().join("run2");
    for out in [&out1, &out2] {
        let (code, _, err) = pms2l(&[
            "experiment",
            "--config",
            &config.to_string_lossy(),
            "--out-dir",
            &out.to_string_lossy(),
        ]);
        assert_eq!(code, 0, "stderr: {err}");
    }
    let summary = fs::read_to_string(out1.join("summary.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert!(v["per_method"]["SUP"]["mean_accuracy"].is_f64());
    assert!(v["per_method"]["PMS2L"]["mean_accuracy"].is_f64());

    let csv = fs::read_to_string(out1.join("trials.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "method,seed,accuracy,bound,risk");
    assert_eq!(lines.count(), 8); // 4 trials x 2 methods

    // Byte-identical artifacts across reruns.
    for f in ["summary.json", "trials.csv"] {
        assert_eq!(
            fs::read(out1.join(f)).unwrap(),
            fs::read(out2.join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn experiment_curve_flag_emits_curve_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("experiment.json");
    fs::write(
        &config,
        r#"{
            "dataset": {"synthetic": {"num_classes": 2, "per_class": 40,
                         "separation": 8.0, "noise": 1.0, "test_per_class": 10}},
            "labeled_fraction": 0.1,
            "trials": 4,
            "iterations": 50,
            "kappa": 1,
            "master_seed": 1
        }"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let (code, _, err) = pms2l(&[
        "experiment",
        "--config",
        &config.to_string_lossy(),
        "--curve",
        "0.1,0.3",
        "--out-dir",
        &out.to_string_lossy(),
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    let csv = fs::read_to_string(out.join("curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "fraction,method,mean,std");
    assert_eq!(lines.count(), 4); // 2 fractions x 2 methods
}
