//! End-to-end tests driving the compiled binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use assort_core::market::MarketInstance;
use assort_core::matching::{Matching, is_stable};

fn assort(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_assort"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assort_with_env(args: &[&str], env: &[(&str, &str)], dir: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_assort"));
    cmd.args(args).current_dir(dir);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

#[test]
fn sample_is_deterministic_and_identity_at_phi_zero() {
    let a = assort(&[
        "sample", "--phi", "0.5", "--len", "6", "--count", "4", "--seed", "9",
    ]);
    let b = assort(&[
        "sample", "--phi", "0.5", "--len", "6", "--count", "4", "--seed", "9",
    ]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 4);

    let id = assort(&["sample", "--phi", "0", "--len", "5", "--count", "2"]);
    for line in stdout(&id).lines() {
        assert_eq!(line, "1 2 3 4 5");
    }
}

#[test]
fn generate_match_enumerate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let instance_path = dir.path().join("instance.json");
    let status = assort(&[
        "generate",
        "--n",
        "6",
        "--k",
        "1",
        "--phi-m",
        "0.5",
        "--phi-w",
        "0.9",
        "--seed",
        "21",
        "--output",
        instance_path.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let instance = MarketInstance::from_json(&fs::read_to_string(&instance_path).unwrap()).unwrap();

    for proposing in ["men", "women"] {
        let out = assort(&[
            "match",
            "--instance",
            instance_path.to_str().unwrap(),
            "--proposing",
            proposing,
        ]);
        assert!(out.status.success());
        let matching = Matching::from_json(stdout(&out).trim()).unwrap();
        assert!(is_stable(&instance, &matching).unwrap());
        assert_eq!(matching.unmatched_women().len(), 1);
    }

    let out = assort(&["enumerate", "--instance", instance_path.to_str().unwrap()]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let count = value["count"].as_u64().unwrap();
    assert!(count >= 1);
    assert_eq!(value["matchings"].as_array().unwrap().len() as u64, count);
    assert_eq!(value["truncated"], serde_json::Value::Bool(false));
}

#[test]
fn experiment_outputs_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    fs::write(
        &config_path,
        r#"{
            "n": [15, 40],
            "k": [0, 1],
            "phi_m": [0.8],
            "phi_w": [0.8],
            "trials": 4,
            "master_seed": 77,
            "threshold": {"z": 1.0, "c_margin": 1.5},
            "mode": "enumerate",
            "enumeration_cap": 64
        }"#,
    )
    .unwrap();

    for (tag, workers) in [("a", "1"), ("b", "3")] {
        let out = assort_with_env(
            &[
                "experiment",
                "--config",
                config_path.to_str().unwrap(),
                "--csv",
                &format!("{tag}.csv"),
                "--json",
                &format!("{tag}.jsonl"),
            ],
            &[("ASSORT_WORKERS", workers)],
            dir.path(),
        );
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let csv_a = fs::read(dir.path().join("a.csv")).unwrap();
    let csv_b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    let json_a = fs::read(dir.path().join("a.jsonl")).unwrap();
    let json_b = fs::read(dir.path().join("b.jsonl")).unwrap();
    assert_eq!(json_a, json_b);

    // header + one row per (cell, trial)
    let text = String::from_utf8(csv_a).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 4);
    assert!(text.starts_with("cell_index,n,k,"));

    // report consumes the JSONL
    let out = assort_with_env(&["report", "--records", "a.jsonl"], &[], dir.path());
    assert!(out.status.success());
    let report = stdout(&out);
    assert!(report.contains("welfare"));
    assert!(report.contains("convergence: no balanced cells") || report.contains("median_qgap"));

    // unbalanced cells are excluded from the convergence table, not fatal
    assert!(report.contains("convergence"));
}

#[test]
fn exit_codes() {
    // 1: usage error (unknown flag)
    let out = assort(&["sample", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    // 1: missing required argument
    let out = assort(&["generate", "--n", "3"]);
    assert_eq!(out.status.code(), Some(1));

    // 2: semantic validation (phi out of range)
    let out = assort(&["sample", "--phi", "1.5", "--len", "4"]);
    assert_eq!(out.status.code(), Some(2));

    // 2: config validation (unknown field)
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.json");
    fs::write(
        &config_path,
        r#"{"n": [4], "phi_m": [0.5], "phi_w": [0.5], "trials": 1, "master_seed": 1, "who": 1}"#,
    )
    .unwrap();
    let out = assort_with_env(
        &[
            "experiment",
            "--config",
            config_path.to_str().unwrap(),
            "--csv",
            "out.csv",
        ],
        &[],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("who"));

    // 2: trials = 0
    fs::write(
        &config_path,
        r#"{"n": [4], "phi_m": [0.5], "phi_w": [0.5], "trials": 0, "master_seed": 1}"#,
    )
    .unwrap();
    let out = assort_with_env(
        &[
            "experiment",
            "--config",
            config_path.to_str().unwrap(),
            "--csv",
            "out.csv",
        ],
        &[],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    // 2: missing instance file
    let out = assort(&["match", "--instance", "/no/such/file.json"]);
    assert_eq!(out.status.code(), Some(2));

    // 2: experiment without any sink
    fs::write(
        &config_path,
        r#"{"n": [4], "phi_m": [0.5], "phi_w": [0.5], "trials": 1, "master_seed": 1}"#,
    )
    .unwrap();
    let out = assort_with_env(
        &["experiment", "--config", config_path.to_str().unwrap()],
        &[],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    // 0: --help
    let out = assort(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn hand_written_instance_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let instance_path = dir.path().join("hand.json");
    fs::write(
        &instance_path,
        r#"{
            "config": {"n": 2, "k": 1, "phi_m": 0.0, "phi_w": 0.0, "seed": 0},
            "men": [[2, 1, 3], [1, 2, 3]],
            "women": [[1, 2], [2, 1], [1, 2]]
        }"#,
    )
    .unwrap();
    let out = assort(&["match", "--instance", instance_path.to_str().unwrap()]);
    assert!(out.status.success());
    let matching = Matching::from_json(stdout(&out).trim()).unwrap();
    assert_eq!(matching.woman_of(1), 2);
    assert_eq!(matching.woman_of(2), 1);
    assert_eq!(matching.unmatched_women(), vec![3]);
}
