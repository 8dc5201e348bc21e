//! End-to-end tests of the `dcp` binary: real process spawns against the
//! bundled data directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn dcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcp"))
        .arg("--data-dir")
        .arg(data_dir())
        .args(args)
        .output()
        .expect("spawning the dcp binary")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Trains a model into `dir` and returns its path. Asserts the training
/// subcommand itself behaves.
fn train_into(dir: &Path) -> PathBuf {
    let model = dir.join("victim.bin");
    let out = dcp(&[
        "train-victim",
        "--dataset",
        "toy_sentiment",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("train accuracy"));
    assert!(model.exists());
    model
}

#[test]
fn unknown_subcommand_prints_usage_and_exits_2() {
    let out = dcp(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("Usage"));
}

#[test]
fn missing_required_flag_exits_2() {
    let out = dcp(&["attack"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn nonexistent_victim_file_fails_with_diagnostic() {
    let out = dcp(&[
        "attack",
        "--victim",
        "/no/such/model.bin",
        "--text",
        "anything",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("error:"));
}

#[test]
fn attack_prints_a_json_result() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_into(dir.path());

    for method in ["dcp", "pwws"] {
        let out = dcp(&[
            "attack",
            "--victim",
            model.to_str().unwrap(),
            "--method",
            method,
            "--text",
            "The film was dreadful and dull.",
        ]);
        assert!(out.status.success(), "stderr: {}", stderr_of(&out));
        let result: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
        assert_eq!(result["attack"], method);
        assert_eq!(result["example_id"], "cli-1");
        assert!(result["forward_queries"].as_u64().unwrap() >= 1);
    }
}

#[test]
fn attack_on_a_file_emits_one_line_per_example() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_into(dir.path());

    let dataset = dir.path().join("three.jsonl");
    let bundled = fs::read_to_string(data_dir().join("toy_sentiment_test.jsonl")).unwrap();
    let three: Vec<&str> = bundled.lines().take(3).collect();
    fs::write(&dataset, three.join("\n")).unwrap();
    fs::write(dir.path().join("three.labels.txt"), "negative\npositive\n").unwrap();

    let out = dcp(&[
        "attack",
        "--victim",
        model.to_str().unwrap(),
        "--file",
        dataset.to_str().unwrap(),
        "--method",
        "pwws",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let stdout = stdout_of(&out);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 3);
    for line in lines {
        let result: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(result["attack"], "pwws");
    }
    assert!(stderr_of(&out).contains("attacked 3 examples"));
}

#[test]
fn benchmark_writes_validating_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_root = dir.path().join("results");
    let out = dcp(&[
        "benchmark",
        "--sample-size",
        "5",
        "--out",
        out_root.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    let run_dirs: Vec<PathBuf> = fs::read_dir(&out_root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(run_dirs.len(), 1);
    let run_dir = &run_dirs[0];
    for name in ["manifest.json", "results.jsonl", "summary.csv", "summary.md"] {
        assert!(run_dir.join(name).exists(), "missing {name}");
    }

    // Loading re-verifies stored metrics against re-aggregation.
    let cells = dcp_core::harness::read_results_jsonl(&run_dir.join("results.jsonl")).unwrap();
    assert_eq!(cells.len(), 2);
    for cell in &cells {
        assert_eq!(cell.results.len(), 5);
        assert_eq!(cell.manifest.sample_size, 5);
    }

    let stdout = stdout_of(&out);
    assert!(stdout.contains("ASR"));
    assert!(stdout.contains("wrote"));
}

#[test]
fn benchmark_honors_a_settings_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_root = dir.path().join("results");
    let config = dir.path().join("bench.toml");
    fs::write(
        &config,
        format!(
            "[run]\nsample_size = 4\nout = {:?}\nformats = [\"markdown\"]\n\n[attack]\nlambda = 0.5\n",
            out_root.to_str().unwrap()
        ),
    )
    .unwrap();

    let out = dcp(&["benchmark", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    let run_dir = fs::read_dir(&out_root).unwrap().next().unwrap().unwrap().path();
    assert!(run_dir.join("manifest.json").exists());
    assert!(run_dir.join("summary.md").exists());
    assert!(!run_dir.join("results.jsonl").exists());
    assert!(!run_dir.join("summary.csv").exists());

    let manifest = fs::read_to_string(run_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"lambda\": 0.5"));
    assert!(manifest.contains("\"sample_size\": 4"));

    let md = fs::read_to_string(run_dir.join("summary.md")).unwrap();
    assert!(md.contains("| Dataset |"));
    assert!(md.contains("reported, not reproduced"));
}

#[test]
fn inspect_lists_saliency_and_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_into(dir.path());
    let out = dcp(&[
        "inspect",
        "--victim",
        model.to_str().unwrap(),
        "--text",
        "The movie was dreadful.",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let stdout = stdout_of(&out);
    assert!(stdout.contains("prediction:"));
    assert!(stdout.contains("saliency"));
    assert!(stdout.contains("candidates:"));
    assert!(stdout.contains("dreadful"));
}
