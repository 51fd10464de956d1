//! End-to-end command-line tests: documented invocations, exit codes, and
//! output determinism.

use std::path::Path;
use std::process::Command;

fn driftml() -> Command {
    Command::new(env!("CARGO_BIN_EXE_driftml"))
}

fn non_timing_columns(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            cells[..cells.len().saturating_sub(2)].join(",")
        })
        .collect()
}

#[test]
fn generate_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stream.csv");
    let status = driftml()
        .args([
            "generate",
            "--family",
            "sea",
            "--n",
            "5000",
            "--drift",
            "abrupt",
            "--center",
            "2500",
            "--magnitude",
            "4",
            "--noise",
            "0.10",
            "--seed",
            "7",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.exists());
    let meta = out.with_extension("meta.toml");
    assert!(meta.exists());
    let meta_text = std::fs::read_to_string(&meta).unwrap();
    assert!(meta_text.contains("drift_positions = [2500]"));
    assert!(meta_text.contains("seed = 7"));
}

#[test]
fn run_twice_produces_identical_logs_modulo_timing() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("s.csv");
    assert!(driftml()
        .args(["generate", "--family", "sea", "--n", "3000", "--drift", "none", "--noise", "0.1", "--seed", "3", "--out"])
        .arg(&stream)
        .status()
        .unwrap()
        .success());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let status = driftml()
            .args([
                "run",
                "--stream",
            ])
            .arg(&stream)
            .args([
                "--strategy",
                "T1",
                "--paradigm",
                "evo",
                "--budget-evals",
                "4",
                "--batch-size",
                "500",
                "--seed",
                "1",
                "--out",
            ])
            .arg(out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let log_a = out_a.join("T1-evo-seed1.csv");
    let log_b = out_b.join("T1-evo-seed1.csv");
    assert_eq!(non_timing_columns(&log_a), non_timing_columns(&log_b));
}

#[test]
fn sweep_writes_logs_summary_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let status = driftml()
        .args([
            "sweep",
            "--family",
            "sea",
            "--n",
            "3000",
            "--drift",
            "none",
            "--noise",
            "0.1",
            "--axis",
            "strategy",
            "--values",
            "T1,OZA",
            "--seeds",
            "1",
            "--budget-evals",
            "4",
            "--batch-size",
            "500",
            "--jobs",
            "2",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("summary.csv").exists());
    assert!(out.join("recoveries.csv").exists());
    assert!(out.join("plots/accuracy.svg").exists());
    assert!(out.join("sweep.toml").exists());
}

#[test]
fn detect_replays_correctness_stream() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("correct.txt");
    // errors every 10 positions, then every position: drift must fire
    let mut text = String::new();
    for pos in 1..=300 {
        text.push_str(if pos % 10 == 0 { "0\n" } else { "1\n" });
    }
    for _ in 301..10_000 {
        text.push_str("0\n");
    }
    std::fs::write(&input, text).unwrap();
    let output = driftml()
        .args(["detect", "--stabilization", "5", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("drift at position"), "stdout: {stdout}");
}

#[test]
fn report_renders_from_run_logs() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("s.csv");
    assert!(driftml()
        .args(["generate", "--family", "sea", "--n", "2000", "--drift", "none", "--noise", "0.1", "--seed", "4", "--out"])
        .arg(&stream)
        .status()
        .unwrap()
        .success());
    let runs = dir.path().join("runs");
    assert!(driftml()
        .args(["run", "--stream"])
        .arg(&stream)
        .args(["--strategy", "OZA", "--batch-size", "500", "--seed", "2", "--out"])
        .arg(&runs)
        .status()
        .unwrap()
        .success());
    let report = dir.path().join("report");
    let status = driftml()
        .args(["report", "--logs"])
        .arg(&runs)
        .args(["--out"])
        .arg(&report)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(report.join("plots/accuracy.svg").exists());
}

#[test]
fn exit_codes_follow_contract() {
    // usage error: unknown flag
    let out = driftml().args(["run", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    // usage error: invalid configuration value
    let out = driftml()
        .args(["run", "--family", "sea", "--strategy", "NOPE", "--out", "/tmp/x"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("unknown strategy"), "stderr: {stderr}");
    // runtime failure: missing input file
    let out = driftml()
        .args(["run", "--stream", "/nonexistent/file.csv", "--strategy", "T1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // --help succeeds and documents every subcommand
    let out = driftml().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for sub in ["generate", "run", "sweep", "detect", "report"] {
        assert!(stdout.contains(sub));
    }
}

#[test]
fn run_accepts_config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("s.csv");
    assert!(driftml()
        .args(["generate", "--family", "sea", "--n", "2000", "--drift", "none", "--noise", "0.1", "--seed", "5", "--out"])
        .arg(&stream)
        .status()
        .unwrap()
        .success());
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        r#"
seed = 9
[params]
strategy = "OZA"
paradigm = "evo"
budget_evaluations = 4
stacker = "linear"
batch_size = 500
window_capacity = 3
carry_over_members = false
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let status = driftml()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--stream"])
        .arg(&stream)
        .args(["--strategy", "BLAST", "--out"]) // flag overrides file
        .arg(&out_dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out_dir.join("BLAST-evo-seed9.csv").exists());
}
