use std::process::Command;

use dbmatch::harness::{
    collision_probe, run_experiment, run_trial, write_summary_csv, ExperimentConfig, RunOptions,
    TrialDetection, SUMMARY_HEADER,
};
use dbmatch::MarkovParams;

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

const IDENTITY: &str = r#"{
    "markov": {"gamma": 0.0, "u": [0.5, 0.5]},
    "repetition": {"probs": [0.0, 1.0]},
    "n": 40, "m_list": [64], "trials": 3, "master_seed": 5
}"#;

#[test]
fn identity_channel_matches_everything() {
    let c = config(IDENTITY);
    let cell = &c.cells()[0];
    for t in 0..3 {
        let r = run_trial(&c, cell, t).unwrap();
        // 40 binary columns over 64 rows: distinct with overwhelming probability.
        if r.detection_status == TrialDetection::Recovered {
            assert_eq!(r.row_error_rate, 0.0, "{r:?}");
        }
        assert_eq!(r.true_pattern.counts(), &[1; 40][..]);
    }
}

#[test]
fn full_deletion_fails_every_row() {
    let c = config(
        &IDENTITY
            .replace("[0.0, 1.0]", "[1.0]")
            .replace("\"n\": 40", "\"n\": 1"),
    );
    let r = run_trial(&c, &c.cells()[0], 0).unwrap();
    assert_eq!(r.row_error_rate, 1.0);
    assert_eq!(r.detection_status, TrialDetection::Recovered);
    assert_eq!(r.true_pattern.total_width(), 0);
}

#[test]
fn trials_are_deterministic() {
    let c = config(&IDENTITY.replace("[0.0, 1.0]", "[0.2, 0.5, 0.3]"));
    let cell = &c.cells()[0];
    let mut a = run_trial(&c, cell, 2).unwrap();
    let mut b = run_trial(&c, cell, 2).unwrap();
    a.wall_time_ms = 0;
    b.wall_time_ms = 0;
    assert_eq!(a, b);
}

#[test]
fn duplicate_histogram_counts_as_total_failure() {
    // n = 8 columns over 4 binary rows cannot have distinct counts.
    let c = config(
        &IDENTITY
            .replace("\"n\": 40", "\"n\": 8")
            .replace("\"m_list\": [64]", "\"m_list\": [4]"),
    );
    let out = run_experiment(&c, RunOptions::default()).unwrap();
    for r in &out.trials {
        assert!(r.detection_duplicate);
        assert_eq!(r.row_error_rate, 1.0);
    }
    assert_eq!(out.summary[0].detection_error_rate, 1.0);
}

#[test]
fn single_trial_summary() {
    let c = config(&IDENTITY.replace("\"trials\": 3", "\"trials\": 1"));
    let out = run_experiment(&c, RunOptions::default()).unwrap();
    assert_eq!(out.trials.len(), 1);
    let s = &out.summary[0];
    assert_eq!(s.trials, 1);
    assert_eq!(s.row_error_rate_mean, out.trials[0].row_error_rate);
    assert!(
        s.row_error_rate_ci_lo <= s.row_error_rate_mean
            && s.row_error_rate_mean <= s.row_error_rate_ci_hi
    );
    assert_eq!(s.capacity_bits, 1.0);
}

#[test]
fn identical_cells_give_identical_rows() {
    let c = config(
        &IDENTITY
            .replace("[0.0, 1.0]", "[0.3, 0.7]")
            .replace("\"m_list\": [64]", "\"m_list\": [256, 256]")
            .replace("\"n\": 40", "\"n\": 24")
            .replace("\"trials\": 3", "\"trials\": 20"),
    );
    let out = run_experiment(&c, RunOptions::default()).unwrap();
    let (a, b) = (&out.summary[0], &out.summary[1]);
    assert_eq!(a.to_csv_line(), b.to_csv_line());
}

#[test]
fn output_independent_of_worker_count() {
    let c = config(
        &IDENTITY
            .replace("[0.0, 1.0]", "[0.25, 0.5, 0.25]")
            .replace("\"m_list\": [64]", "\"m_list\": [128, 512]")
            .replace("\"n\": 40", "\"n\": 12")
            .replace("\"trials\": 3", "\"trials\": 16"),
    );
    let fixed = RunOptions {
        workers: 1,
        record_timing: false,
    };
    let wide = RunOptions {
        workers: 3,
        record_timing: false,
    };
    let a = run_experiment(&c, fixed).unwrap();
    let b = run_experiment(&c, wide).unwrap();
    assert_eq!(a, b);
    let mut csv = Vec::new();
    write_summary_csv(&a.summary, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), SUMMARY_HEADER);
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn detection_never_silently_wrong() {
    let c = config(
        r#"{
        "markov": {"gamma": 0.5, "u": [0.5, 0.5]},
        "repetition": {"probs": [0.25, 0.5, 0.25]},
        "n": 16, "m_list": [2048], "trials": 60, "master_seed": 77
    }"#,
    );
    // run_trial returns an Invariant error if ŝ ≠ S after a clean detection.
    let out = run_experiment(&c, RunOptions::default()).unwrap();
    assert!(out
        .trials
        .iter()
        .any(|t| t.detection_status == TrialDetection::Recovered));
}

#[test]
fn capacity_depends_only_on_deletion_probability() {
    let a = config(&IDENTITY.replace("[0.0, 1.0]", "[0.3, 0.7]"));
    let b = config(&IDENTITY.replace("[0.0, 1.0]", "[0.3, 0.35, 0.35]"));
    let sa = run_experiment(&a, RunOptions::default()).unwrap();
    let sb = run_experiment(&b, RunOptions::default()).unwrap();
    assert_eq!(
        format!("{:.12}", sa.summary[0].capacity_bits),
        format!("{:.12}", sb.summary[0].capacity_bits)
    );
}

#[test]
fn probe_single_column_is_zero() {
    let p = MarkovParams::new(0.4, &[0.3, 0.7]).unwrap();
    let rows = collision_probe(&p, &[1], &[10, 1000], 25, 0, 2).unwrap();
    assert!(rows.iter().all(|r| r.mu_hat == 0.0));
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dbmatch"))
}

#[test]
fn cli_capacity() {
    let out = cli()
        .args([
            "capacity",
            "--gamma",
            "0",
            "--u",
            "0.5,0.5",
            "--delta-list",
            "0.3,1",
            "--tol",
            "1e-14",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0.3,0.7000000000"), "{text}");
    let bad = cli()
        .args([
            "capacity",
            "--gamma",
            "1",
            "--u",
            "0.5,0.5",
            "--delta-list",
            "0.3",
        ])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn cli_negative_gamma_parses() {
    let out = cli()
        .args([
            "capacity",
            "--gamma",
            "-0.05",
            "--u",
            "0.5,0.5",
            "--delta-list",
            "0.2",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn cli_simulate_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(
        &cfg,
        IDENTITY
            .replace("[0.0, 1.0]", "[0.2, 0.8]")
            .replace("\"m_list\": [64]", "\"growth_rates\": [0.2, 0.3]"),
    )
    .unwrap();
    for (cmd, sub) in [("simulate", "a"), ("sweep", "b")] {
        let out_dir = dir.path().join(sub);
        let status = cli()
            .args([
                cmd,
                "--config",
                cfg.to_str().unwrap(),
                "--workers",
                "2",
                "--no-timing",
                "--out-dir",
            ])
            .arg(&out_dir)
            .status()
            .unwrap();
        assert!(status.success());
        let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 3);
        let trials = std::fs::read_to_string(out_dir.join("trials.jsonl")).unwrap();
        assert_eq!(trials.lines().count(), 6);
        let first: serde_json::Value =
            serde_json::from_str(trials.lines().next().unwrap()).unwrap();
        assert!(first["true_pattern"].is_array());
    }
    let a = std::fs::read(dir.path().join("a/trials.jsonl")).unwrap();
    let b = std::fs::read(dir.path().join("b/trials.jsonl")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cli_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, IDENTITY.replace("\"gamma\": 0.0", "\"gamma\": 1.0")).unwrap();
    let out = cli()
        .args(["simulate", "--config", cfg.to_str().unwrap(), "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("markov.gamma"));
    let missing = cli()
        .args(["simulate", "--config", "/nonexistent/x.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn cli_collision_probe() {
    let out = cli()
        .args([
            "collision-probe",
            "--gamma",
            "0.5",
            "--u",
            "0.5,0.5",
            "--n-list",
            "1,4",
            "--m-list",
            "50",
            "--trials",
            "10",
            "--seed",
            "3",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "n,m,trials,duplicates,mu_hat");
    assert!(text.lines().nth(1).unwrap().starts_with("1,50,10,0,"));
}
