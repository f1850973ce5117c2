mod common;

use retest_core::pipeline::{cmd_multiverse, cmd_run, cmd_verify, RunConfig};
use retest_core::provenance::{CheckStatus, RunMode, CHECKS};
use serde_json::Value;

use common::*;

fn statuses(root: &std::path::Path, mode: RunMode) -> Vec<(String, CheckStatus)> {
    let report = cmd_verify(root, mode, None).unwrap();
    report.checks.into_iter().map(|c| (c.id, c.status)).collect()
}

#[test]
fn report_lists_all_checks_in_order() {
    let dir = smoke_checkout(20);
    let report = cmd_verify(dir.path(), RunMode::Smoke, None).unwrap();
    let ids: Vec<_> = report.checks.iter().map(|c| c.id.as_str()).collect();
    let want: Vec<_> = CHECKS.iter().map(|c| c.0).collect();
    assert_eq!(ids, want);
    assert!(report.overall);
    assert_eq!((report.executed, report.passed, report.skipped), (12, 12, 4));
    assert!(dir.path().join("results/smoke/gate_report.json").is_file());
}

#[test]
fn missing_results_fail_schema_and_provenance_checks() {
    let dir = scratch_checkout();
    let failed: Vec<_> = statuses(dir.path(), RunMode::Smoke)
        .into_iter()
        .filter(|(_, s)| *s == CheckStatus::Failed)
        .map(|(id, _)| id)
        .collect();
    assert_eq!(failed, ["R6", "R7", "R8", "R9", "R10", "R11"]);
}

#[test]
fn run_only_fails_multiverse_checks() {
    let dir = scratch_checkout();
    cmd_run(&smoke_config(dir.path(), 20)).unwrap();
    let report = cmd_verify(dir.path(), RunMode::Smoke, None).unwrap();
    assert!(!report.overall);
    for id in ["R8", "R9", "R10"] {
        assert_eq!(report.check(id).unwrap().status, CheckStatus::Failed, "{id}");
    }
    assert_eq!(report.check("R6").unwrap().status, CheckStatus::Passed);
}

#[test]
fn final_gate_runs_all_sixteen() {
    let dir = scratch_checkout();
    let root = dir.path();
    std::fs::create_dir_all(root.join("data/raw")).unwrap();
    std::fs::write(root.join("data/raw/archive_a.zip"), b"archive").unwrap();
    let digest = retest_core::ingest::sha256_file(&root.join("data/raw/archive_a.zip")).unwrap();
    std::fs::write(
        root.join("expected_hashes.json"),
        format!("{{\"archive_a.zip\": \"{digest}\"}}"),
    )
    .unwrap();
    std::fs::create_dir_all(root.join("data/processed")).unwrap();
    std::fs::copy(
        root.join("fixtures/synthetic_long.csv"),
        root.join("data/processed/long.csv"),
    )
    .unwrap();

    let mut cfg = RunConfig::new(RunMode::Final, root);
    cfg.bootstrap_b = 20;
    cmd_run(&cfg).unwrap();
    cmd_multiverse(&cfg).unwrap();

    // no pinned processed digest yet
    let report = cmd_verify(root, RunMode::Final, None).unwrap();
    assert_eq!(report.executed, 16);
    let failed: Vec<_> = report
        .checks
        .iter()
        .filter(|c| c.status == CheckStatus::Failed)
        .map(|c| c.id.as_str())
        .collect();
    assert_eq!(failed, ["R16"]);

    let gate_path = root.join("config/gate.json");
    let mut gate: Value = serde_json::from_slice(&read(&gate_path)).unwrap();
    gate["processed_sha256"] = retest_core::ingest::sha256_file(&root.join("data/processed/long.csv"))
        .unwrap()
        .into();
    std::fs::write(&gate_path, serde_json::to_vec_pretty(&gate).unwrap()).unwrap();
    let report = cmd_verify(root, RunMode::Final, None).unwrap();
    assert!(report.overall, "{:#?}", report.checks);
    assert_eq!((report.executed, report.skipped), (16, 0));

    std::fs::write(root.join("data/raw/archive_a.zip"), b"tampered").unwrap();
    let report = cmd_verify(root, RunMode::Final, None).unwrap();
    assert_eq!(report.check("R13").unwrap().status, CheckStatus::Failed);
    assert!(!report.overall);
}

#[test]
fn smoke_results_fail_the_final_synthetic_check() {
    let dir = scratch_checkout();
    let root = dir.path();
    // final results directory populated from a smoke run
    let mut cfg = smoke_config(root, 20);
    cfg.output_dir = "results/final".into();
    cmd_run(&cfg).unwrap();
    cmd_multiverse(&cfg).unwrap();
    let report = cmd_verify(root, RunMode::Final, None).unwrap();
    for id in ["R13", "R14", "R15", "R16"] {
        assert_eq!(report.check(id).unwrap().status, CheckStatus::Failed, "{id}");
    }
}

#[test]
fn missing_gate_config_fails_every_executed_check() {
    let dir = smoke_checkout(20);
    std::fs::remove_file(dir.path().join("config/gate.json")).unwrap();
    let report = cmd_verify(dir.path(), RunMode::Smoke, None).unwrap();
    assert!(!report.overall);
    assert_eq!(report.passed, 0);
    assert_eq!(report.skipped, 4);
}
