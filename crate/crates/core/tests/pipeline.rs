mod common;

use retest_core::pipeline::{cmd_multiverse, cmd_run, RunConfig, EXIT_CONTRACT, EXIT_HASH, EXIT_OTHER, EXIT_SCHEMA};
use retest_core::provenance::{output_schemas, to_canonical_json, RunMode, PROVENANCE_FILE};
use serde_json::Value;

use common::*;

#[test]
fn pure_noise_measures_never_pass() {
    let dir = tempfile::tempdir().unwrap();
    let (contract, data) = many_measure_inputs(dir.path(), 12, 53, &[0.0]);
    let mut cfg = RunConfig::new(RunMode::Smoke, dir.path());
    cfg.contract_path = contract;
    cfg.data_path = Some(data);
    cfg.output_dir = dir.path().join("out");
    let out = cmd_run(&cfg).unwrap();
    let s = &out.summary.inference;
    assert_eq!(s.n_estimable, 12);
    assert_eq!(s.pass_count, 0);
    assert!(s.median_nlr_delta.unwrap() < 0.0, "{:?}", s.median_nlr_delta);
}

#[test]
fn missing_contract_fails_without_outputs() {
    let dir = scratch_checkout();
    let mut cfg = smoke_config(dir.path(), 20);
    cfg.contract_path = "contracts/absent.json".into();
    let err = cmd_run(&cfg).unwrap_err();
    assert_ne!(err.exit_code(), 0);
    assert!(!dir.path().join("results").exists());
}

#[test]
fn contract_errors_map_to_exit_codes() {
    let dir = scratch_checkout();
    let path = dir.path().join("contracts/measures.json");
    let original: Value = serde_json::from_slice(&read(&path)).unwrap();
    let run_with = |v: &Value| {
        std::fs::write(&path, serde_json::to_vec(v).unwrap()).unwrap();
        cmd_run(&smoke_config(dir.path(), 20)).unwrap_err().exit_code()
    };

    let mut miscounted = original.clone();
    miscounted["declared_counts"]["primary"] = 5.into();
    assert_eq!(run_with(&miscounted), EXIT_CONTRACT);

    let mut duplicated = original.clone();
    let first = duplicated["entries"][0].clone();
    duplicated["entries"].as_array_mut().unwrap().push(first);
    assert_eq!(run_with(&duplicated), EXIT_SCHEMA);

    let mut no_recipe = original.clone();
    no_recipe["entries"][0]["aggregation"]["outcome"] = "median_rt".into();
    assert_eq!(run_with(&no_recipe), EXIT_SCHEMA);

    std::fs::write(&path, b"not json").unwrap();
    assert_eq!(
        cmd_run(&smoke_config(dir.path(), 20)).unwrap_err().exit_code(),
        EXIT_SCHEMA
    );
}

#[test]
fn zero_replicates_rejected() {
    let dir = scratch_checkout();
    let err = cmd_run(&smoke_config(dir.path(), 0)).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_OTHER);
}

#[test]
fn shipped_schema_file_matches_writers() {
    let shipped = read(&repo_root().join("schemas/outputs.json"));
    assert_eq!(shipped, to_canonical_json(&output_schemas()));
}

#[test]
fn provenance_lists_inputs_and_every_output() {
    let dir = smoke_checkout(20);
    let results = dir.path().join("results/smoke");
    let v: Value = serde_json::from_slice(&read(&results.join(PROVENANCE_FILE))).unwrap();
    let inputs = v["input_digests"].as_object().unwrap();
    assert!(inputs.contains_key("contracts/measures.json"));
    assert!(inputs.contains_key("fixtures/synthetic_long.csv"));
    let outputs = v["output_digests"].as_object().unwrap();
    assert_eq!(outputs.len(), 5);
    assert_eq!(v["synthetic_data"], true);
    assert_eq!(v["bootstrap_b"], 20);
    assert_eq!(v["timestamp"], "1970-01-01T00:00:00Z");
}

#[test]
fn explicit_timestamp_is_recorded() {
    let dir = scratch_checkout();
    let mut cfg = smoke_config(dir.path(), 20);
    cfg.timestamp = Some("2024-06-11T08:00:00Z".into());
    let out = cmd_run(&cfg).unwrap();
    assert_eq!(out.provenance.timestamp, "2024-06-11T08:00:00Z");
}

#[test]
fn smoke_multiverse_marginals_cover_every_level() {
    let dir = scratch_checkout();
    let out = cmd_multiverse(&smoke_config(dir.path(), 20)).unwrap();
    let s = &out.report.summary;
    assert_eq!(s.total_cells, 24 * 6);
    assert_eq!(s.estimable + s.insufficient_n + s.degenerate, s.total_cells);
    // 4 k levels + 2 correlation methods + 3 thresholds
    assert_eq!(s.marginals.len(), 9);
}

/// Builds a final-mode tree: one raw archive, its digest, and processed data.
fn final_checkout() -> tempfile::TempDir {
    let dir = scratch_checkout();
    let raw = dir.path().join("data/raw");
    std::fs::create_dir_all(&raw).unwrap();
    std::fs::write(raw.join("archive_a.zip"), b"raw archive bytes").unwrap();
    let digest = retest_core::ingest::sha256_file(&raw.join("archive_a.zip")).unwrap();
    std::fs::write(
        dir.path().join("expected_hashes.json"),
        serde_json::to_vec(&serde_json::json!({ "archive_a.zip": digest })).unwrap(),
    )
    .unwrap();
    std::fs::create_dir_all(dir.path().join("data/processed")).unwrap();
    std::fs::copy(
        dir.path().join("fixtures/synthetic_long.csv"),
        dir.path().join("data/processed/long.csv"),
    )
    .unwrap();
    dir
}

#[test]
fn final_mode_verifies_archives() {
    let dir = final_checkout();
    let mut cfg = RunConfig::new(RunMode::Final, dir.path());
    cfg.bootstrap_b = 20;
    let out = cmd_run(&cfg).unwrap();
    assert!(!out.provenance.synthetic_data);
    assert!(out.provenance.input_digests.contains_key("data/raw/archive_a.zip"));
    assert!(out.provenance.input_digests.contains_key("data/processed/long.csv"));

    std::fs::write(dir.path().join("data/raw/archive_a.zip"), b"corrupted").unwrap();
    assert_eq!(cmd_run(&cfg).unwrap_err().exit_code(), EXIT_HASH);
}

#[test]
fn final_mode_rejects_data_override_and_unknown_adapter() {
    let dir = final_checkout();
    let mut cfg = RunConfig::new(RunMode::Final, dir.path());
    cfg.data_path = Some("fixtures/synthetic_long.csv".into());
    assert_eq!(cmd_run(&cfg).unwrap_err().exit_code(), EXIT_OTHER);
    let mut cfg = RunConfig::new(RunMode::Final, dir.path());
    cfg.adapter = "nope".into();
    assert_eq!(cmd_run(&cfg).unwrap_err().exit_code(), EXIT_OTHER);
}
