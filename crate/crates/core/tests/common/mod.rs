//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use retest_core::ingest::write_long_csv;
use retest_core::pipeline::{cmd_multiverse, cmd_run, RunConfig};
use retest_core::provenance::RunMode;
use retest_core::sample::PairedSample;
use retest_core::synthetic::{generate, many_task_design};
use serde_json::json;

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

/// Files and directories the gate pins, copied into a scratch root.
const PINNED_FILES: [&str; 8] = [
    "Cargo.toml",
    "Cargo.lock",
    "README.md",
    "expected_hashes.json",
    "schemas/outputs.json",
    "contracts/measures.json",
    "fixtures/synthetic_long.csv",
    "config/gate.json",
];

/// A minimal copy of the checkout, without results.
pub fn scratch_checkout() -> tempfile::TempDir {
    let src = repo_root();
    let dir = tempfile::tempdir().unwrap();
    for d in ["crates/core", "crates/cli"] {
        std::fs::create_dir_all(dir.path().join(d)).unwrap();
    }
    for f in PINNED_FILES {
        let to = dir.path().join(f);
        std::fs::create_dir_all(to.parent().unwrap()).unwrap();
        std::fs::copy(src.join(f), &to).unwrap_or_else(|e| panic!("{f}: {e}"));
    }
    dir
}

pub fn smoke_config(root: &Path, b: usize) -> RunConfig {
    let mut cfg = RunConfig::new(RunMode::Smoke, root);
    cfg.bootstrap_b = b;
    cfg
}

/// Scratch checkout with smoke results written by `run` then `multiverse`.
pub fn smoke_checkout(b: usize) -> tempfile::TempDir {
    let dir = scratch_checkout();
    let cfg = smoke_config(dir.path(), b);
    cmd_run(&cfg).unwrap();
    cmd_multiverse(&cfg).unwrap();
    dir
}

/// Writes an `n`-task long CSV and a matching all-primary contract under `dir`,
/// returning `(contract, data)` paths.
pub fn many_measure_inputs(dir: &Path, n: usize, n_subjects: usize, reliabilities: &[f64]) -> (PathBuf, PathBuf) {
    let rows = generate(&many_task_design(7, n, n_subjects, reliabilities));
    let data = dir.join("long.csv");
    write_long_csv(&rows, std::fs::File::create(&data).unwrap()).unwrap();
    let entries: Vec<_> = (0..n)
        .map(|i| {
            json!({
                "measure_id": format!("task_{i:02}_contrast_rt"),
                "dataset_id": "synthetic_many",
                "tier": "primary",
                "aggregation": {
                    "task": format!("task_{i:02}"),
                    "outcome": "condition_contrast",
                    "condition_a": "b",
                    "condition_b": "a",
                    "unit": "ms"
                },
                "description": ""
            })
        })
        .collect();
    let contract = dir.join("contract.json");
    let body = json!({ "version": "1.0.0", "declared_counts": { "primary": n }, "entries": entries });
    std::fs::write(&contract, serde_json::to_vec_pretty(&body).unwrap()).unwrap();
    (contract, data)
}

/// Bivariate standard normal sample with correlation `rho`.
pub fn gaussian_sample(id: &str, n: usize, rho: f64, seed: u64) -> PairedSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = (0..n)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let e: f64 = StandardNormal.sample(&mut rng);
            (a, rho * a + (1.0 - rho * rho).sqrt() * e)
        })
        .collect();
    PairedSample::new(id, pairs).unwrap()
}

pub fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Recursive copy of a directory tree.
pub fn copy_tree(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_tree(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), &target).unwrap();
        }
    }
}
