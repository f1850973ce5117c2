//! The 16-check promotion gate.
//!
//! | id  | check                                                        |
//! |-----|--------------------------------------------------------------|
//! | R1  | required directories exist                                   |
//! | R2  | required files exist                                         |
//! | R3  | contract loads and its declared tier counts hold             |
//! | R4  | contract bytes match the pinned digest                       |
//! | R5  | contract tier counts equal the pinned claim counts           |
//! | R6  | `per_measure_results.csv` matches its pinned schema          |
//! | R7  | `summary.json` matches its schema                            |
//! | R8  | `multiverse_results.csv` matches its schema                  |
//! | R9  | `multiverse_summary.json` matches its schema                 |
//! | R10 | provenance output digests match the files on disk            |
//! | R11 | provenance input digests match the files on disk             |
//! | R12 | dependency lock present and gate check map unchanged         |
//! | R13 | raw archives match `expected_hashes.json` (final only)       |
//! | R14 | ingest evidence present and archive-backed (final only)      |
//! | R15 | no synthetic data in the run (final only)                    |
//! | R16 | processed long CSV matches the pinned digest (final only)    |
//!
//! The gate only reads; it never modifies the tree.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::schema::{output_schemas, validate_output, OutputSchema, INGEST_EVIDENCE};
use super::{ProvenanceRecord, RunMode, PROVENANCE_FILE};
use crate::ingest::digest::{load_expected_hashes, verify_archives};
use crate::ingest::{sha256_file, IngestEvidence};
use crate::registry::{Contract, Tier};

pub const GATE_CONFIG: &str = "config/gate.json";

/// `(id, name, final_only)`.
pub const CHECKS: [(&str, &str, bool); 16] = [
    ("R1", "structure_directories", false),
    ("R2", "structure_files", false),
    ("R3", "contract_loads", false),
    ("R4", "contract_digest", false),
    ("R5", "claim_counts_pinned", false),
    ("R6", "schema_per_measure_results", false),
    ("R7", "schema_summary", false),
    ("R8", "schema_multiverse_results", false),
    ("R9", "schema_multiverse_summary", false),
    ("R10", "provenance_outputs", false),
    ("R11", "provenance_inputs", false),
    ("R12", "dependency_lock", false),
    ("R13", "raw_archive_digests", true),
    ("R14", "ingest_evidence", true),
    ("R15", "no_synthetic_data", true),
    ("R16", "processed_data_digest", true),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateConfig {
    /// Pinned `id -> name` mapping; must equal [`CHECKS`].
    pub checks: BTreeMap<String, String>,
    pub required_dirs: Vec<String>,
    pub required_files: Vec<String>,
    pub contract: String,
    pub contract_sha256: String,
    pub pinned_tier_counts: BTreeMap<Tier, usize>,
    /// Pinned output schemas, the serialised form of [`output_schemas`].
    pub output_schemas: String,
    pub results: BTreeMap<RunMode, String>,
    pub expected_hashes: String,
    pub raw_dir: String,
    pub processed_data: String,
    pub processed_sha256: Option<String>,
}

impl GateConfig {
    pub fn load(root: &Path) -> Result<Self, String> {
        let path = root.join(GATE_CONFIG);
        let bytes = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_slice(&bytes).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn results_dir(&self, root: &Path, mode: RunMode) -> PathBuf {
        root.join(
            self.results
                .get(&mode)
                .map_or_else(|| format!("results/{mode}"), Clone::clone),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Passed,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCheck {
    pub id: String,
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateReport {
    pub mode: RunMode,
    pub checks: Vec<GateCheck>,
    pub executed: usize,
    pub passed: usize,
    pub skipped: usize,
    pub overall: bool,
}

impl GateReport {
    pub fn check(&self, id: &str) -> Option<&GateCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

type Outcome = Result<String, String>;

struct Ctx<'a> {
    root: &'a Path,
    cfg: &'a GateConfig,
    results: PathBuf,
}

impl Ctx<'_> {
    fn provenance(&self) -> Result<ProvenanceRecord, String> {
        let path = self.results.join(PROVENANCE_FILE);
        let bytes = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_slice(&bytes).map_err(|e| format!("{}: {e}", path.display()))
    }

    fn evidence(&self) -> Result<IngestEvidence, String> {
        let path = self.results.join(INGEST_EVIDENCE);
        let bytes = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_slice(&bytes).map_err(|e| format!("{}: {e}", path.display()))
    }

    fn digest(&self, path: &Path) -> Result<String, String> {
        sha256_file(path).map_err(|e| e.to_string())
    }
}

fn missing<'a>(root: &Path, items: &'a [String], pred: impl Fn(&Path) -> bool) -> Vec<&'a str> {
    items
        .iter()
        .filter(|p| !pred(&root.join(p)))
        .map(String::as_str)
        .collect()
}

fn schema_check(ctx: &Ctx, name: &str) -> Outcome {
    let schema_path = ctx.root.join(&ctx.cfg.output_schemas);
    let schema_bytes = std::fs::read(&schema_path).map_err(|e| format!("{}: {e}", schema_path.display()))?;
    let schemas: BTreeMap<String, OutputSchema> =
        serde_json::from_slice(&schema_bytes).map_err(|e| format!("{}: {e}", schema_path.display()))?;
    let schema = schemas
        .get(name)
        .ok_or_else(|| format!("{} has no schema for {name}", ctx.cfg.output_schemas))?;
    let path = ctx.results.join(name);
    let bytes = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    validate_output(schema, &bytes).map_err(|e| format!("{name}: {e}"))?;
    Ok(format!("{name} conforms"))
}

fn run_check(id: &str, mode: RunMode, ctx: &Ctx) -> Outcome {
    let cfg = ctx.cfg;
    match id {
        "R1" => {
            let absent = missing(ctx.root, &cfg.required_dirs, Path::is_dir);
            absent
                .is_empty()
                .then(|| format!("{} directories present", cfg.required_dirs.len()))
                .ok_or_else(|| format!("missing directories: {}", absent.join(", ")))
        }
        "R2" => {
            let absent = missing(ctx.root, &cfg.required_files, Path::is_file);
            absent
                .is_empty()
                .then(|| format!("{} files present", cfg.required_files.len()))
                .ok_or_else(|| format!("missing files: {}", absent.join(", ")))
        }
        "R3" => Contract::load(&ctx.root.join(&cfg.contract))
            .map(|c| format!("{} entries, declared counts hold", c.entries().len()))
            .map_err(|e| e.to_string()),
        "R4" => {
            let observed = ctx.digest(&ctx.root.join(&cfg.contract))?;
            (observed == cfg.contract_sha256.to_ascii_lowercase())
                .then(|| format!("contract digest {observed}"))
                .ok_or_else(|| format!("contract digest {observed} != pinned {}", cfg.contract_sha256))
        }
        "R5" => {
            let contract = Contract::load(&ctx.root.join(&cfg.contract)).map_err(|e| e.to_string())?;
            let pinned: BTreeMap<Tier, usize> = Tier::ALL
                .iter()
                .map(|&t| (t, cfg.pinned_tier_counts.get(&t).copied().unwrap_or(0)))
                .collect();
            let found = contract.tier_counts();
            (found == pinned)
                .then(|| format!("tier counts {found:?}"))
                .ok_or_else(|| format!("tier counts {found:?} != pinned {pinned:?}"))
        }
        "R6" => schema_check(ctx, super::schema::PER_MEASURE_RESULTS),
        "R7" => schema_check(ctx, super::schema::SUMMARY),
        "R8" => schema_check(ctx, super::schema::MULTIVERSE_RESULTS),
        "R9" => schema_check(ctx, super::schema::MULTIVERSE_SUMMARY),
        "R10" => {
            let record = ctx.provenance()?;
            if record.run_mode != mode {
                return Err(format!(
                    "provenance run_mode is {}, gate mode is {mode}",
                    record.run_mode
                ));
            }
            let required: Vec<String> = output_schemas().into_keys().collect();
            let unlisted: Vec<&str> = required
                .iter()
                .filter(|n| !record.output_digests.contains_key(*n))
                .map(String::as_str)
                .collect();
            if !unlisted.is_empty() {
                return Err(format!("outputs without a recorded digest: {}", unlisted.join(", ")));
            }
            for (name, expected) in &record.output_digests {
                let observed = ctx.digest(&ctx.results.join(name))?;
                if &observed != expected {
                    return Err(format!("{name}: digest {observed} != recorded {expected}"));
                }
            }
            Ok(format!("{} output digests match", record.output_digests.len()))
        }
        "R11" => {
            let record = ctx.provenance()?;
            if !record.input_digests.contains_key(&cfg.contract) {
                return Err(format!("contract {} not among recorded inputs", cfg.contract));
            }
            for (path, expected) in &record.input_digests {
                let observed = ctx.digest(&ctx.root.join(path))?;
                if &observed != expected {
                    return Err(format!("{path}: digest {observed} != recorded {expected}"));
                }
            }
            Ok(format!("{} input digests match", record.input_digests.len()))
        }
        "R12" => {
            let lock = ctx.root.join("Cargo.lock");
            let text = std::fs::read_to_string(&lock).map_err(|e| format!("{}: {e}", lock.display()))?;
            if !text.contains("name = \"retest-core\"") {
                return Err("Cargo.lock does not pin retest-core".into());
            }
            let pinned: BTreeMap<String, String> = CHECKS
                .iter()
                .map(|(id, name, _)| (id.to_string(), name.to_string()))
                .collect();
            (cfg.checks == pinned)
                .then(|| "Cargo.lock present; check map matches".to_string())
                .ok_or_else(|| "gate config check map differs from the implemented checks".into())
        }
        "R13" => {
            let hashes = load_expected_hashes(&ctx.root.join(&cfg.expected_hashes)).map_err(|e| e.to_string())?;
            if hashes.is_empty() {
                return Err(format!("{} lists no archives", cfg.expected_hashes));
            }
            verify_archives(&ctx.root.join(&cfg.raw_dir), &hashes).map_err(|e| e.to_string())?;
            Ok(format!("{} archives verified", hashes.len()))
        }
        "R14" => {
            let ev = ctx.evidence()?;
            if ev.archives.is_empty() {
                return Err("ingest evidence records no verified archives".into());
            }
            if ev.row_count == 0 {
                return Err("ingest evidence records zero rows".into());
            }
            Ok(format!("{} archives, {} rows", ev.archives.len(), ev.row_count))
        }
        "R15" => {
            let record = ctx.provenance()?;
            let ev = ctx.evidence()?;
            (!record.synthetic_data && !ev.synthetic)
                .then(|| "no synthetic data".to_string())
                .ok_or_else(|| "run used synthetic data".into())
        }
        "R16" => {
            let pinned = cfg
                .processed_sha256
                .as_deref()
                .ok_or("no processed-data digest pinned in the gate config")?;
            let observed = ctx.digest(&ctx.root.join(&cfg.processed_data))?;
            (observed == pinned.to_ascii_lowercase())
                .then(|| format!("processed digest {observed}"))
                .ok_or_else(|| format!("processed digest {observed} != pinned {pinned}"))
        }
        other => Err(format!("unknown check {other}")),
    }
}

/// Runs every check applicable to `mode`; smoke mode skips the raw-data checks.
pub fn run_gate(root: &Path, mode: RunMode) -> GateReport {
    let config = GateConfig::load(root);
    let checks: Vec<GateCheck> = CHECKS
        .iter()
        .map(|&(id, name, final_only)| {
            let (status, detail) = if final_only && mode == RunMode::Smoke {
                (CheckStatus::Skipped, "raw-data check; final mode only".to_string())
            } else {
                let outcome = match &config {
                    Ok(cfg) => run_check(
                        id,
                        mode,
                        &Ctx {
                            root,
                            cfg,
                            results: cfg.results_dir(root, mode),
                        },
                    ),
                    Err(e) => Err(format!("gate config unreadable: {e}")),
                };
                match outcome {
                    Ok(d) => (CheckStatus::Passed, d),
                    Err(d) => (CheckStatus::Failed, d),
                }
            };
            GateCheck {
                id: id.to_string(),
                name: name.to_string(),
                status,
                detail,
            }
        })
        .collect();
    let count = |s: CheckStatus| checks.iter().filter(|c| c.status == s).count();
    let skipped = count(CheckStatus::Skipped);
    let passed = count(CheckStatus::Passed);
    GateReport {
        mode,
        executed: checks.len() - skipped,
        passed,
        skipped,
        overall: passed == checks.len() - skipped,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_config_fails_every_executed_check() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_gate(dir.path(), RunMode::Smoke);
        assert_eq!((report.executed, report.skipped, report.passed), (12, 4, 0));
        assert!(!report.overall);
        assert_eq!(run_gate(dir.path(), RunMode::Smoke), report);
        let fin = run_gate(dir.path(), RunMode::Final);
        assert_eq!((fin.executed, fin.skipped), (16, 0));
    }

    #[test]
    fn check_ids_are_r1_to_r16() {
        let ids: Vec<String> = CHECKS.iter().map(|c| c.0.to_string()).collect();
        let expected: Vec<String> = (1..=16).map(|i| format!("R{i}")).collect();
        assert_eq!(ids, expected);
        assert_eq!(CHECKS.iter().filter(|c| c.2).count(), 4);
    }
}
