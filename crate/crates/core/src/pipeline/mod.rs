//! Orchestration: ingestion, estimation, bootstrap, inference, multiverse,
//! reports and provenance, with modes, seeds and exit codes.
//!
//! Smoke mode reads the bundled synthetic fixture and never touches raw
//! archives. Final mode verifies every archive in `expected_hashes.json`
//! before reading `data/processed/long.csv`.

pub mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::estimators::SearchMethod;
use crate::inference::{
    apply_primary_inference, InferenceError, InferenceSummary, ReliabilityEstimate, DEFAULT_Q_STAR,
};
use crate::ingest::digest::{load_expected_hashes, verify_archives};
use crate::ingest::long_csv::adapter_registry;
use crate::ingest::{prepare_samples, read_long_csv_file, sha256_file, IngestError, IngestEvidence, RtBounds};
use crate::multiverse::{
    build_grid, run_grid, summarize, CellSettings, MultiverseCell, MultiverseSummary, Specification,
};
use crate::provenance::gate::GateConfig;
use crate::provenance::schema::{
    INGEST_EVIDENCE, MULTIVERSE_RESULTS, MULTIVERSE_SUMMARY, PER_MEASURE_RESULTS, SUMMARY,
};
use crate::provenance::{
    emit_provenance, resolve_timestamp, run_gate, toolchain_versions, GateReport, ProvenanceError, ProvenanceRecord,
    RunMode,
};
use crate::registry::{Contract, RegistryError};
use crate::sample::PairedSample;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONTRACT: i32 = 2;
pub const EXIT_HASH: i32 = 3;
pub const EXIT_SCHEMA: i32 = 4;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_CONTRACT: &str = "contracts/measures.json";
pub const SMOKE_FIXTURE: &str = "fixtures/synthetic_long.csv";
pub const EXPECTED_HASHES: &str = "expected_hashes.json";
pub const RAW_DIR: &str = "data/raw";
pub const PROCESSED_DATA: &str = "data/processed/long.csv";
pub const GATE_REPORT: &str = "gate_report.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Provenance(#[from] ProvenanceError),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl PipelineError {
    /// 2 contract violation, 3 hash mismatch, 4 schema failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        let registry = |e: &RegistryError| match e {
            RegistryError::Immutability { .. }
            | RegistryError::ClaimTierViolation { .. }
            | RegistryError::UnknownMeasure(_) => EXIT_CONTRACT,
            RegistryError::Parse(_) | RegistryError::InvalidRecipe { .. } | RegistryError::DuplicateMeasure(_) => {
                EXIT_SCHEMA
            }
            RegistryError::Io { .. } => EXIT_OTHER,
        };
        match self {
            PipelineError::Registry(e) | PipelineError::Inference(InferenceError::Registry(e)) => registry(e),
            PipelineError::Ingest(IngestError::HashMismatch { .. } | IngestError::NoArchives(_)) => EXIT_HASH,
            PipelineError::Ingest(IngestError::Schema(_) | IngestError::MissingAccuracy(_)) => EXIT_SCHEMA,
            _ => EXIT_OTHER,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: RunMode,
    pub base_seed: u64,
    pub bootstrap_b: usize,
    /// Repository root; relative paths below resolve against it.
    pub root: PathBuf,
    pub contract_path: PathBuf,
    /// Smoke-mode input override.
    pub data_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub search: SearchMethod,
    /// Archive adapter applied to the processed data in final mode.
    pub adapter: String,
    /// Worker threads; `None` uses the rayon default. Results do not depend on it.
    pub threads: Option<usize>,
    /// See [`resolve_timestamp`].
    pub timestamp: Option<String>,
    pub q_star: f64,
    pub rt_bounds: RtBounds,
}

impl RunConfig {
    pub fn new(mode: RunMode, root: impl Into<PathBuf>) -> Self {
        Self {
            mode,
            base_seed: DEFAULT_SEED,
            bootstrap_b: mode.default_bootstrap(),
            root: root.into(),
            contract_path: DEFAULT_CONTRACT.into(),
            data_path: None,
            output_dir: PathBuf::from("results").join(mode.as_str()),
            search: SearchMethod::default(),
            adapter: "long_csv".into(),
            threads: None,
            timestamp: None,
            q_star: DEFAULT_Q_STAR,
            rt_bounds: RtBounds::default(),
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// Key for provenance maps: root-relative with `/` separators when possible.
    fn key(&self, p: &Path) -> String {
        let Ok(rel) = p.strip_prefix(&self.root) else {
            return p.display().to_string();
        };
        rel.components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/")
    }

    fn settings(&self) -> CellSettings {
        CellSettings {
            base_seed: self.base_seed,
            bootstrap_b: self.bootstrap_b,
            search: self.search,
        }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.bootstrap_b == 0 {
            return Err(PipelineError::Config(
                "bootstrap replicate count must be at least 1".into(),
            ));
        }
        if self.mode == RunMode::Final && self.data_path.is_some() {
            return Err(PipelineError::Config(format!(
                "final mode reads {PROCESSED_DATA}; a data override is smoke-only"
            )));
        }
        if self.threads == Some(0) {
            return Err(PipelineError::Config("thread count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Verified, ingested inputs ready for estimation.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub contract: Contract,
    /// Primary-tier samples in contract order.
    pub samples: Vec<PairedSample>,
    pub evidence: IngestEvidence,
    pub input_digests: BTreeMap<String, String>,
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs, PipelineError> {
    let contract_path = cfg.resolve(&cfg.contract_path);
    let contract = Contract::load(&contract_path)?;
    let mut digests = BTreeMap::from([(cfg.key(&contract_path), sha256_file(&contract_path)?)]);
    let mut evidence = IngestEvidence::default();

    let (data_path, data) = match cfg.mode {
        RunMode::Smoke => {
            let path = cfg.resolve(cfg.data_path.as_deref().unwrap_or(Path::new(SMOKE_FIXTURE)));
            evidence.synthetic = true;
            let data = read_long_csv_file(&path)?;
            (path, data)
        }
        RunMode::Final => {
            let hashes_path = cfg.root.join(EXPECTED_HASHES);
            let hashes = load_expected_hashes(&hashes_path)?;
            if hashes.is_empty() {
                return Err(IngestError::NoArchives(hashes_path.display().to_string()).into());
            }
            evidence.archives = verify_archives(&cfg.root.join(RAW_DIR), &hashes)?;
            for a in &mut evidence.archives {
                a.archive_path = cfg.key(Path::new(&a.archive_path));
                digests.insert(a.archive_path.clone(), a.observed_digest.clone());
            }
            let adapter = adapter_registry()
                .get(&cfg.adapter)
                .map_err(|e| PipelineError::Config(e.to_string()))?;
            let path = cfg.root.join(PROCESSED_DATA);
            let data = adapter.extract(&path)?;
            (path, data)
        }
    };
    let data_digest = sha256_file(&data_path)?;
    evidence.source_path = cfg.key(&data_path);
    evidence.source_digest = data_digest.clone();
    digests.insert(cfg.key(&data_path), data_digest);

    let prepared = prepare_samples(&data, &contract, &cfg.rt_bounds, &mut evidence)?;
    let samples = prepared
        .into_iter()
        .filter(|(entry, _)| entry.tier == crate::registry::Tier::Primary)
        .map(|(_, sample)| sample)
        .collect();
    Ok(Inputs {
        contract,
        samples,
        evidence,
        input_digests: digests,
    })
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, PipelineError> {
    match threads {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| PipelineError::Config(e.to_string())),
    }
}

fn create_dir(path: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Output files recorded in provenance, in the order they are checked.
const RECORDED_OUTPUTS: [&str; 5] = [
    INGEST_EVIDENCE,
    MULTIVERSE_RESULTS,
    MULTIVERSE_SUMMARY,
    PER_MEASURE_RESULTS,
    SUMMARY,
];

/// Rewrites `provenance.json` over every recorded output present in the directory.
fn record_provenance(cfg: &RunConfig, inputs: &Inputs, out: &Path) -> Result<ProvenanceRecord, PipelineError> {
    let present: Vec<&str> = RECORDED_OUTPUTS
        .iter()
        .copied()
        .filter(|name| out.join(name).is_file())
        .collect();
    let record = ProvenanceRecord {
        run_mode: cfg.mode,
        base_seed: cfg.base_seed,
        bootstrap_b: cfg.bootstrap_b,
        neighbour_search: cfg.search.as_str().to_string(),
        toolchain_versions: toolchain_versions(),
        input_digests: inputs.input_digests.clone(),
        output_digests: BTreeMap::new(),
        timestamp: resolve_timestamp(cfg.timestamp.as_deref())?,
        synthetic_data: inputs.evidence.synthetic,
    };
    Ok(emit_provenance(record, out, &present)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run_mode: RunMode,
    pub spec_id: String,
    pub base_seed: u64,
    pub bootstrap_b: usize,
    #[serde(flatten)]
    pub inference: InferenceSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutputs {
    pub estimates: Vec<ReliabilityEstimate>,
    pub summary: RunSummary,
    pub provenance: ProvenanceRecord,
}

/// Primary analysis under the default specification.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutputs, PipelineError> {
    cfg.validate()?;
    let inputs = load_inputs(cfg)?;
    for s in &inputs.samples {
        inputs.contract.assert_headline_eligible(s.measure_id())?;
    }
    let spec = Specification::default_spec();
    let settings = cfg.settings();
    let cells = with_pool(cfg.threads, || {
        run_grid(std::slice::from_ref(&spec), &inputs.samples, &settings)
    })?;
    let mut estimates: Vec<ReliabilityEstimate> = cells.into_iter().map(|c| c.estimate).collect();
    let inference = apply_primary_inference(&mut estimates, &inputs.contract, cfg.q_star)?;
    let summary = RunSummary {
        run_mode: cfg.mode,
        spec_id: spec.spec_id,
        base_seed: cfg.base_seed,
        bootstrap_b: cfg.bootstrap_b,
        inference,
    };

    let out = cfg.resolve(&cfg.output_dir);
    create_dir(&out)?;
    report::write_per_measure(&out.join(PER_MEASURE_RESULTS), &estimates)?;
    report::write_json(&out.join(SUMMARY), &summary)?;
    report::write_json(&out.join(INGEST_EVIDENCE), &inputs.evidence)?;
    let provenance = record_provenance(cfg, &inputs, &out)?;
    Ok(RunOutputs {
        estimates,
        summary,
        provenance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiverseReport {
    pub run_mode: RunMode,
    pub base_seed: u64,
    pub bootstrap_b: usize,
    #[serde(flatten)]
    pub summary: MultiverseSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiverseOutputs {
    pub cells: Vec<MultiverseCell>,
    pub report: MultiverseReport,
    pub provenance: ProvenanceRecord,
}

/// Every primary measure under all 24 specifications.
pub fn cmd_multiverse(cfg: &RunConfig) -> Result<MultiverseOutputs, PipelineError> {
    cfg.validate()?;
    let inputs = load_inputs(cfg)?;
    for s in &inputs.samples {
        inputs.contract.assert_headline_eligible(s.measure_id())?;
    }
    let settings = cfg.settings();
    let cells = with_pool(cfg.threads, || run_grid(&build_grid(), &inputs.samples, &settings))?;
    let report = MultiverseReport {
        run_mode: cfg.mode,
        base_seed: cfg.base_seed,
        bootstrap_b: cfg.bootstrap_b,
        summary: summarize(&cells),
    };

    let out = cfg.resolve(&cfg.output_dir);
    create_dir(&out)?;
    report::write_multiverse(&out.join(MULTIVERSE_RESULTS), &cells)?;
    report::write_json(&out.join(MULTIVERSE_SUMMARY), &report)?;
    report::write_json(&out.join(INGEST_EVIDENCE), &inputs.evidence)?;
    let provenance = record_provenance(cfg, &inputs, &out)?;
    Ok(MultiverseOutputs {
        cells,
        report,
        provenance,
    })
}

/// Runs the gate and writes `gate_report.json` to `report_path`, defaulting to
/// the mode's results directory.
pub fn cmd_verify(root: &Path, mode: RunMode, report_path: Option<&Path>) -> Result<GateReport, PipelineError> {
    let report = run_gate(root, mode);
    let path = match report_path {
        Some(p) => p.to_path_buf(),
        None => {
            let dir = GateConfig::load(root)
                .map(|c| c.results_dir(root, mode))
                .unwrap_or_else(|_| root.join("results").join(mode.as_str()));
            dir.join(GATE_REPORT)
        }
    };
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    report::write_json(&path, &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let cases: Vec<(PipelineError, i32)> = vec![
            (PipelineError::Config("x".into()), EXIT_OTHER),
            (RegistryError::UnknownMeasure("m".into()).into(), EXIT_CONTRACT),
            (RegistryError::Parse("bad".into()).into(), EXIT_SCHEMA),
            (
                IngestError::HashMismatch {
                    path: "a".into(),
                    expected: "0".into(),
                    observed: "1".into(),
                }
                .into(),
                EXIT_HASH,
            ),
            (IngestError::NoArchives("h".into()).into(), EXIT_HASH),
            (IngestError::Schema("s".into()).into(), EXIT_SCHEMA),
            (
                InferenceError::Registry(RegistryError::ClaimTierViolation {
                    measure_id: "m".into(),
                    tier: crate::registry::Tier::Sensitivity,
                })
                .into(),
                EXIT_CONTRACT,
            ),
        ];
        for (err, code) in cases {
            assert_eq!(err.exit_code(), code, "{err}");
        }
    }

    #[test]
    fn zero_bootstrap_rejected() {
        let cfg = RunConfig {
            bootstrap_b: 0,
            ..RunConfig::new(RunMode::Smoke, "/nonexistent")
        };
        assert!(matches!(cmd_run(&cfg), Err(PipelineError::Config(_))));
    }

    #[test]
    fn provenance_keys_are_root_relative() {
        let cfg = RunConfig::new(RunMode::Smoke, "/repo");
        assert_eq!(
            cfg.key(Path::new("/repo/contracts/measures.json")),
            "contracts/measures.json"
        );
        assert_eq!(cfg.key(Path::new("/elsewhere/x.csv")), "/elsewhere/x.csv");
    }
}
