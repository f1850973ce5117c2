//! Run provenance records and the promotion gate.

pub mod gate;
pub mod schema;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{sha256_file, IngestError};

pub use gate::{run_gate, CheckStatus, GateCheck, GateConfig, GateReport, CHECKS};
pub use schema::{output_schemas, validate_output, OutputSchema};

pub const PROVENANCE_FILE: &str = "provenance.json";

#[derive(Debug, Error)]
pub enum ProvenanceError {
    #[error("output file {0} is missing")]
    MissingOutput(String),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("invalid timestamp '{0}': expected RFC 3339, a unix epoch, or 'now'")]
    Timestamp(String),
    #[error(transparent)]
    Digest(#[from] IngestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Smoke,
    Final,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Smoke => "smoke",
            RunMode::Final => "final",
        }
    }

    /// 200 replicates in smoke mode, 5000 in final mode.
    pub fn default_bootstrap(self) -> usize {
        match self {
            RunMode::Smoke => 200,
            RunMode::Final => 5000,
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "smoke" => Ok(RunMode::Smoke),
            "final" => Ok(RunMode::Final),
            other => Err(format!("unknown run mode '{other}' (expected smoke or final)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub run_mode: RunMode,
    pub base_seed: u64,
    pub bootstrap_b: usize,
    pub neighbour_search: String,
    pub toolchain_versions: BTreeMap<String, String>,
    /// Repository-relative path to hex digest.
    pub input_digests: BTreeMap<String, String>,
    /// Output-directory-relative file name to hex digest.
    pub output_digests: BTreeMap<String, String>,
    pub timestamp: String,
    pub synthetic_data: bool,
}

pub fn toolchain_versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("retest-core".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("rustc".to_string(), env!("RETEST_RUSTC_VERSION").to_string()),
    ])
}

/// Resolves the record timestamp. Absent input falls back to
/// `SOURCE_DATE_EPOCH`, then to the unix epoch, so repeated runs stay
/// byte-identical; `now` opts into the wall clock.
pub fn resolve_timestamp(arg: Option<&str>) -> Result<String, ProvenanceError> {
    let from_epoch = |s: &str| {
        s.trim()
            .parse::<i64>()
            .ok()
            .and_then(|secs| DateTime::<Utc>::from_timestamp(secs, 0))
    };
    let dt = match arg {
        Some("now") => Utc::now(),
        Some(s) => from_epoch(s)
            .or_else(|| DateTime::parse_from_rfc3339(s).ok().map(|d| d.with_timezone(&Utc)))
            .ok_or_else(|| ProvenanceError::Timestamp(s.to_string()))?,
        None => std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|s| from_epoch(&s))
            .unwrap_or(DateTime::<Utc>::UNIX_EPOCH),
    };
    Ok(dt.to_rfc3339_opts(SecondsFormat::Secs, true))
}

/// Canonical bytes: pretty JSON with struct-order keys, sorted maps and a final LF.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serialisable");
    bytes.push(b'\n');
    bytes
}

/// Digests `outputs` (names inside `output_dir`) into `record` and writes
/// `provenance.json` next to them.
pub fn emit_provenance(
    mut record: ProvenanceRecord,
    output_dir: &Path,
    outputs: &[&str],
) -> Result<ProvenanceRecord, ProvenanceError> {
    record.output_digests.clear();
    for name in outputs {
        let path = output_dir.join(name);
        if !path.is_file() {
            return Err(ProvenanceError::MissingOutput(path.display().to_string()));
        }
        record.output_digests.insert(name.to_string(), sha256_file(&path)?);
    }
    let path = output_dir.join(PROVENANCE_FILE);
    std::fs::write(&path, to_canonical_json(&record)).map_err(|source| ProvenanceError::Write {
        path: path.display().to_string(),
        source,
    })?;
    Ok(record)
}
