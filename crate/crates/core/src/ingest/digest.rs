//! SHA-256 digests and archive verification.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::IngestError;

/// Lower-case hex SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Lower-case hex SHA-256 of a file, streamed.
pub fn sha256_file(path: &Path) -> Result<String, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let read = reader.read(&mut buf).map_err(|e| IngestError::io(path, e))?;
        if read == 0 {
            break;
        }
        hasher.update(&buf[..read]);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveEvidence {
    pub archive_path: String,
    pub expected_digest: String,
    pub observed_digest: String,
}

/// Checks a file against its expected SHA-256; a mismatch is fatal.
pub fn verify_archive(path: &Path, expected_sha256_hex: &str) -> Result<ArchiveEvidence, IngestError> {
    let observed = sha256_file(path)?;
    let expected = expected_sha256_hex.trim().to_ascii_lowercase();
    if observed != expected {
        return Err(IngestError::HashMismatch {
            path: path.display().to_string(),
            expected,
            observed,
        });
    }
    Ok(ArchiveEvidence {
        archive_path: path.display().to_string(),
        expected_digest: expected,
        observed_digest: observed,
    })
}

/// Reads `expected_hashes.json`: `{ "<archive name>": "<hex digest>" }`.
pub fn load_expected_hashes(path: &Path) -> Result<BTreeMap<String, String>, IngestError> {
    let bytes = std::fs::read(path).map_err(|e| IngestError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| IngestError::Schema(format!("{}: {e}", path.display())))
}

/// Verifies every archive listed in `hashes` under `raw_dir`, in name order.
pub fn verify_archives(raw_dir: &Path, hashes: &BTreeMap<String, String>) -> Result<Vec<ArchiveEvidence>, IngestError> {
    hashes
        .iter()
        .map(|(name, digest)| verify_archive(&raw_dir.join(name), digest))
        .collect()
}
