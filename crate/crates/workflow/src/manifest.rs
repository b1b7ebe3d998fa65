use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use topicflow_core::hash::{sha256, sha256_hex};

use crate::model::PortType;

pub const MANIFEST_FILE: &str = "_manifest.json";
pub const WORKFLOW_FILE: &str = "_workflow.json";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub node_id: String,
    pub port: String,
    #[serde(rename = "type")]
    pub ty: PortType,
    pub sha256: String,
    pub size: u64,
}

/// Record of one execution, written next to the artifacts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub engine_version: String,
    pub workflow_name: String,
    pub workflow_hash: String,
    pub seed: u64,
    /// RFC 3339, UTC.
    pub started_at: String,
    pub finished_at: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_node: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Data node id to SHA-256 of its source bytes.
    pub input_hashes: BTreeMap<String, String>,
    /// Tool node id to its derived seed.
    pub node_seeds: BTreeMap<String, u64>,
    /// Artifact file name to its record.
    pub artifacts: BTreeMap<String, ArtifactRecord>,
}

impl RunManifest {
    /// Equality on everything except the two timestamps.
    pub fn same_outcome(&self, other: &RunManifest) -> bool {
        let strip = |m: &RunManifest| RunManifest {
            started_at: String::new(),
            finished_at: String::new(),
            ..m.clone()
        };
        strip(self) == strip(other)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("manifest is serializable");
        out.push(b'\n');
        out
    }
}

/// First 8 bytes (little-endian) of `SHA-256(seed_le || node_id)`.
pub fn derive_node_seed(seed: u64, node_id: &str) -> u64 {
    let mut buf = seed.to_le_bytes().to_vec();
    buf.extend_from_slice(node_id.as_bytes());
    let digest = sha256(&buf);
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("manifest is malformed: {0}")]
    Malformed(String),
    #[error("artifact {name}: expected {expected}, found {found}")]
    HashMismatch {
        name: String,
        expected: String,
        found: String,
    },
}

/// Re-hashes every artifact listed in the directory's manifest.
pub fn verify_manifest(dir: &Path) -> Result<RunManifest, VerifyError> {
    let read = |name: &str| {
        let p = dir.join(name);
        fs::read(&p).map_err(|e| VerifyError::Read {
            path: p.display().to_string(),
            message: e.to_string(),
        })
    };
    let manifest: RunManifest =
        serde_json::from_slice(&read(MANIFEST_FILE)?).map_err(|e| VerifyError::Malformed(e.to_string()))?;
    for (name, record) in &manifest.artifacts {
        let found = sha256_hex(&read(name)?);
        if found != record.sha256 {
            return Err(VerifyError::HashMismatch {
                name: name.clone(),
                expected: record.sha256.clone(),
                found,
            });
        }
    }
    Ok(manifest)
}
