//! On-disk layout under the data directory:
//!
//! ```text
//! workflows/<id>.json          canonical workflow
//! jobs/<id>.json               job record
//! jobs/<id>.workflow.json      workflow snapshot taken at submission
//! runs/<job id>/               artifacts and manifest
//! corpora/<id>/documents.json  uploaded corpus, normalized
//! corpora/<id>/meta.json
//! ```

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use tracing::warn;

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

/// Writes through a temporary file so readers never see half a file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

impl Store {
    /// Creates the layout and checks that the directory is writable.
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        for sub in ["workflows", "jobs", "runs", "corpora"] {
            fs::create_dir_all(root.join(sub))?;
        }
        let probe = root.join(".write-probe");
        fs::write(&probe, b"ok")?;
        fs::remove_file(&probe)?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn workflows_dir(&self) -> PathBuf {
        self.root.join("workflows")
    }

    pub fn jobs_dir(&self) -> PathBuf {
        self.root.join("jobs")
    }

    pub fn corpora_dir(&self) -> PathBuf {
        self.root.join("corpora")
    }

    pub fn run_dir(&self, job_id: &str) -> PathBuf {
        self.root.join("runs").join(job_id)
    }

    pub fn save_json<T: Serialize>(&self, path: &Path, value: &T) -> io::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
        bytes.push(b'\n');
        write_atomic(path, &bytes)
    }

    /// Every `*.json` in `dir` that parses as `T` (names ending in
    /// `.workflow.json` are skipped). Unreadable files are logged and skipped.
    pub fn load_all<T: DeserializeOwned>(&self, dir: &Path) -> io::Result<Vec<(String, T)>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let Some(stem) = name.strip_suffix(".json") else {
                continue;
            };
            if stem.ends_with(".workflow") {
                continue;
            }
            match fs::read(&path).map_err(|e| e.to_string()).and_then(|b| {
                serde_json::from_slice::<T>(&b).map_err(|e| e.to_string())
            }) {
                Ok(v) => out.push((stem.to_string(), v)),
                Err(e) => warn!(path = %path.display(), error = %e, "skipping unreadable record"),
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }
}
