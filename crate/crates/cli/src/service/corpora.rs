//! Uploaded corpora: a zip of `.txt` files or one delimited file, normalized
//! to a document list and stored under the SHA-256 of that list.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Cursor, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use topicflow_core::hash::sha256_hex;
use topicflow_core::text::{load_delimited_bytes, DelimitedOptions, Document};

#[derive(Debug, Error)]
pub enum UploadError {
    #[error("archive is unreadable: {0}")]
    Zip(String),
    #[error("archive contains no .txt files")]
    EmptyArchive,
    #[error("archive contains two documents with id '{0}'")]
    DuplicateId(String),
    #[error("{0} is not valid UTF-8")]
    InvalidUtf8(String),
    #[error("{0}")]
    Parse(String),
    #[error("delimiter must be a single byte, got '{0}'")]
    BadDelimiter(String),
}

/// Options sent next to the file in the multipart form.
#[derive(Debug, Clone, Default)]
pub struct UploadOptions {
    pub delimiter: Option<String>,
    pub id_column: Option<String>,
    pub text_column: Option<String>,
    /// Comma separated.
    pub metadata_columns: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub corpus_id: String,
    pub doc_count: usize,
    pub file_name: String,
    /// `zip` or `delimited`.
    pub format: String,
    /// Union of metadata keys over all documents.
    pub metadata_keys: Vec<String>,
    pub created_at: String,
}

pub fn is_zip(file_name: &str, bytes: &[u8]) -> bool {
    file_name.to_ascii_lowercase().ends_with(".zip") || bytes.starts_with(b"PK\x03\x04")
}

pub fn documents_from_zip(bytes: &[u8]) -> Result<Vec<Document>, UploadError> {
    let mut archive = zip::ZipArchive::new(Cursor::new(bytes)).map_err(|e| UploadError::Zip(e.to_string()))?;
    let mut docs: BTreeMap<String, Document> = BTreeMap::new();
    for i in 0..archive.len() {
        let mut entry = archive.by_index(i).map_err(|e| UploadError::Zip(e.to_string()))?;
        if entry.is_dir() {
            continue;
        }
        let name = entry.name().to_string();
        if name.starts_with("__MACOSX/") {
            continue;
        }
        let file = Path::new(&name);
        let base = file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if base.starts_with('.') || !file.extension().is_some_and(|e| e.eq_ignore_ascii_case("txt")) {
            continue;
        }
        let id = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let mut raw = Vec::new();
        entry.read_to_end(&mut raw).map_err(|e| UploadError::Zip(e.to_string()))?;
        let text = String::from_utf8(raw).map_err(|_| UploadError::InvalidUtf8(name.clone()))?;
        if docs.contains_key(&id) {
            return Err(UploadError::DuplicateId(id));
        }
        docs.insert(id.clone(), Document::new(id, text));
    }
    if docs.is_empty() {
        return Err(UploadError::EmptyArchive);
    }
    Ok(docs.into_values().collect())
}

pub fn documents_from_delimited(
    file_name: &str,
    bytes: &[u8],
    opts: &UploadOptions,
) -> Result<Vec<Document>, UploadError> {
    let mut d = DelimitedOptions::default();
    match opts.delimiter.as_deref() {
        Some(s) if s == "\\t" || s == "tab" => d.delimiter = b'\t',
        Some(s) if s.len() == 1 => d.delimiter = s.as_bytes()[0],
        Some("") | None => {
            if file_name.to_ascii_lowercase().ends_with(".tsv") {
                d.delimiter = b'\t';
            }
        }
        Some(s) => return Err(UploadError::BadDelimiter(s.to_string())),
    }
    if let Some(c) = opts.id_column.as_deref().filter(|c| !c.is_empty()) {
        d.id_column = c.to_string();
    }
    if let Some(c) = opts.text_column.as_deref().filter(|c| !c.is_empty()) {
        d.text_column = c.to_string();
    }
    if let Some(c) = &opts.metadata_columns {
        d.metadata_columns = c.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
    }
    load_delimited_bytes(bytes, &d, Path::new(file_name)).map_err(|e| UploadError::Parse(e.to_string()))
}

pub fn parse_upload(file_name: &str, bytes: &[u8], opts: &UploadOptions) -> Result<Vec<Document>, UploadError> {
    if is_zip(file_name, bytes) {
        documents_from_zip(bytes)
    } else {
        documents_from_delimited(file_name, bytes, opts)
    }
}

/// Stored bytes and the id derived from them.
pub fn normalize(docs: &[Document]) -> (String, Vec<u8>) {
    let mut bytes = serde_json::to_vec(docs).expect("documents serialize");
    bytes.push(b'\n');
    (sha256_hex(&bytes), bytes)
}

pub fn metadata_keys(docs: &[Document]) -> Vec<String> {
    let keys: BTreeSet<&String> = docs.iter().flat_map(|d| d.metadata.keys()).collect();
    keys.into_iter().cloned().collect()
}
