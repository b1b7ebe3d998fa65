use std::fs;
use std::path::{Path, PathBuf};

use topicflow_core::hash::sha256_hex;
use topicflow_core::text::{
    load_delimited_bytes, load_documents, DelimitedOptions, Document, SourceFormat, StopwordList,
};

use crate::model::SourceDescriptor;
use crate::templates::{SAMPLE_ABSTRACTS, SAMPLE_ABSTRACTS_SOURCE, STOPWORDS_EN_SOURCE};

pub const BUILTIN_PREFIX: &str = "builtin:";
pub const CORPUS_PREFIX: &str = "corpus:";
/// File holding an uploaded corpus inside its store directory.
pub const CORPUS_DOCUMENTS_FILE: &str = "documents.json";

/// Content of a data node after resolution.
#[derive(Debug, Clone)]
pub enum SourceContent {
    Documents(Vec<Document>),
    Stopwords(StopwordList),
}

#[derive(Debug, Clone)]
pub struct ResolvedSource {
    pub content: SourceContent,
    /// SHA-256 of the bytes the content was parsed from.
    pub hash: String,
}

/// Turns source descriptors into content.
#[derive(Debug, Clone, Default)]
pub struct SourceResolver {
    /// Relative paths are resolved against this directory.
    pub base_dir: PathBuf,
    /// Directory of uploaded corpora, one sub-directory per corpus id.
    pub corpus_dir: Option<PathBuf>,
}

fn delimited_options(src: &SourceDescriptor) -> DelimitedOptions {
    let mut opts = DelimitedOptions::default();
    if let Some(d) = src.delimiter.as_deref().and_then(|d| d.bytes().next()) {
        opts.delimiter = d;
    }
    if let Some(c) = &src.id_column {
        opts.id_column = c.clone();
    }
    if let Some(c) = &src.text_column {
        opts.text_column = c.clone();
    }
    if let Some(c) = &src.metadata_columns {
        opts.metadata_columns = c.clone();
    }
    opts
}

/// Hash of a text directory: every `.txt` file name and content, sorted by name.
fn hash_txt_source(path: &Path) -> Result<String, String> {
    let mut files = Vec::new();
    if path.is_dir() {
        for entry in fs::read_dir(path).map_err(|e| format!("{}: {e}", path.display()))? {
            let p = entry.map_err(|e| e.to_string())?.path();
            if p.is_file() && p.extension().is_some_and(|e| e == "txt") {
                files.push(p);
            }
        }
    } else {
        files.push(path.to_path_buf());
    }
    files.sort();
    let mut buf = Vec::new();
    for f in files {
        let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let bytes = fs::read(&f).map_err(|e| format!("{}: {e}", f.display()))?;
        buf.extend_from_slice(name.as_bytes());
        buf.push(0);
        buf.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
        buf.extend_from_slice(&bytes);
    }
    Ok(sha256_hex(&buf))
}

impl SourceResolver {
    pub fn new(base_dir: impl Into<PathBuf>) -> Self {
        Self {
            base_dir: base_dir.into(),
            corpus_dir: None,
        }
    }

    pub fn with_corpus_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.corpus_dir = Some(dir.into());
        self
    }

    fn path(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn read(&self, path: &str) -> Result<(Vec<u8>, PathBuf), String> {
        if let Some(name) = path.strip_prefix(BUILTIN_PREFIX) {
            let bytes = match name {
                SAMPLE_ABSTRACTS => SAMPLE_ABSTRACTS_SOURCE.as_bytes(),
                "stopwords-en" => STOPWORDS_EN_SOURCE.as_bytes(),
                other => return Err(format!("unknown builtin source '{other}'")),
            };
            return Ok((bytes.to_vec(), PathBuf::from(path)));
        }
        let full = self.path(path);
        let bytes = fs::read(&full).map_err(|e| format!("cannot read {}: {e}", full.display()))?;
        Ok((bytes, full))
    }

    pub fn resolve(&self, src: &SourceDescriptor) -> Result<ResolvedSource, String> {
        match src.format.as_str() {
            "stopwords" => {
                let (bytes, origin) = self.read(&src.path)?;
                let text = String::from_utf8(bytes.clone())
                    .map_err(|_| format!("{} is not valid UTF-8", origin.display()))?;
                let list = StopwordList::parse(&text).map_err(|e| e.to_string())?;
                Ok(ResolvedSource {
                    content: SourceContent::Stopwords(list),
                    hash: sha256_hex(&bytes),
                })
            }
            "delimited" => {
                let (bytes, origin) = self.read(&src.path)?;
                let docs = load_delimited_bytes(&bytes, &delimited_options(src), &origin)
                    .map_err(|e| e.to_string())?;
                Ok(ResolvedSource {
                    content: SourceContent::Documents(docs),
                    hash: sha256_hex(&bytes),
                })
            }
            "txt-dir" => {
                let full = self.path(&src.path);
                let docs = load_documents(&full, &SourceFormat::TxtDir).map_err(|e| e.to_string())?;
                Ok(ResolvedSource {
                    content: SourceContent::Documents(docs),
                    hash: hash_txt_source(&full)?,
                })
            }
            "corpus" => {
                let id = src
                    .path
                    .strip_prefix(CORPUS_PREFIX)
                    .ok_or_else(|| format!("corpus sources use '{CORPUS_PREFIX}<id>', got '{}'", src.path))?;
                if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric()) {
                    return Err(format!("invalid corpus id '{id}'"));
                }
                let dir = self
                    .corpus_dir
                    .as_ref()
                    .ok_or_else(|| format!("no corpus store configured for '{}'", src.path))?;
                let file = dir.join(id).join(CORPUS_DOCUMENTS_FILE);
                let bytes = fs::read(&file).map_err(|_| format!("unknown corpus '{id}'"))?;
                let docs: Vec<Document> = serde_json::from_slice(&bytes)
                    .map_err(|e| format!("corrupt corpus '{id}': {e}"))?;
                Ok(ResolvedSource {
                    content: SourceContent::Documents(docs),
                    hash: sha256_hex(&bytes),
                })
            }
            other => Err(format!("unknown source format '{other}'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_sources() {
        let r = SourceResolver::default();
        let docs = r.resolve(&SourceDescriptor::new("builtin:sample-abstracts", "delimited")).unwrap();
        match docs.content {
            SourceContent::Documents(d) => {
                assert_eq!(d.len(), 51);
                assert!(d[0].meta("year").is_some());
            }
            _ => panic!("expected documents"),
        }
        let sw = r.resolve(&SourceDescriptor::new("builtin:stopwords-en", "stopwords")).unwrap();
        assert!(matches!(sw.content, SourceContent::Stopwords(ref s) if s.contains("the")));
        assert!(r.resolve(&SourceDescriptor::new("builtin:nope", "delimited")).is_err());
    }

    #[test]
    fn txt_dir_hash_tracks_content() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), "one").unwrap();
        let r = SourceResolver::new(dir.path());
        let src = SourceDescriptor::new(".", "txt-dir");
        let h1 = r.resolve(&src).unwrap().hash;
        fs::write(dir.path().join("a.txt"), "two").unwrap();
        assert_ne!(h1, r.resolve(&src).unwrap().hash);
    }

    #[test]
    fn missing_file_is_reported() {
        let r = SourceResolver::new("/nonexistent-dir");
        let err = r.resolve(&SourceDescriptor::new("stop.txt", "stopwords")).unwrap_err();
        assert!(err.contains("stop.txt"));
    }
}
