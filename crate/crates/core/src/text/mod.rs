//! Document ingestion, regex cleaning, and tokenization.

mod clean;
mod ingest;
mod porter;
mod stopwords;
mod tokenize;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clean::{clean_text, compile_filters, RegexFilter};
pub use ingest::{
    load_delimited_bytes, load_documents, CommandConverter, DelimitedOptions, DocumentSource, PathSource, SourceFormat,
};
pub use porter::porter_stem;
pub use stopwords::StopwordList;
pub use tokenize::{pre_stem_tokens, tokenize, tokenize_all, Stemmer, TokenizerOptions};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("path not found: {0}")]
    MissingPath(PathBuf),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0} is not valid UTF-8")]
    InvalidUtf8(PathBuf),
    #[error("duplicate document id '{0}'")]
    DuplicateId(String),
    #[error("empty document id in {0}")]
    EmptyId(PathBuf),
    #[error("column '{column}' not found in header of {path}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("malformed delimited file {path}: {message}")]
    Delimited { path: PathBuf, message: String },
    #[error("invalid regex at index {index} ('{pattern}'): {message}")]
    InvalidPattern {
        index: usize,
        pattern: String,
        message: String,
    },
    #[error("unknown stemmer '{0}' (expected \"porter\" or \"none\")")]
    UnknownStemmer(String),
    #[error("stopword '{0}' contains whitespace")]
    InvalidStopword(String),
    #[error("document converter failed: {0}")]
    Converter(String),
}

/// One unit of text with an identifier and metadata such as a publication
/// year. Metadata keys are stored lowercase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub metadata: BTreeMap<String, String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_metadata(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(key.to_lowercase(), value.into());
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(&key.to_lowercase()).map(String::as_str)
    }
}

/// Ordered terms of one document after tokenization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

impl TokenizedDoc {
    pub fn new(doc_id: impl Into<String>, tokens: Vec<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            tokens,
        }
    }
}
