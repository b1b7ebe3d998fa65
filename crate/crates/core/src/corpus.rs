//! Term dictionary and bag-of-words corpus.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::sha256_hex;
use crate::text::TokenizedDoc;

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("cannot build a dictionary from zero documents")]
    NoDocuments,
    #[error("every term was filtered out (min_df={min_df}, max_df_fraction={max_df_fraction}, keep_n={keep_n:?})")]
    EmptyVocabulary {
        min_df: usize,
        max_df_fraction: f64,
        keep_n: Option<usize>,
    },
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
}

/// Frequency filters applied while building a [`Dictionary`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DictionaryFilter {
    pub min_df: usize,
    pub max_df_fraction: f64,
    pub keep_n: Option<usize>,
}

impl Default for DictionaryFilter {
    fn default() -> Self {
        Self {
            min_df: 1,
            max_df_fraction: 1.0,
            keep_n: None,
        }
    }
}

impl DictionaryFilter {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.min_df < 1 {
            return Err(CorpusError::InvalidFilter("min_df must be >= 1".into()));
        }
        if !(self.max_df_fraction > 0.0 && self.max_df_fraction <= 1.0) {
            return Err(CorpusError::InvalidFilter(
                "max_df_fraction must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Bijection between terms and dense ids `0..V`, numbered in lexicographic
/// term order, with document and collection frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dictionary {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    collection_freq: Vec<u64>,
    num_docs: usize,
}

impl Dictionary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of documents the frequencies were counted over.
    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.terms
            .binary_search_by(|t| t.as_str().cmp(term))
            .ok()
            .map(|i| i as u32)
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self, id: u32) -> u32 {
        self.doc_freq[id as usize]
    }

    pub fn collection_freq(&self, id: u32) -> u64 {
        self.collection_freq[id as usize]
    }

    pub fn term_to_id(&self) -> BTreeMap<&str, u32> {
        self.terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i as u32))
            .collect()
    }

    /// Sparse count vector, sorted by term id; out-of-vocabulary tokens are dropped.
    pub fn to_bow(&self, doc: &TokenizedDoc) -> Vec<(u32, u32)> {
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        for tok in &doc.tokens {
            if let Some(id) = self.id(tok) {
                *counts.entry(id).or_default() += 1;
            }
        }
        counts.into_iter().collect()
    }

    /// CSV export with columns `id,term,doc_freq,collection_freq`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "term", "doc_freq", "collection_freq"])
            .expect("in-memory write");
        for (i, t) in self.terms.iter().enumerate() {
            w.write_record([
                i.to_string(),
                t.clone(),
                self.doc_freq[i].to_string(),
                self.collection_freq[i].to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    /// SHA-256 of the CSV export; models record it to reference their dictionary.
    pub fn content_hash(&self) -> String {
        sha256_hex(self.to_csv().as_bytes())
    }
}

pub fn build_dictionary(
    docs: &[TokenizedDoc],
    filter: &DictionaryFilter,
) -> Result<Dictionary, CorpusError> {
    filter.validate()?;
    if docs.is_empty() {
        return Err(CorpusError::NoDocuments);
    }
    let mut stats: BTreeMap<&str, (u32, u64)> = BTreeMap::new();
    for doc in docs {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for tok in &doc.tokens {
            let entry = stats.entry(tok.as_str()).or_default();
            entry.1 += 1;
            if seen.insert(tok.as_str()) {
                entry.0 += 1;
            }
        }
    }
    let max_df = filter.max_df_fraction * docs.len() as f64;
    let mut kept: Vec<(&str, u32, u64)> = stats
        .into_iter()
        .filter(|(_, (df, _))| *df as usize >= filter.min_df && (*df as f64) <= max_df)
        .map(|(t, (df, cf))| (t, df, cf))
        .collect();
    if let Some(n) = filter.keep_n {
        // highest collection frequency first, ties lexicographic
        kept.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(b.0)));
        kept.truncate(n);
        kept.sort_by(|a, b| a.0.cmp(b.0));
    }
    if kept.is_empty() {
        return Err(CorpusError::EmptyVocabulary {
            min_df: filter.min_df,
            max_df_fraction: filter.max_df_fraction,
            keep_n: filter.keep_n,
        });
    }
    Ok(Dictionary {
        terms: kept.iter().map(|k| k.0.to_string()).collect(),
        doc_freq: kept.iter().map(|k| k.1).collect(),
        collection_freq: kept.iter().map(|k| k.2).collect(),
        num_docs: docs.len(),
    })
}

/// One document's sparse term counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BowDoc {
    pub doc_id: String,
    /// `(term_id, count)` strictly increasing in term id, counts >= 1.
    pub terms: Vec<(u32, u32)>,
}

impl BowDoc {
    pub fn len(&self) -> u64 {
        self.terms.iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Bag-of-words corpus aligned 1:1 with its tokenized documents. Documents
/// whose tokens are all out of vocabulary keep an empty vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BowCorpus {
    docs: Vec<BowDoc>,
    total_tokens: u64,
}

impl BowCorpus {
    pub fn build(docs: &[TokenizedDoc], dict: &Dictionary) -> Self {
        let docs: Vec<BowDoc> = docs
            .iter()
            .map(|d| BowDoc {
                doc_id: d.doc_id.clone(),
                terms: dict.to_bow(d),
            })
            .collect();
        Self::from_docs(docs)
    }

    pub fn from_docs(docs: Vec<BowDoc>) -> Self {
        let total_tokens = docs.iter().map(BowDoc::len).sum();
        Self { docs, total_tokens }
    }

    pub fn docs(&self) -> &[BowDoc] {
        &self.docs
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn max_term_id(&self) -> Option<u32> {
        self.docs
            .iter()
            .filter_map(|d| d.terms.last().map(|&(id, _)| id))
            .max()
    }

    /// Corpus-wide term probability `p_w` over a vocabulary of size `vocab`.
    pub fn term_probabilities(&self, vocab: usize) -> Vec<f64> {
        let mut counts = vec![0u64; vocab];
        for d in &self.docs {
            for &(id, c) in &d.terms {
                counts[id as usize] += c as u64;
            }
        }
        let n = self.total_tokens as f64;
        counts.into_iter().map(|c| c as f64 / n).collect()
    }

    /// One line per document: the id followed by space-separated `term_id:count`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for d in &self.docs {
            out.push_str(&d.doc_id);
            for (id, c) in &d.terms {
                let _ = write!(out, " {id}:{c}");
            }
            out.push('\n');
        }
        out
    }
}
