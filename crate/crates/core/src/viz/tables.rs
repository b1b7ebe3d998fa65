use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::VizError;
use crate::corpus::Dictionary;
use crate::lda::LdaModel;
use crate::text::Document;

pub const DEFAULT_TOP_TERMS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermWeight {
    pub term_id: u32,
    pub term: String,
    pub weight: f64,
}

/// Top terms of every topic by phi, `min(n, V)` per topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermsXTopics {
    pub topics: Vec<Vec<TermWeight>>,
}

impl TermsXTopics {
    /// Long format: `topic,rank,term,phi` with 1-based topic and rank.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["topic", "rank", "term", "phi"]).expect("in-memory write");
        for (k, terms) in self.topics.iter().enumerate() {
            for (r, t) in terms.iter().enumerate() {
                w.write_record([
                    (k + 1).to_string(),
                    (r + 1).to_string(),
                    t.term.clone(),
                    t.weight.to_string(),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

pub fn terms_x_topics(model: &LdaModel, dict: &Dictionary, n: usize) -> TermsXTopics {
    let topics = (0..model.num_topics())
        .map(|k| {
            model
                .top_terms(k, n)
                .into_iter()
                .map(|(term_id, weight)| TermWeight {
                    term_id,
                    term: dict.term(term_id).to_string(),
                    weight,
                })
                .collect()
        })
        .collect();
    TermsXTopics { topics }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocTopicRow {
    pub doc_id: String,
    pub metadata: BTreeMap<String, String>,
    pub theta: Vec<f64>,
    /// 1-based index of the largest theta; ties go to the lowest index.
    pub dominant_topic: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocsXTopics {
    pub num_topics: usize,
    /// Union of metadata keys over all documents, sorted.
    pub metadata_columns: Vec<String>,
    pub rows: Vec<DocTopicRow>,
}

impl DocsXTopics {
    /// Columns: `doc_id, <metadata...>, topic_1..topic_K, dominant_topic`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["doc_id".to_string()];
        header.extend(self.metadata_columns.iter().cloned());
        header.extend((1..=self.num_topics).map(|k| format!("topic_{k}")));
        header.push("dominant_topic".into());
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let mut rec = vec![row.doc_id.clone()];
            rec.extend(
                self.metadata_columns
                    .iter()
                    .map(|c| row.metadata.get(c).cloned().unwrap_or_default()),
            );
            rec.extend(row.theta.iter().map(f64::to_string));
            rec.push(row.dominant_topic.to_string());
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

fn dominant(theta: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in theta.iter().enumerate().skip(1) {
        if x > theta[best] {
            best = i;
        }
    }
    best + 1
}

/// Joins theta rows with their documents. Documents must be in model row
/// order; when the model carries document ids they must match.
pub fn docs_x_topics(model: &LdaModel, documents: &[Document]) -> Result<DocsXTopics, VizError> {
    if documents.len() != model.num_docs() {
        return Err(VizError::LengthMismatch {
            documents: documents.len(),
            rows: model.num_docs(),
        });
    }
    if model.doc_ids.len() == documents.len() {
        for (i, (expected, doc)) in model.doc_ids.iter().zip(documents).enumerate() {
            if *expected != doc.id {
                return Err(VizError::IdMismatch {
                    position: i,
                    expected: expected.clone(),
                    found: doc.id.clone(),
                });
            }
        }
    }
    let metadata_columns: BTreeSet<String> = documents
        .iter()
        .flat_map(|d| d.metadata.keys().cloned())
        .collect();
    let rows = documents
        .iter()
        .enumerate()
        .map(|(d, doc)| {
            let theta = model.theta.row(d).to_vec();
            DocTopicRow {
                doc_id: doc.id.clone(),
                metadata: doc.metadata.clone(),
                dominant_topic: dominant(&theta),
                theta,
            }
        })
        .collect();
    Ok(DocsXTopics {
        num_topics: model.num_topics(),
        metadata_columns: metadata_columns.into_iter().collect(),
        rows,
    })
}
