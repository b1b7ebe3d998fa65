//! Tabular outputs and the JSON payloads consumed by the web views.

mod ldavis;
mod mtm;
mod tables;

use thiserror::Error;

pub use ldavis::{
    intertopic_map, jensen_shannon, lambda_grid, ldavis_data, relevance_table, IntertopicMap,
    DefaultTerm, LdavisData, RankedTerm, TopicPoint, TopicTerms, DEFAULT_RELEVANCE_TERMS,
};
pub use mtm::{format_percent, mtm_data, natural_cmp, MtmData, MtmGroup, MtmMode, UNKNOWN_GROUP};
pub use tables::{docs_x_topics, terms_x_topics, DocTopicRow, DocsXTopics, TermsXTopics, TermWeight, DEFAULT_TOP_TERMS};

/// Version stamped into every JSON payload.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum VizError {
    #[error("{documents} documents supplied for a model with {rows} theta rows")]
    LengthMismatch { documents: usize, rows: usize },
    #[error("document {position} is '{found}' but the model row is '{expected}'")]
    IdMismatch {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("corpus and model disagree: {0}")]
    DimensionMismatch(String),
    #[error("term '{0}' never occurs in the corpus")]
    ZeroTermProbability(String),
    #[error("no document has metadata attribute '{0}'")]
    MissingGroupingKey(String),
    #[error("unknown MTM mode '{0}' (expected \"dominant\" or \"mean-theta\")")]
    UnknownMode(String),
}
