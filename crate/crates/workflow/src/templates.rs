//! Bundled data and the standard three-step workflow.

use serde_json::json;
use topicflow_core::text::StopwordList;

use crate::model::{Edge, NodeSpec, SourceDescriptor, Workflow};

pub const SAMPLE_ABSTRACTS: &str = "sample-abstracts";

/// 51 synthetic conference abstracts with `id`, `text` and `year` columns.
pub const SAMPLE_ABSTRACTS_SOURCE: &str = include_str!("../assets/sample_abstracts.csv");

pub const STOPWORDS_EN_SOURCE: &str = StopwordList::default_english_source();

/// Documents and stopwords feed the tokenizer, then the corpus builder and
/// the topic model; the four outputs hang off the model.
pub fn figure1_template() -> Workflow {
    let mut w = Workflow::new("figure-1");
    w.description = "Tokenize documents without stopwords, build the dictionary and corpus, train LDA with K=5, and export tables and visualization payloads".into();
    let docs = SourceDescriptor {
        metadata_columns: Some(vec!["year".into()]),
        ..SourceDescriptor::new("builtin:sample-abstracts", "delimited")
    };
    w.nodes = vec![
        NodeSpec::data("docs", docs).at(40.0, 80.0),
        NodeSpec::data("stopwords", SourceDescriptor::new("builtin:stopwords-en", "stopwords")).at(40.0, 220.0),
        NodeSpec::tool("tokenizer", "tokenizer").at(260.0, 150.0),
        NodeSpec::tool("corpus", "corpus-builder").at(480.0, 150.0),
        NodeSpec::tool("lda", "lda")
            .with_param("num_topics", 5)
            .with_param("iterations", 1000)
            .at(700.0, 150.0),
        NodeSpec::tool("terms", "terms-x-topics").with_param("n", 30).at(920.0, 40.0),
        NodeSpec::tool("doc_topics", "docs-x-topics").at(920.0, 130.0),
        NodeSpec::tool("ldavis", "ldavis").with_param("r", 30).at(920.0, 220.0),
        NodeSpec::tool("mtm", "mtmvis")
            .with_param("grouping_key", "year")
            .with_param("mode", json!("dominant"))
            .at(920.0, 310.0),
    ];
    w.edges = vec![
        Edge::new("docs", "out", "tokenizer", "docs"),
        Edge::new("stopwords", "out", "tokenizer", "stopwords"),
        Edge::new("tokenizer", "tokens", "corpus", "tokens"),
        Edge::new("corpus", "corpus", "lda", "corpus"),
        Edge::new("corpus", "dictionary", "lda", "dictionary"),
        Edge::new("lda", "model", "terms", "model"),
        Edge::new("corpus", "dictionary", "terms", "dictionary"),
        Edge::new("lda", "model", "doc_topics", "model"),
        Edge::new("docs", "out", "doc_topics", "docs"),
        Edge::new("lda", "model", "ldavis", "model"),
        Edge::new("corpus", "corpus", "ldavis", "corpus"),
        Edge::new("corpus", "dictionary", "ldavis", "dictionary"),
        Edge::new("lda", "model", "mtm", "model"),
        Edge::new("docs", "out", "mtm", "docs"),
    ];
    w
}
