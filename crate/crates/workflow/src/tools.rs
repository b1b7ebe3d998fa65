//! Runs one tool node on its inputs.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use serde_json::Value;
use topicflow_core::corpus::{build_dictionary, BowCorpus, Dictionary, DictionaryFilter};
use topicflow_core::eval::{coherence_sweep, CoherenceMetric};
use topicflow_core::lda::{train_lda, write_archive, LdaModel, LdaParams};
use topicflow_core::text::{
    clean_text, compile_filters, tokenize_all, Document, Stemmer, StopwordList, TokenizedDoc,
    TokenizerOptions,
};
use topicflow_core::viz::{docs_x_topics, ldavis_data, mtm_data, terms_x_topics, MtmMode};

use crate::model::{NodeSpec, PortType};
use crate::registry::ToolSpec;

/// A value flowing along an edge.
#[derive(Debug, Clone)]
pub enum NodeValue {
    Texts(Arc<Vec<Document>>),
    Stopwords(Arc<StopwordList>),
    Tokens(Arc<Vec<TokenizedDoc>>),
    Dictionary(Arc<Dictionary>),
    Corpus(Arc<BowCorpus>),
    Model(Arc<LdaModel>),
    /// CSV text.
    Table(Arc<String>),
    /// Serialized JSON.
    Payload(Arc<Vec<u8>>),
}

fn json_line<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec(value).expect("serializable");
    out.push(b'\n');
    out
}

impl NodeValue {
    pub fn port_type(&self) -> PortType {
        match self {
            NodeValue::Texts(_) => PortType::TextCollection,
            NodeValue::Stopwords(_) => PortType::StopwordList,
            NodeValue::Tokens(_) => PortType::TokenizedCollection,
            NodeValue::Dictionary(_) => PortType::Dictionary,
            NodeValue::Corpus(_) => PortType::BowCorpus,
            NodeValue::Model(_) => PortType::TopicModel,
            NodeValue::Table(_) => PortType::Table,
            NodeValue::Payload(_) => PortType::VizPayload,
        }
    }

    /// Bytes written to the artifact file.
    pub fn artifact_bytes(&self) -> Vec<u8> {
        match self {
            NodeValue::Texts(d) => json_line(d.as_slice()),
            NodeValue::Stopwords(s) => s.to_text().into_bytes(),
            NodeValue::Tokens(t) => json_line(t.as_slice()),
            NodeValue::Dictionary(d) => d.to_csv().into_bytes(),
            NodeValue::Corpus(c) => json_line(c.as_ref()),
            NodeValue::Model(m) => {
                let mut out = Vec::new();
                write_archive(m, &mut out).expect("writing to memory cannot fail");
                out
            }
            NodeValue::Table(t) => t.as_bytes().to_vec(),
            NodeValue::Payload(p) => p.as_ref().clone(),
        }
    }
}

/// Parameter values with registry defaults filled in.
struct Params<'a> {
    node: &'a NodeSpec,
    tool: &'a ToolSpec,
}

impl<'a> Params<'a> {
    fn get(&self, name: &str) -> Option<&'a Value> {
        match self.node.params.get(name) {
            Some(v) if !v.is_null() => Some(v),
            _ => self.tool.param(name).and_then(|p| p.default.as_ref()),
        }
    }

    fn usize(&self, name: &str) -> Result<Option<usize>, String> {
        self.get(name)
            .map(|v| {
                v.as_u64()
                    .map(|x| x as usize)
                    .ok_or_else(|| format!("parameter '{name}' must be a non-negative integer"))
            })
            .transpose()
    }

    fn f64(&self, name: &str) -> Result<Option<f64>, String> {
        self.get(name)
            .map(|v| v.as_f64().ok_or_else(|| format!("parameter '{name}' must be a number")))
            .transpose()
    }

    fn str(&self, name: &str) -> Result<Option<&'a str>, String> {
        self.get(name)
            .map(|v| v.as_str().ok_or_else(|| format!("parameter '{name}' must be a string")))
            .transpose()
    }

    fn required<T>(&self, name: &str, v: Option<T>) -> Result<T, String> {
        v.ok_or_else(|| format!("parameter '{name}' is required"))
    }

    fn lda(&self, seed: u64) -> Result<LdaParams, String> {
        let d = LdaParams::default();
        Ok(LdaParams {
            alpha: self.f64("alpha")?,
            beta: self.f64("beta")?.unwrap_or(d.beta),
            iterations: self.usize("iterations")?.unwrap_or(d.iterations),
            burn_in: self.usize("burn_in")?.unwrap_or(d.burn_in),
            seed,
        })
    }
}

pub type Inputs = BTreeMap<String, NodeValue>;

macro_rules! input {
    ($inputs:expr, $port:literal, $variant:ident) => {
        match $inputs.get($port) {
            Some(NodeValue::$variant(v)) => v,
            Some(other) => {
                return Err(format!(
                    "input '{}' carries {} instead of the declared type",
                    $port,
                    other.port_type()
                ))
            }
            None => return Err(format!("input '{}' is not connected", $port)),
        }
    };
}

fn payload<T: Serialize>(value: &T) -> NodeValue {
    NodeValue::Payload(Arc::new(json_line(value)))
}

/// Executes `tool` for `node`. Returns the outputs keyed by port name.
pub fn run_tool(
    node: &NodeSpec,
    tool: &ToolSpec,
    inputs: &Inputs,
    seed: u64,
) -> Result<Vec<(&'static str, NodeValue)>, String> {
    let p = Params { node, tool };
    let out = match tool.name {
        "regex-filter" => {
            let docs = input!(inputs, "docs", Texts);
            let patterns: Vec<String> = p
                .get("patterns")
                .and_then(Value::as_array)
                .map(|a| a.iter().filter_map(|v| v.as_str().map(String::from)).collect())
                .unwrap_or_default();
            let filters = compile_filters(&patterns).map_err(|e| e.to_string())?;
            let cleaned: Vec<Document> = docs
                .iter()
                .map(|d| Document {
                    text: clean_text(&d.text, &filters),
                    ..d.clone()
                })
                .collect();
            vec![("docs", NodeValue::Texts(Arc::new(cleaned)))]
        }
        "tokenizer" => {
            let docs = input!(inputs, "docs", Texts);
            let empty = StopwordList::default();
            let stopwords = match inputs.get("stopwords") {
                Some(NodeValue::Stopwords(s)) => s.as_ref(),
                Some(_) => return Err("input 'stopwords' has the wrong type".into()),
                None => &empty,
            };
            let defaults = TokenizerOptions::default();
            let stemmer: Stemmer = match p.str("stemmer")? {
                Some(s) => s.parse().map_err(|e: topicflow_core::text::TextError| e.to_string())?,
                None => defaults.stemmer,
            };
            let opts = TokenizerOptions {
                lowercase: p.get("lowercase").and_then(Value::as_bool).unwrap_or(defaults.lowercase),
                min_token_length: p.usize("min_token_length")?.unwrap_or(defaults.min_token_length),
                stemmer,
            };
            vec![("tokens", NodeValue::Tokens(Arc::new(tokenize_all(docs, stopwords, &opts))))]
        }
        "corpus-builder" => {
            let tokens = input!(inputs, "tokens", Tokens);
            let d = DictionaryFilter::default();
            let filter = DictionaryFilter {
                min_df: p.usize("min_df")?.unwrap_or(d.min_df),
                max_df_fraction: p.f64("max_df_fraction")?.unwrap_or(d.max_df_fraction),
                keep_n: p.usize("keep_n")?,
            };
            let dict = build_dictionary(tokens, &filter).map_err(|e| e.to_string())?;
            let corpus = BowCorpus::build(tokens, &dict);
            vec![
                ("dictionary", NodeValue::Dictionary(Arc::new(dict))),
                ("corpus", NodeValue::Corpus(Arc::new(corpus))),
            ]
        }
        "lda" => {
            let corpus = input!(inputs, "corpus", Corpus);
            let dict = input!(inputs, "dictionary", Dictionary);
            let k = p.required("num_topics", p.usize("num_topics")?)?;
            let config = p.lda(seed)?.config_for(k);
            let model = train_lda(corpus, dict, &config).map_err(|e| e.to_string())?;
            vec![("model", NodeValue::Model(Arc::new(model)))]
        }
        "coherence-sweep" => {
            let corpus = input!(inputs, "corpus", Corpus);
            let dict = input!(inputs, "dictionary", Dictionary);
            let tokens = input!(inputs, "tokens", Tokens);
            let k_list: Vec<usize> = p
                .get("k_list")
                .and_then(Value::as_array)
                .map(|a| a.iter().filter_map(|v| v.as_u64().map(|x| x as usize)).collect())
                .unwrap_or_default();
            let metric: CoherenceMetric = p
                .str("metric")?
                .unwrap_or("umass")
                .parse()
                .map_err(|e: topicflow_core::eval::EvalError| e.to_string())?;
            let top_m = p.usize("top_m")?.unwrap_or(topicflow_core::eval::DEFAULT_TOP_M);
            let result = coherence_sweep(corpus, dict, tokens, &k_list, &p.lda(seed)?, top_m, metric)
                .map_err(|e| e.to_string())?;
            vec![("table", NodeValue::Table(Arc::new(result.to_csv())))]
        }
        "terms-x-topics" => {
            let model = input!(inputs, "model", Model);
            let dict = input!(inputs, "dictionary", Dictionary);
            let n = p.usize("n")?.unwrap_or(topicflow_core::viz::DEFAULT_TOP_TERMS);
            vec![("table", NodeValue::Table(Arc::new(terms_x_topics(model, dict, n).to_csv())))]
        }
        "docs-x-topics" => {
            let model = input!(inputs, "model", Model);
            let docs = input!(inputs, "docs", Texts);
            let table = docs_x_topics(model, docs).map_err(|e| e.to_string())?;
            vec![("table", NodeValue::Table(Arc::new(table.to_csv())))]
        }
        "ldavis" => {
            let model = input!(inputs, "model", Model);
            let corpus = input!(inputs, "corpus", Corpus);
            let dict = input!(inputs, "dictionary", Dictionary);
            let r = p.usize("r")?.unwrap_or(topicflow_core::viz::DEFAULT_RELEVANCE_TERMS);
            let data = ldavis_data(model, corpus, dict, r).map_err(|e| e.to_string())?;
            vec![("payload", payload(&data))]
        }
        "mtmvis" => {
            let model = input!(inputs, "model", Model);
            let docs = input!(inputs, "docs", Texts);
            let key = p.str("grouping_key")?.unwrap_or("year");
            let mode: MtmMode = p
                .str("mode")?
                .unwrap_or("dominant")
                .parse()
                .map_err(|e: topicflow_core::viz::VizError| e.to_string())?;
            let table = docs_x_topics(model, docs).map_err(|e| e.to_string())?;
            let data = mtm_data(&table, key, mode).map_err(|e| e.to_string())?;
            vec![("payload", payload(&data))]
        }
        other => return Err(format!("tool '{other}' has no implementation")),
    };
    Ok(out)
}
