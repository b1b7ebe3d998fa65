//! The fixed set of tools a workflow may use, with their ports and
//! parameter schemas. Served verbatim to the web UI.

use std::sync::OnceLock;

use serde::Serialize;
use serde_json::{json, Value};

use crate::model::PortType;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortSpec {
    pub name: &'static str,
    #[serde(rename = "type")]
    pub ty: PortType,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ParamType {
    Integer {
        #[serde(skip_serializing_if = "Option::is_none")]
        minimum: Option<i64>,
    },
    Number {
        /// Values must be strictly greater than this.
        #[serde(skip_serializing_if = "Option::is_none")]
        exclusive_minimum: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        maximum: Option<f64>,
    },
    Boolean,
    String,
    Enum {
        values: &'static [&'static str],
    },
    IntegerList {
        minimum: i64,
    },
    StringList,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    #[serde(flatten)]
    pub ty: ParamType,
    pub required: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default: Option<Value>,
    pub description: &'static str,
}

impl ParamSpec {
    /// Checks one value against the schema. `null` is accepted for optional
    /// parameters and means "use the default".
    pub fn check(&self, value: &Value) -> Result<(), String> {
        if value.is_null() && !self.required {
            return Ok(());
        }
        match &self.ty {
            ParamType::Integer { minimum } => {
                let v = value.as_i64().ok_or("expected an integer")?;
                if let Some(min) = minimum {
                    if v < *min {
                        return Err(format!("must be at least {min}"));
                    }
                }
            }
            ParamType::Number {
                exclusive_minimum,
                maximum,
            } => {
                let v = value.as_f64().ok_or("expected a number")?;
                if let Some(min) = exclusive_minimum {
                    if v <= *min {
                        return Err(format!("must be greater than {min}"));
                    }
                }
                if let Some(max) = maximum {
                    if v > *max {
                        return Err(format!("must be at most {max}"));
                    }
                }
            }
            ParamType::Boolean => {
                value.as_bool().ok_or("expected true or false")?;
            }
            ParamType::String => {
                let s = value.as_str().ok_or("expected a string")?;
                if s.is_empty() {
                    return Err("must not be empty".into());
                }
            }
            ParamType::Enum { values } => {
                let s = value.as_str().ok_or("expected a string")?;
                if !values.contains(&s) {
                    return Err(format!("must be one of {}", values.join(", ")));
                }
            }
            ParamType::IntegerList { minimum } => {
                let items = value.as_array().ok_or("expected a list of integers")?;
                if items.is_empty() {
                    return Err("must not be empty".into());
                }
                let mut seen = Vec::new();
                for item in items {
                    let v = item.as_i64().ok_or("expected a list of integers")?;
                    if v < *minimum {
                        return Err(format!("entries must be at least {minimum}"));
                    }
                    if seen.contains(&v) {
                        return Err(format!("duplicate entry {v}"));
                    }
                    seen.push(v);
                }
            }
            ParamType::StringList => {
                let items = value.as_array().ok_or("expected a list of strings")?;
                if items.iter().any(|v| !v.is_string()) {
                    return Err("expected a list of strings".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolSpec {
    pub name: &'static str,
    pub description: &'static str,
    pub inputs: Vec<PortSpec>,
    pub outputs: Vec<PortSpec>,
    pub params: Vec<ParamSpec>,
}

impl ToolSpec {
    pub fn input(&self, name: &str) -> Option<&PortSpec> {
        self.inputs.iter().find(|p| p.name == name)
    }

    pub fn output(&self, name: &str) -> Option<&PortSpec> {
        self.outputs.iter().find(|p| p.name == name)
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// Output port name of every data node.
pub const DATA_OUTPUT_PORT: &str = "out";

/// Data node formats and the type each one produces.
pub const DATA_FORMATS: [(&str, PortType); 4] = [
    ("txt-dir", PortType::TextCollection),
    ("delimited", PortType::TextCollection),
    ("corpus", PortType::TextCollection),
    ("stopwords", PortType::StopwordList),
];

pub fn data_output_type(format: &str) -> Option<PortType> {
    DATA_FORMATS.iter().find(|(f, _)| *f == format).map(|(_, t)| *t)
}

fn port(name: &'static str, ty: PortType) -> PortSpec {
    PortSpec {
        name,
        ty,
        required: true,
    }
}

fn optional_port(name: &'static str, ty: PortType) -> PortSpec {
    PortSpec {
        name,
        ty,
        required: false,
    }
}

fn param(name: &'static str, ty: ParamType, default: Option<Value>, description: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        ty,
        required: false,
        default,
        description,
    }
}

fn required(name: &'static str, ty: ParamType, description: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        ty,
        required: true,
        default: None,
        description,
    }
}

fn int(minimum: i64) -> ParamType {
    ParamType::Integer {
        minimum: Some(minimum),
    }
}

fn positive() -> ParamType {
    ParamType::Number {
        exclusive_minimum: Some(0.0),
        maximum: None,
    }
}

fn lda_params(with_topics: bool) -> Vec<ParamSpec> {
    let mut p = Vec::new();
    if with_topics {
        p.push(required("num_topics", int(1), "Number of topics K"));
    }
    p.extend([
        param("alpha", positive(), None, "Document-topic prior; defaults to 50/K"),
        param("beta", positive(), Some(json!(0.01)), "Topic-term prior"),
        param("iterations", int(1), Some(json!(1000)), "Gibbs sweeps"),
        param("burn_in", int(0), Some(json!(0)), "Sweeps excluded from estimates; must be below iterations"),
    ]);
    p
}

fn build() -> Vec<ToolSpec> {
    use PortType::*;
    vec![
        ToolSpec {
            name: "regex-filter",
            description: "Replace every match of each pattern with a single space",
            inputs: vec![port("docs", TextCollection)],
            outputs: vec![port("docs", TextCollection)],
            params: vec![required("patterns", ParamType::StringList, "Regular expressions, applied in order")],
        },
        ToolSpec {
            name: "tokenizer",
            description: "Split documents into terms, drop stopwords and stem",
            inputs: vec![port("docs", TextCollection), optional_port("stopwords", StopwordList)],
            outputs: vec![port("tokens", TokenizedCollection)],
            params: vec![
                param("lowercase", ParamType::Boolean, Some(json!(true)), "Lowercase before matching"),
                param("min_token_length", int(1), Some(json!(2)), "Shortest token kept, in characters"),
                param(
                    "stemmer",
                    ParamType::Enum {
                        values: &["porter", "none"],
                    },
                    Some(json!("porter")),
                    "Stemming algorithm",
                ),
            ],
        },
        ToolSpec {
            name: "corpus-builder",
            description: "Build the dictionary and the bag-of-words corpus",
            inputs: vec![port("tokens", TokenizedCollection)],
            outputs: vec![port("dictionary", Dictionary), port("corpus", BowCorpus)],
            params: vec![
                param("min_df", int(1), Some(json!(1)), "Minimum document frequency"),
                param(
                    "max_df_fraction",
                    ParamType::Number {
                        exclusive_minimum: Some(0.0),
                        maximum: Some(1.0),
                    },
                    Some(json!(1.0)),
                    "Maximum document frequency as a fraction of documents",
                ),
                param("keep_n", int(1), None, "Keep only the most frequent terms"),
            ],
        },
        ToolSpec {
            name: "lda",
            description: "Train an LDA topic model by collapsed Gibbs sampling",
            inputs: vec![port("corpus", BowCorpus), port("dictionary", Dictionary)],
            outputs: vec![port("model", TopicModel)],
            params: lda_params(true),
        },
        ToolSpec {
            name: "coherence-sweep",
            description: "Train one model per K and report coherence and perplexity",
            inputs: vec![
                port("corpus", BowCorpus),
                port("dictionary", Dictionary),
                port("tokens", TokenizedCollection),
            ],
            outputs: vec![port("table", Table)],
            params: {
                let mut p = vec![
                    required("k_list", ParamType::IntegerList { minimum: 1 }, "Topic counts to try"),
                    param(
                        "metric",
                        ParamType::Enum {
                            values: &["umass", "npmi"],
                        },
                        Some(json!("umass")),
                        "Coherence measure",
                    ),
                    param("top_m", int(1), Some(json!(10)), "Top terms per topic used for coherence"),
                ];
                p.extend(lda_params(false));
                p
            },
        },
        ToolSpec {
            name: "terms-x-topics",
            description: "Top terms of every topic",
            inputs: vec![port("model", TopicModel), port("dictionary", Dictionary)],
            outputs: vec![port("table", Table)],
            params: vec![param("n", int(1), Some(json!(30)), "Terms per topic")],
        },
        ToolSpec {
            name: "docs-x-topics",
            description: "Topic mixture and dominant topic of every document",
            inputs: vec![port("model", TopicModel), port("docs", TextCollection)],
            outputs: vec![port("table", Table)],
            params: vec![],
        },
        ToolSpec {
            name: "ldavis",
            description: "Intertopic distance map and relevance-ranked terms",
            inputs: vec![
                port("model", TopicModel),
                port("corpus", BowCorpus),
                port("dictionary", Dictionary),
            ],
            outputs: vec![port("payload", VizPayload)],
            params: vec![param("r", int(1), Some(json!(30)), "Terms per ranking")],
        },
        ToolSpec {
            name: "mtmvis",
            description: "Topic shares per value of a metadata attribute",
            inputs: vec![port("model", TopicModel), port("docs", TextCollection)],
            outputs: vec![port("payload", VizPayload)],
            params: vec![
                param("grouping_key", ParamType::String, Some(json!("year")), "Metadata attribute"),
                param(
                    "mode",
                    ParamType::Enum {
                        values: &["dominant", "mean-theta"],
                    },
                    Some(json!("dominant")),
                    "Share of dominant topics or mean topic weight",
                ),
            ],
        },
    ]
}

pub fn tools() -> &'static [ToolSpec] {
    static TOOLS: OnceLock<Vec<ToolSpec>> = OnceLock::new();
    TOOLS.get_or_init(build)
}

pub fn tool(name: &str) -> Option<&'static ToolSpec> {
    tools().iter().find(|t| t.name == name)
}

/// The document served at `GET /api/tools`.
pub fn registry_document() -> Value {
    json!({
        "schema_version": 1,
        "port_types": PortType::ALL,
        "compatibility": "exact",
        "data_node": {
            "output_port": DATA_OUTPUT_PORT,
            "formats": DATA_FORMATS.iter().map(|(f, t)| json!({"format": f, "type": t})).collect::<Vec<_>>(),
        },
        "tools": tools(),
    })
}
