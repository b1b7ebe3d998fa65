use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use topicflow_core::hash::sha256_hex;

pub const WORKFLOW_SCHEMA_VERSION: u32 = 1;

/// Data types carried by ports. Edges connect only equal types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PortType {
    TextCollection,
    StopwordList,
    TokenizedCollection,
    Dictionary,
    BowCorpus,
    TopicModel,
    Table,
    VizPayload,
}

impl PortType {
    pub const ALL: [PortType; 8] = [
        PortType::TextCollection,
        PortType::StopwordList,
        PortType::TokenizedCollection,
        PortType::Dictionary,
        PortType::BowCorpus,
        PortType::TopicModel,
        PortType::Table,
        PortType::VizPayload,
    ];

    /// File extension of artifacts holding this type.
    pub fn extension(self) -> &'static str {
        match self {
            PortType::TopicModel => "model",
            PortType::Dictionary | PortType::Table => "csv",
            PortType::StopwordList => "txt",
            _ => "json",
        }
    }

    pub fn media_type(self) -> &'static str {
        match self.extension() {
            "csv" => "text/csv; charset=utf-8",
            "txt" => "text/plain; charset=utf-8",
            "model" => "application/octet-stream",
            _ => "application/json",
        }
    }
}

impl fmt::Display for PortType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Data,
    Tool,
}

/// Where a data node's content comes from.
///
/// `path` is a filesystem path (relative paths resolve against the workflow
/// file's directory), `builtin:<name>` for bundled data, or `corpus:<id>`
/// for a corpus uploaded to the service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceDescriptor {
    pub path: String,
    /// `txt-dir`, `delimited`, `stopwords` or `corpus`.
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delimiter: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata_columns: Option<Vec<String>>,
}

impl SourceDescriptor {
    pub fn new(path: impl Into<String>, format: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            format: format.into(),
            delimiter: None,
            id_column: None,
            text_column: None,
            metadata_columns: None,
        }
    }
}

/// Canvas coordinates. Not part of the workflow's identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub node_id: String,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_name: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Position>,
}

impl NodeSpec {
    pub fn data(node_id: impl Into<String>, source: SourceDescriptor) -> Self {
        Self {
            node_id: node_id.into(),
            kind: NodeKind::Data,
            tool_name: None,
            params: BTreeMap::new(),
            source: Some(source),
            position: None,
        }
    }

    pub fn tool(node_id: impl Into<String>, tool_name: impl Into<String>) -> Self {
        Self {
            node_id: node_id.into(),
            kind: NodeKind::Tool,
            tool_name: Some(tool_name.into()),
            params: BTreeMap::new(),
            source: None,
            position: None,
        }
    }

    pub fn with_param(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.params.insert(name.to_string(), value.into());
        self
    }

    pub fn at(mut self, x: f64, y: f64) -> Self {
        self.position = Some(Position { x, y });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub from_node: String,
    pub from_port: String,
    pub to_node: String,
    pub to_port: String,
}

impl Edge {
    pub fn new(from_node: &str, from_port: &str, to_node: &str, to_port: &str) -> Self {
        Self {
            from_node: from_node.into(),
            from_port: from_port.into(),
            to_node: to_node.into(),
            to_port: to_port.into(),
        }
    }

    /// `from.port->to.port`, used to identify edges in diagnostics.
    pub fn id(&self) -> String {
        format!(
            "{}.{}->{}.{}",
            self.from_node, self.from_port, self.to_node, self.to_port
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workflow {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub edges: Vec<Edge>,
}

impl Default for Workflow {
    fn default() -> Self {
        Self {
            schema_version: WORKFLOW_SCHEMA_VERSION,
            name: String::new(),
            description: String::new(),
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed workflow at line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported workflow schema_version {found} (expected {expected})")]
    SchemaVersion { found: u64, expected: u32 },
}

impl Workflow {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.node_id == id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut NodeSpec> {
        self.nodes.iter_mut().find(|n| n.node_id == id)
    }

    /// Nodes sorted by id and edges sorted lexicographically.
    pub fn canonicalized(&self) -> Workflow {
        let mut w = self.clone();
        w.nodes.sort_by(|a, b| a.node_id.cmp(&b.node_id));
        w.edges.sort();
        w
    }

    /// Canonical bytes: compact UTF-8 JSON with sorted keys, sorted nodes
    /// and edges, terminated by a single LF.
    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        // serde_json::Value keeps object keys in a BTreeMap, so converting
        // through it sorts every map
        let value = serde_json::to_value(self.canonicalized()).expect("workflow is serializable");
        let mut out = serde_json::to_vec(&value).expect("value is serializable");
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Workflow, FormatError> {
        let malformed = |e: serde_json::Error| FormatError::Malformed {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        };
        let value: Value = serde_json::from_slice(bytes).map_err(malformed)?;
        match value.get("schema_version").and_then(Value::as_u64) {
            Some(v) if v == WORKFLOW_SCHEMA_VERSION as u64 => {}
            Some(found) => {
                return Err(FormatError::SchemaVersion {
                    found,
                    expected: WORKFLOW_SCHEMA_VERSION,
                })
            }
            None => {
                return Err(FormatError::Malformed {
                    line: 1,
                    column: 1,
                    message: "missing integer field `schema_version`".into(),
                })
            }
        }
        // parse again from the bytes so errors carry positions
        serde_json::from_slice(bytes).map_err(malformed)
    }

    /// SHA-256 of the canonical bytes with node positions removed.
    pub fn workflow_hash(&self) -> String {
        let mut w = self.clone();
        for n in &mut w.nodes {
            n.position = None;
        }
        sha256_hex(&w.to_canonical_bytes())
    }
}
