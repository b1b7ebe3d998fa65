use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::model::{NodeKind, NodeSpec, PortType, Workflow};
use crate::registry::{self, data_output_type, DATA_OUTPUT_PORT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticCode {
    InvalidNodeId,
    DuplicateNode,
    UnknownTool,
    MissingTool,
    BadParam,
    MissingSource,
    BadSource,
    DanglingEdge,
    UnknownPort,
    DataNodeInput,
    TypeMismatch,
    UnfilledPort,
    DuplicateInput,
    Cycle,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub message: String,
    /// Nodes involved, sorted.
    pub nodes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<String>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let code = serde_json::to_value(self.code).expect("serializable");
        write!(f, "[{}] {}", code.as_str().unwrap_or_default(), self.message)
    }
}

fn diag(code: DiagnosticCode, message: String, nodes: &[&str], edge: Option<String>) -> Diagnostic {
    let mut nodes: Vec<String> = nodes.iter().map(|s| s.to_string()).collect();
    nodes.sort();
    nodes.dedup();
    Diagnostic {
        code,
        message,
        nodes,
        edge,
    }
}

/// Node ids become file names, so they are restricted to a portable set.
pub fn valid_node_id(id: &str) -> bool {
    let mut chars = id.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphanumeric())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Output type of `port` on `node`, if the node and port are known.
pub fn output_type(node: &NodeSpec, port: &str) -> Option<PortType> {
    match node.kind {
        NodeKind::Data => {
            if port != DATA_OUTPUT_PORT {
                return None;
            }
            node.source.as_ref().and_then(|s| data_output_type(&s.format))
        }
        NodeKind::Tool => registry::tool(node.tool_name.as_deref()?)?
            .output(port)
            .map(|p| p.ty),
    }
}

fn check_node(node: &NodeSpec, out: &mut Vec<Diagnostic>) {
    let id = node.node_id.as_str();
    match node.kind {
        NodeKind::Data => {
            match &node.source {
                None => out.push(diag(
                    DiagnosticCode::MissingSource,
                    format!("data node '{id}' has no source"),
                    &[id],
                    None,
                )),
                Some(s) => {
                    if data_output_type(&s.format).is_none() {
                        out.push(diag(
                            DiagnosticCode::BadSource,
                            format!("data node '{id}' has unknown format '{}'", s.format),
                            &[id],
                            None,
                        ));
                    }
                    if s.path.trim().is_empty() {
                        out.push(diag(
                            DiagnosticCode::BadSource,
                            format!("data node '{id}' has an empty path"),
                            &[id],
                            None,
                        ));
                    }
                    if let Some(d) = &s.delimiter {
                        if d.len() != 1 {
                            out.push(diag(
                                DiagnosticCode::BadSource,
                                format!("data node '{id}': delimiter must be a single byte"),
                                &[id],
                                None,
                            ));
                        }
                    }
                }
            }
            if node.tool_name.is_some() {
                out.push(diag(
                    DiagnosticCode::BadParam,
                    format!("data node '{id}' must not name a tool"),
                    &[id],
                    None,
                ));
            }
            for name in node.params.keys() {
                out.push(diag(
                    DiagnosticCode::BadParam,
                    format!("data node '{id}' takes no parameters, got '{name}'"),
                    &[id],
                    None,
                ));
            }
        }
        NodeKind::Tool => {
            let Some(name) = node.tool_name.as_deref() else {
                out.push(diag(
                    DiagnosticCode::MissingTool,
                    format!("tool node '{id}' has no tool_name"),
                    &[id],
                    None,
                ));
                return;
            };
            let Some(tool) = registry::tool(name) else {
                out.push(diag(
                    DiagnosticCode::UnknownTool,
                    format!("node '{id}' uses unknown tool '{name}'"),
                    &[id],
                    None,
                ));
                return;
            };
            for (pname, value) in &node.params {
                match tool.param(pname) {
                    None => out.push(diag(
                        DiagnosticCode::BadParam,
                        format!("node '{id}': {name} has no parameter '{pname}'"),
                        &[id],
                        None,
                    )),
                    Some(spec) => {
                        if let Err(e) = spec.check(value) {
                            out.push(diag(
                                DiagnosticCode::BadParam,
                                format!("node '{id}': parameter '{pname}' {e}"),
                                &[id],
                                None,
                            ));
                        }
                    }
                }
            }
            for spec in tool.params.iter().filter(|p| p.required) {
                if node.params.get(spec.name).is_none_or(|v| v.is_null()) {
                    out.push(diag(
                        DiagnosticCode::BadParam,
                        format!("node '{id}': required parameter '{}' is missing", spec.name),
                        &[id],
                        None,
                    ));
                }
            }
            let iterations = node.params.get("iterations").and_then(|v| v.as_i64()).unwrap_or(1000);
            if let Some(b) = node.params.get("burn_in").and_then(|v| v.as_i64()) {
                if b >= iterations {
                    out.push(diag(
                        DiagnosticCode::BadParam,
                        format!("node '{id}': burn_in must be below iterations"),
                        &[id],
                        None,
                    ));
                }
            }
        }
    }
}

/// Every problem with the workflow; empty means valid.
pub fn validate(workflow: &Workflow) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut by_id: BTreeMap<&str, &NodeSpec> = BTreeMap::new();
    for node in &workflow.nodes {
        let id = node.node_id.as_str();
        if !valid_node_id(id) {
            out.push(diag(
                DiagnosticCode::InvalidNodeId,
                format!("node id '{id}' must start with a letter or digit and contain only letters, digits, '_' and '-'"),
                &[id],
                None,
            ));
        }
        if by_id.insert(id, node).is_some() {
            out.push(diag(
                DiagnosticCode::DuplicateNode,
                format!("node id '{id}' is used more than once"),
                &[id],
                None,
            ));
        }
    }
    for node in by_id.values() {
        check_node(node, &mut out);
    }

    // incoming edge count per (node, input port)
    let mut incoming: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    let mut graph_edges = Vec::new();
    for edge in &workflow.edges {
        let eid = edge.id();
        let from = by_id.get(edge.from_node.as_str());
        let to = by_id.get(edge.to_node.as_str());
        for (name, found) in [(&edge.from_node, from), (&edge.to_node, to)] {
            if found.is_none() {
                out.push(diag(
                    DiagnosticCode::DanglingEdge,
                    format!("edge {eid} refers to missing node '{name}'"),
                    &[name.as_str()],
                    Some(eid.clone()),
                ));
            }
        }
        let (Some(from), Some(to)) = (from, to) else {
            continue;
        };
        graph_edges.push((edge.from_node.as_str(), edge.to_node.as_str()));
        let nodes = [edge.from_node.as_str(), edge.to_node.as_str()];

        let known_source = match from.kind {
            NodeKind::Data => true,
            NodeKind::Tool => from.tool_name.as_deref().and_then(registry::tool).is_some(),
        };
        let from_ty = output_type(from, &edge.from_port);
        if known_source && from_ty.is_none() && (from.kind == NodeKind::Tool || edge.from_port != DATA_OUTPUT_PORT) {
            out.push(diag(
                DiagnosticCode::UnknownPort,
                format!("edge {eid}: '{}' has no output port '{}'", edge.from_node, edge.from_port),
                &nodes,
                Some(eid.clone()),
            ));
        }

        let to_ty = match to.kind {
            NodeKind::Data => {
                out.push(diag(
                    DiagnosticCode::DataNodeInput,
                    format!("edge {eid}: data node '{}' cannot have inputs", edge.to_node),
                    &nodes,
                    Some(eid.clone()),
                ));
                None
            }
            NodeKind::Tool => match to.tool_name.as_deref().and_then(registry::tool) {
                None => None,
                Some(tool) => match tool.input(&edge.to_port) {
                    None => {
                        out.push(diag(
                            DiagnosticCode::UnknownPort,
                            format!("edge {eid}: '{}' has no input port '{}'", edge.to_node, edge.to_port),
                            &nodes,
                            Some(eid.clone()),
                        ));
                        None
                    }
                    Some(p) => {
                        *incoming.entry((edge.to_node.as_str(), p.name)).or_default() += 1;
                        Some(p.ty)
                    }
                },
            },
        };
        if let (Some(a), Some(b)) = (from_ty, to_ty) {
            if a != b {
                out.push(diag(
                    DiagnosticCode::TypeMismatch,
                    format!(
                        "edge {eid}: output '{}.{}' is {a} but input '{}.{}' expects {b}",
                        edge.from_node, edge.from_port, edge.to_node, edge.to_port
                    ),
                    &nodes,
                    Some(eid.clone()),
                ));
            }
        }
    }

    for node in by_id.values() {
        let Some(tool) = node.tool_name.as_deref().and_then(registry::tool) else {
            continue;
        };
        if node.kind != NodeKind::Tool {
            continue;
        }
        for port in &tool.inputs {
            let n = incoming.get(&(node.node_id.as_str(), port.name)).copied().unwrap_or(0);
            if n == 0 && port.required {
                out.push(diag(
                    DiagnosticCode::UnfilledPort,
                    format!("node '{}': required input '{}' ({}) is not connected", node.node_id, port.name, port.ty),
                    &[node.node_id.as_str()],
                    None,
                ));
            } else if n > 1 {
                out.push(diag(
                    DiagnosticCode::DuplicateInput,
                    format!("node '{}': input '{}' has {n} incoming edges", node.node_id, port.name),
                    &[node.node_id.as_str()],
                    None,
                ));
            }
        }
    }

    out.extend(cycles(&by_id, &graph_edges, workflow));
    out.sort();
    out.dedup();
    out
}

fn cycles(
    by_id: &BTreeMap<&str, &NodeSpec>,
    edges: &[(&str, &str)],
    workflow: &Workflow,
) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut graph = DiGraph::<&str, ()>::new();
    let index: BTreeMap<&str, _> = by_id.keys().map(|&id| (id, graph.add_node(id))).collect();
    for &(a, b) in edges {
        graph.add_edge(index[a], index[b], ());
    }
    for edge in &workflow.edges {
        if edge.from_node == edge.to_node && by_id.contains_key(edge.from_node.as_str()) {
            out.push(diag(
                DiagnosticCode::Cycle,
                format!("edge {} connects node '{}' to itself", edge.id(), edge.from_node),
                &[edge.from_node.as_str()],
                Some(edge.id()),
            ));
        }
    }
    for scc in tarjan_scc(&graph) {
        if scc.len() < 2 {
            continue;
        }
        let mut names: Vec<&str> = scc.iter().map(|&i| graph[i]).collect();
        names.sort();
        let members: BTreeSet<&str> = names.iter().copied().collect();
        let first_edge = workflow
            .edges
            .iter()
            .filter(|e| members.contains(e.from_node.as_str()) && members.contains(e.to_node.as_str()))
            .map(|e| e.id())
            .min();
        out.push(diag(
            DiagnosticCode::Cycle,
            format!("cycle through nodes {}", names.join(", ")),
            &names,
            first_edge,
        ));
    }
    out
}
