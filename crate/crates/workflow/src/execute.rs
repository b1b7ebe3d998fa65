use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{SecondsFormat, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use topicflow_core::hash::sha256_hex;
use tracing::{info, warn};

use crate::manifest::{
    derive_node_seed, ArtifactRecord, RunManifest, RunStatus, MANIFEST_FILE, MANIFEST_SCHEMA_VERSION,
    WORKFLOW_FILE,
};
use crate::model::{NodeKind, NodeSpec, Workflow};
use crate::registry::{self, DATA_OUTPUT_PORT};
use crate::sources::{SourceContent, SourceResolver};
use crate::tools::{run_tool, Inputs, NodeValue};
use crate::validate::{validate, Diagnostic};
use crate::ENGINE_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeState {
    Pending,
    Running,
    Succeeded,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeProgress {
    pub node_id: String,
    pub state: NodeState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

pub type ProgressFn<'a> = &'a (dyn Fn(&NodeProgress) + Sync);

pub struct ExecuteOptions<'a> {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub resolver: SourceResolver,
    pub progress: Option<ProgressFn<'a>>,
}

impl<'a> ExecuteOptions<'a> {
    pub fn new(seed: u64, output_dir: impl Into<PathBuf>, resolver: SourceResolver) -> Self {
        Self {
            seed,
            output_dir: output_dir.into(),
            resolver,
            progress: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ExecuteError {
    #[error("workflow is invalid ({} diagnostics)", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error("cannot write to {path}: {message}")]
    Output { path: PathBuf, message: String },
    #[error("node '{node_id}' failed: {message}")]
    NodeFailed {
        node_id: String,
        message: String,
        manifest: Box<RunManifest>,
    },
}

/// Name of the artifact for one output port.
pub fn artifact_name(node: &NodeSpec, port: &str, ext: &str) -> String {
    let outputs = node
        .tool_name
        .as_deref()
        .and_then(registry::tool)
        .map_or(1, |t| t.outputs.len());
    if outputs > 1 {
        format!("{}.{port}.{ext}", node.node_id)
    } else {
        format!("{}.{ext}", node.node_id)
    }
}

/// Groups of nodes whose inputs are all produced by earlier groups. Nodes in
/// one group are independent of each other.
fn levels(workflow: &Workflow) -> Vec<Vec<String>> {
    let ids: BTreeSet<&str> = workflow.nodes.iter().map(|n| n.node_id.as_str()).collect();
    let mut preds: BTreeMap<&str, BTreeSet<&str>> = ids.iter().map(|&id| (id, BTreeSet::new())).collect();
    for e in &workflow.edges {
        preds.get_mut(e.to_node.as_str()).map(|s| s.insert(e.from_node.as_str()));
    }
    let mut done: BTreeSet<&str> = BTreeSet::new();
    let mut out = Vec::new();
    while done.len() < ids.len() {
        let ready: Vec<String> = ids
            .iter()
            .filter(|id| !done.contains(*id) && preds[*id].iter().all(|p| done.contains(p)))
            .map(|s| s.to_string())
            .collect();
        assert!(!ready.is_empty(), "validated workflows are acyclic");
        done.extend(ready.iter().map(|s| ids.get(s.as_str()).copied().expect("known id")));
        out.push(ready);
    }
    out
}

enum Outcome {
    Data { value: NodeValue, hash: String },
    Tool(Vec<(&'static str, NodeValue)>),
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), String> {
    fs::write(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Runs the workflow in dependency order, writing one artifact per tool
/// output and the manifest last. Identical inputs and seed give identical
/// artifact bytes regardless of scheduling.
pub fn execute(workflow: &Workflow, opts: &ExecuteOptions<'_>) -> Result<RunManifest, ExecuteError> {
    let diagnostics = validate(workflow);
    if !diagnostics.is_empty() {
        return Err(ExecuteError::Invalid(diagnostics));
    }
    let out_dir = &opts.output_dir;
    fs::create_dir_all(out_dir).map_err(|e| ExecuteError::Output {
        path: out_dir.clone(),
        message: e.to_string(),
    })?;
    let notify = |node_id: &str, state: NodeState, message: Option<String>| {
        if let Some(f) = opts.progress {
            f(&NodeProgress {
                node_id: node_id.to_string(),
                state,
                message,
            });
        }
    };
    for n in &workflow.nodes {
        notify(&n.node_id, NodeState::Pending, None);
    }

    let nodes: BTreeMap<&str, &NodeSpec> = workflow.nodes.iter().map(|n| (n.node_id.as_str(), n)).collect();
    let mut manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        engine_version: ENGINE_VERSION.to_string(),
        workflow_name: workflow.name.clone(),
        workflow_hash: workflow.workflow_hash(),
        seed: opts.seed,
        started_at: now(),
        finished_at: String::new(),
        status: RunStatus::Succeeded,
        failed_node: None,
        error: None,
        input_hashes: BTreeMap::new(),
        node_seeds: BTreeMap::new(),
        artifacts: BTreeMap::new(),
    };
    for n in nodes.values().filter(|n| n.kind == NodeKind::Tool) {
        manifest.node_seeds.insert(n.node_id.clone(), derive_node_seed(opts.seed, &n.node_id));
    }
    info!(workflow = %workflow.name, hash = %manifest.workflow_hash, seed = opts.seed, "run started");

    let mut values: BTreeMap<(String, String), NodeValue> = BTreeMap::new();
    let mut failure: Option<(String, String)> = None;
    let mut finished: BTreeSet<String> = BTreeSet::new();

    for level in levels(workflow) {
        let results: Vec<(String, Result<Outcome, String>)> = level
            .par_iter()
            .map(|id| {
                let node = nodes[id.as_str()];
                notify(id, NodeState::Running, None);
                let result = run_node(node, workflow, &values, opts);
                (id.clone(), result)
            })
            .collect();
        // record in node-id order so the manifest does not depend on timing
        for (id, result) in results {
            let node = nodes[id.as_str()];
            let recorded = result.and_then(|outcome| match outcome {
                Outcome::Data { value, hash } => {
                    manifest.input_hashes.insert(id.clone(), hash);
                    values.insert((id.clone(), DATA_OUTPUT_PORT.into()), value);
                    Ok(())
                }
                Outcome::Tool(outputs) => {
                    for (port, value) in outputs {
                        let ty = value.port_type();
                        let name = artifact_name(node, port, ty.extension());
                        let bytes = value.artifact_bytes();
                        write_file(&out_dir.join(&name), &bytes)?;
                        manifest.artifacts.insert(
                            name,
                            ArtifactRecord {
                                node_id: id.clone(),
                                port: port.to_string(),
                                ty,
                                sha256: sha256_hex(&bytes),
                                size: bytes.len() as u64,
                            },
                        );
                        values.insert((id.clone(), port.to_string()), value);
                    }
                    Ok(())
                }
            });
            match recorded {
                Ok(()) => {
                    finished.insert(id.clone());
                    notify(&id, NodeState::Succeeded, None);
                }
                Err(message) => {
                    warn!(node = %id, %message, "node failed");
                    notify(&id, NodeState::Failed, Some(message.clone()));
                    failure.get_or_insert((id, message));
                }
            }
        }
        if failure.is_some() {
            break;
        }
    }

    if let Some((node_id, message)) = failure {
        for n in nodes.keys().filter(|n| !finished.contains(**n) && **n != node_id) {
            notify(n, NodeState::Skipped, None);
        }
        manifest.status = RunStatus::Failed;
        manifest.failed_node = Some(node_id.clone());
        manifest.error = Some(message.clone());
        finish(workflow, &mut manifest, out_dir)?;
        return Err(ExecuteError::NodeFailed {
            node_id,
            message,
            manifest: Box::new(manifest),
        });
    }
    finish(workflow, &mut manifest, out_dir)?;
    info!(artifacts = manifest.artifacts.len(), "run finished");
    Ok(manifest)
}

fn finish(workflow: &Workflow, manifest: &mut RunManifest, out_dir: &Path) -> Result<(), ExecuteError> {
    manifest.finished_at = now();
    let output_err = |path: PathBuf| move |message: String| ExecuteError::Output { path, message };
    let wf_path = out_dir.join(WORKFLOW_FILE);
    write_file(&wf_path, &workflow.to_canonical_bytes()).map_err(output_err(wf_path.clone()))?;
    let m_path = out_dir.join(MANIFEST_FILE);
    write_file(&m_path, &manifest.to_bytes()).map_err(output_err(m_path.clone()))
}

fn run_node(
    node: &NodeSpec,
    workflow: &Workflow,
    values: &BTreeMap<(String, String), NodeValue>,
    opts: &ExecuteOptions<'_>,
) -> Result<Outcome, String> {
    match node.kind {
        NodeKind::Data => {
            let src = node.source.as_ref().ok_or("data node has no source")?;
            let resolved = opts
                .resolver
                .resolve(src)
                .map_err(|e| format!("data node '{}': {e}", node.node_id))?;
            let value = match resolved.content {
                SourceContent::Documents(d) => NodeValue::Texts(Arc::new(d)),
                SourceContent::Stopwords(s) => NodeValue::Stopwords(Arc::new(s)),
            };
            Ok(Outcome::Data {
                value,
                hash: resolved.hash,
            })
        }
        NodeKind::Tool => {
            let name = node.tool_name.as_deref().ok_or("tool node has no tool_name")?;
            let tool = registry::tool(name).ok_or_else(|| format!("unknown tool '{name}'"))?;
            let mut inputs = Inputs::new();
            for e in workflow.edges.iter().filter(|e| e.to_node == node.node_id) {
                let v = values
                    .get(&(e.from_node.clone(), e.from_port.clone()))
                    .ok_or_else(|| format!("input '{}' was not produced", e.to_port))?;
                inputs.insert(e.to_port.clone(), v.clone());
            }
            let seed = derive_node_seed(opts.seed, &node.node_id);
            run_tool(node, tool, &inputs, seed).map(Outcome::Tool)
        }
    }
}
