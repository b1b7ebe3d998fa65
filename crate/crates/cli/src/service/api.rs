use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::mpsc;
use tracing::{error, info, warn};
use uuid::Uuid;

use topicflow_workflow::manifest::{MANIFEST_FILE, WORKFLOW_FILE};
use topicflow_workflow::registry::registry_document;
use topicflow_workflow::{
    execute, figure1_template, validate, ExecuteError, ExecuteOptions, NodeProgress, RunManifest,
    SourceResolver, Workflow,
};

use super::corpora::{self, CorpusMeta, UploadOptions};
use super::jobs::{Job, JobState};
use super::now;
use super::store::{write_atomic, Store};

/// Uploads above this size are rejected.
pub const MAX_UPLOAD_BYTES: usize = 512 * 1024 * 1024;

pub struct AppState {
    pub store: Store,
    workflows: Mutex<BTreeMap<String, Workflow>>,
    corpora: Mutex<BTreeMap<String, CorpusMeta>>,
    jobs: Mutex<BTreeMap<String, Job>>,
    queue: mpsc::UnboundedSender<String>,
    next_sequence: AtomicU64,
}

pub type Shared = Arc<AppState>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": message.into() }),
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("{what} '{id}' not found"))
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        error!(error = %e, "request failed");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Ids used as file names. Anything else cannot exist in the store.
fn safe_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn new_id() -> String {
    Uuid::new_v4().simple().to_string()
}

impl AppState {
    /// Loads persisted state. Jobs that were running when the previous
    /// process stopped are marked failed; queued jobs are queued again in
    /// submission order.
    pub fn load(store: Store) -> std::io::Result<(Shared, mpsc::UnboundedReceiver<String>)> {
        let workflows: BTreeMap<String, Workflow> = store
            .load_all::<Value>(&store.workflows_dir())?
            .into_iter()
            .filter_map(|(id, v)| {
                let bytes = serde_json::to_vec(&v).ok()?;
                match Workflow::from_bytes(&bytes) {
                    Ok(w) => Some((id, w)),
                    Err(e) => {
                        warn!(workflow = %id, error = %e, "skipping stored workflow");
                        None
                    }
                }
            })
            .collect();
        let mut corpora = BTreeMap::new();
        for entry in std::fs::read_dir(store.corpora_dir())? {
            let meta_path = entry?.path().join("meta.json");
            if let Ok(bytes) = std::fs::read(&meta_path) {
                match serde_json::from_slice::<CorpusMeta>(&bytes) {
                    Ok(m) => {
                        corpora.insert(m.corpus_id.clone(), m);
                    }
                    Err(e) => warn!(path = %meta_path.display(), error = %e, "skipping corpus"),
                }
            }
        }
        let mut jobs: BTreeMap<String, Job> = store.load_all::<Job>(&store.jobs_dir())?.into_iter().collect();
        let mut requeue: Vec<(u64, String)> = Vec::new();
        for job in jobs.values_mut() {
            match job.state {
                JobState::Running => {
                    job.fail("interrupted by service restart".into(), now()).expect("running can fail");
                    store.save_json(&store.jobs_dir().join(format!("{}.json", job.job_id)), job)?;
                }
                JobState::Queued => requeue.push((job.sequence, job.job_id.clone())),
                _ => {}
            }
        }
        requeue.sort();
        let next = jobs.values().map(|j| j.sequence + 1).max().unwrap_or(0);
        let (tx, rx) = mpsc::unbounded_channel();
        for (_, id) in requeue {
            info!(job = %id, "re-queued after restart");
            tx.send(id).expect("receiver alive");
        }
        let state = Arc::new(AppState {
            store,
            workflows: Mutex::new(workflows),
            corpora: Mutex::new(corpora),
            jobs: Mutex::new(jobs),
            queue: tx,
            next_sequence: AtomicU64::new(next),
        });
        Ok((state, rx))
    }

    fn job_path(&self, id: &str) -> std::path::PathBuf {
        self.store.jobs_dir().join(format!("{id}.json"))
    }

    fn snapshot_path(&self, id: &str) -> std::path::PathBuf {
        self.store.jobs_dir().join(format!("{id}.workflow.json"))
    }

    fn persist_job(&self, job: &Job) {
        if let Err(e) = self.store.save_json(&self.job_path(&job.job_id), job) {
            error!(job = %job.job_id, error = %e, "cannot persist job");
        }
    }

    /// Applies `f` to the job under the lock and persists the result.
    fn update_job(&self, id: &str, persist: bool, f: impl FnOnce(&mut Job)) -> Option<Job> {
        let snapshot = {
            let mut jobs = self.jobs.lock().expect("job lock");
            let job = jobs.get_mut(id)?;
            f(job);
            job.clone()
        };
        if persist {
            self.persist_job(&snapshot);
        }
        Some(snapshot)
    }

    pub fn job(&self, id: &str) -> Option<Job> {
        self.jobs.lock().expect("job lock").get(id).cloned()
    }
}

/// Runs queued jobs one at a time, in the order they were submitted.
pub async fn worker(state: Shared, mut rx: mpsc::UnboundedReceiver<String>) {
    while let Some(job_id) = rx.recv().await {
        let st = state.clone();
        let id = job_id.clone();
        if let Err(e) = tokio::task::spawn_blocking(move || run_job(&st, &id)).await {
            error!(job = %job_id, error = %e, "job worker panicked");
            state.update_job(&job_id, true, |j| {
                let _ = j.fail(format!("internal error: {e}"), now());
            });
        }
    }
}

fn run_job(state: &AppState, job_id: &str) {
    let started = state.update_job(job_id, true, |j| {
        if let Err(e) = j.start(now()) {
            warn!(job = %j.job_id, error = %e, "skipping job");
        }
    });
    match started {
        Some(j) if j.state == JobState::Running => {}
        _ => return,
    }
    let fail = |message: String| {
        state.update_job(job_id, true, |j| {
            let _ = j.fail(message, now());
        });
    };
    let workflow = match std::fs::read(state.snapshot_path(job_id))
        .map_err(|e| e.to_string())
        .and_then(|b| Workflow::from_bytes(&b).map_err(|e| e.to_string()))
    {
        Ok(w) => w,
        Err(e) => return fail(format!("workflow snapshot unavailable: {e}")),
    };
    let seed = state.job(job_id).map(|j| j.seed).unwrap_or(0);
    let resolver = SourceResolver::new(state.store.root()).with_corpus_dir(state.store.corpora_dir());
    let on_progress = |p: &NodeProgress| {
        state.update_job(job_id, false, |j| j.record_progress(p));
    };
    let mut opts = ExecuteOptions::new(seed, state.store.run_dir(job_id), resolver);
    opts.progress = Some(&on_progress);
    info!(job = %job_id, seed, "job started");
    match execute(&workflow, &opts) {
        Ok(manifest) => {
            state.update_job(job_id, true, |j| {
                let _ = j.succeed(manifest, now());
            });
            info!(job = %job_id, "job succeeded");
        }
        Err(e) => {
            let message = match &e {
                ExecuteError::Invalid(d) => format!("{e}: {}", d.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; ")),
                _ => e.to_string(),
            };
            warn!(job = %job_id, error = %message, "job failed");
            fail(message);
        }
    }
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/api/tools", get(get_tools))
        .route("/api/templates/figure-1", get(get_template))
        .route("/api/corpora", post(upload_corpus).get(list_corpora))
        .route("/api/corpora/{id}", get(get_corpus))
        .route("/api/workflows", post(create_workflow).get(list_workflows))
        .route(
            "/api/workflows/{id}",
            get(get_workflow).put(put_workflow).delete(delete_workflow),
        )
        .route("/api/workflows/{id}/validate", post(validate_workflow))
        .route("/api/workflows/{id}/runs", post(submit_run))
        .route("/api/jobs", get(list_jobs))
        .route("/api/jobs/{id}", get(get_job))
        .route("/api/runs/{id}/artifacts", get(list_artifacts))
        .route("/api/runs/{id}/artifacts/{name}", get(get_artifact))
        .fallback(api_not_found)
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}

async fn api_not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "no such endpoint")
}

async fn get_tools() -> Json<Value> {
    Json(registry_document())
}

async fn get_template() -> Response {
    let bytes = figure1_template().to_canonical_bytes();
    ([(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

// ---- corpora

async fn upload_corpus(State(state): State<Shared>, mut form: Multipart) -> ApiResult<Response> {
    let mut file: Option<(String, Bytes)> = None;
    let mut opts = UploadOptions::default();
    while let Some(field) = form
        .next_field()
        .await
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?
    {
        let name = field.name().unwrap_or_default().to_string();
        let file_name = field.file_name().unwrap_or("upload").to_string();
        let data = field
            .bytes()
            .await
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
        let text = || String::from_utf8_lossy(&data).into_owned();
        match name.as_str() {
            "file" => file = Some((file_name, data.clone())),
            "delimiter" => opts.delimiter = Some(text()),
            "id_column" => opts.id_column = Some(text()),
            "text_column" => opts.text_column = Some(text()),
            "metadata_columns" => opts.metadata_columns = Some(text()),
            _ => {}
        }
    }
    let (file_name, bytes) =
        file.ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "multipart field 'file' is required"))?;
    let st = state.clone();
    let (meta, created) = tokio::task::spawn_blocking(move || store_corpus(&st, &file_name, &bytes, &opts))
        .await
        .map_err(ApiError::internal)??;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(json!({ "corpus_id": meta.corpus_id, "doc_count": meta.doc_count }))).into_response())
}

fn store_corpus(
    state: &AppState,
    file_name: &str,
    bytes: &[u8],
    opts: &UploadOptions,
) -> ApiResult<(CorpusMeta, bool)> {
    let docs = corpora::parse_upload(file_name, bytes, opts)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let (id, normalized) = corpora::normalize(&docs);
    let mut index = state.corpora.lock().expect("corpus lock");
    if let Some(existing) = index.get(&id) {
        return Ok((existing.clone(), false));
    }
    let dir = state.store.corpora_dir().join(&id);
    std::fs::create_dir_all(&dir).map_err(ApiError::internal)?;
    write_atomic(&dir.join(topicflow_workflow::sources::CORPUS_DOCUMENTS_FILE), &normalized)
        .map_err(ApiError::internal)?;
    let meta = CorpusMeta {
        corpus_id: id.clone(),
        doc_count: docs.len(),
        file_name: file_name.to_string(),
        format: if corpora::is_zip(file_name, bytes) { "zip" } else { "delimited" }.into(),
        metadata_keys: corpora::metadata_keys(&docs),
        created_at: now(),
    };
    state.store.save_json(&dir.join("meta.json"), &meta).map_err(ApiError::internal)?;
    info!(corpus = %id, docs = meta.doc_count, "corpus stored");
    index.insert(id, meta.clone());
    Ok((meta, true))
}

async fn list_corpora(State(state): State<Shared>) -> Json<Vec<CorpusMeta>> {
    Json(state.corpora.lock().expect("corpus lock").values().cloned().collect())
}

async fn get_corpus(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<CorpusMeta>> {
    state
        .corpora
        .lock()
        .expect("corpus lock")
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found("corpus", &id))
}

// ---- workflows

fn parse_workflow(body: &[u8]) -> ApiResult<Workflow> {
    Workflow::from_bytes(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))
}

fn save_workflow(state: &AppState, id: &str, workflow: Workflow) -> ApiResult<Value> {
    let hash = workflow.workflow_hash();
    let diagnostics = validate(&workflow);
    let path = state.store.workflows_dir().join(format!("{id}.json"));
    write_atomic(&path, &workflow.to_canonical_bytes()).map_err(ApiError::internal)?;
    state.workflows.lock().expect("workflow lock").insert(id.to_string(), workflow);
    Ok(json!({ "workflow_id": id, "workflow_hash": hash, "diagnostics": diagnostics }))
}

async fn create_workflow(State(state): State<Shared>, body: Bytes) -> ApiResult<Response> {
    let workflow = parse_workflow(&body)?;
    let id = new_id();
    let out = save_workflow(&state, &id, workflow)?;
    Ok((StatusCode::CREATED, Json(out)).into_response())
}

async fn put_workflow(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    if !state.workflows.lock().expect("workflow lock").contains_key(&id) {
        return Err(ApiError::not_found("workflow", &id));
    }
    let workflow = parse_workflow(&body)?;
    save_workflow(&state, &id, workflow).map(Json)
}

fn lookup_workflow(state: &AppState, id: &str) -> ApiResult<Workflow> {
    state
        .workflows
        .lock()
        .expect("workflow lock")
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::not_found("workflow", id))
}

async fn get_workflow(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let w = lookup_workflow(&state, &id)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], w.to_canonical_bytes()).into_response())
}

async fn list_workflows(State(state): State<Shared>) -> Json<Vec<Value>> {
    let list = state
        .workflows
        .lock()
        .expect("workflow lock")
        .iter()
        .map(|(id, w)| {
            json!({
                "workflow_id": id,
                "name": w.name,
                "workflow_hash": w.workflow_hash(),
                "node_count": w.nodes.len(),
            })
        })
        .collect();
    Json(list)
}

async fn delete_workflow(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    if state.workflows.lock().expect("workflow lock").remove(&id).is_none() {
        return Err(ApiError::not_found("workflow", &id));
    }
    let path = state.store.workflows_dir().join(format!("{id}.json"));
    std::fs::remove_file(path).map_err(ApiError::internal)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn validate_workflow(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let w = lookup_workflow(&state, &id)?;
    Ok(Json(json!({ "diagnostics": validate(&w) })))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunRequest {
    #[serde(default)]
    seed: u64,
}

async fn submit_run(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let workflow = lookup_workflow(&state, &id)?;
    let req: RunRequest = if body.iter().all(u8::is_ascii_whitespace) {
        RunRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?
    };
    let diagnostics = validate(&workflow);
    if !diagnostics.is_empty() {
        return Err(ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            body: json!({ "error": "workflow is invalid", "diagnostics": diagnostics }),
        });
    }
    let job_id = new_id();
    write_atomic(&state.snapshot_path(&job_id), &workflow.to_canonical_bytes()).map_err(ApiError::internal)?;
    let sequence = state.next_sequence.fetch_add(1, Ordering::SeqCst);
    let job = Job::new(job_id.clone(), id, workflow.workflow_hash(), req.seed, sequence, now());
    state.store.save_json(&state.job_path(&job_id), &job).map_err(ApiError::internal)?;
    state.jobs.lock().expect("job lock").insert(job_id.clone(), job);
    state
        .queue
        .send(job_id.clone())
        .map_err(|_| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "job worker is not running"))?;
    info!(job = %job_id, seed = req.seed, "job queued");
    Ok((StatusCode::ACCEPTED, Json(json!({ "job_id": job_id })))
        .into_response())
}

// ---- jobs and runs

async fn list_jobs(State(state): State<Shared>) -> Json<Vec<Job>> {
    let mut jobs: Vec<Job> = state.jobs.lock().expect("job lock").values().cloned().collect();
    jobs.sort_by_key(|j| j.sequence);
    Json(jobs)
}

async fn get_job(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Job>> {
    state.job(&id).map(Json).ok_or_else(|| ApiError::not_found("job", &id))
}

fn run_manifest(state: &AppState, id: &str) -> ApiResult<RunManifest> {
    if !safe_id(id) {
        return Err(ApiError::not_found("run", id));
    }
    let path = state.store.run_dir(id).join(MANIFEST_FILE);
    let bytes = std::fs::read(&path).map_err(|_| ApiError::not_found("run", id))?;
    serde_json::from_slice(&bytes).map_err(ApiError::internal)
}

async fn list_artifacts(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let manifest = run_manifest(&state, &id)?;
    let artifacts: Vec<Value> = manifest
        .artifacts
        .iter()
        .map(|(name, a)| {
            json!({
                "name": name,
                "node_id": a.node_id,
                "port": a.port,
                "type": a.ty,
                "media_type": a.ty.media_type(),
                "sha256": a.sha256,
                "size": a.size,
            })
        })
        .collect();
    Ok(Json(json!({
        "run_id": id,
        "status": manifest.status,
        "artifacts": artifacts,
        "files": [MANIFEST_FILE, WORKFLOW_FILE],
    })))
}

async fn get_artifact(State(state): State<Shared>, Path((id, name)): Path<(String, String)>) -> ApiResult<Response> {
    let manifest = run_manifest(&state, &id)?;
    let media_type = if name == MANIFEST_FILE || name == WORKFLOW_FILE {
        "application/json"
    } else {
        manifest
            .artifacts
            .get(&name)
            .map(|a| a.ty.media_type())
            .ok_or_else(|| ApiError::not_found("artifact", &name))?
    };
    let bytes = tokio::fs::read(state.store.run_dir(&id).join(&name))
        .await
        .map_err(|_| ApiError::not_found("artifact", &name))?;
    Ok(([(header::CONTENT_TYPE, media_type)], bytes).into_response())
}
