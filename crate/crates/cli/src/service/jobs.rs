use serde::{Deserialize, Serialize};
use thiserror::Error;
use topicflow_workflow::{NodeProgress, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Succeeded,
    Failed,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("job cannot move from {from:?} to {to:?}")]
pub struct TransitionError {
    pub from: JobState,
    pub to: JobState,
}

/// One submitted run. The manifest is present exactly when the job succeeded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: String,
    pub workflow_id: String,
    pub workflow_hash: String,
    pub seed: u64,
    /// Submission order; the queue is FIFO on this.
    pub sequence: u64,
    pub state: JobState,
    #[serde(default)]
    pub progress: Vec<NodeProgress>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub created_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<String>,
}

impl Job {
    pub fn new(job_id: String, workflow_id: String, workflow_hash: String, seed: u64, sequence: u64, now: String) -> Self {
        Self {
            job_id,
            workflow_id,
            workflow_hash,
            seed,
            sequence,
            state: JobState::Queued,
            progress: Vec::new(),
            manifest: None,
            error: None,
            created_at: now,
            started_at: None,
            finished_at: None,
        }
    }

    fn check(&self, to: JobState) -> Result<(), TransitionError> {
        let ok = matches!(
            (self.state, to),
            (JobState::Queued, JobState::Running)
                | (JobState::Running, JobState::Succeeded)
                | (JobState::Running, JobState::Failed)
        );
        if ok {
            Ok(())
        } else {
            Err(TransitionError { from: self.state, to })
        }
    }

    pub fn start(&mut self, now: String) -> Result<(), TransitionError> {
        self.check(JobState::Running)?;
        self.state = JobState::Running;
        self.started_at = Some(now);
        Ok(())
    }

    pub fn succeed(&mut self, manifest: RunManifest, now: String) -> Result<(), TransitionError> {
        self.check(JobState::Succeeded)?;
        self.state = JobState::Succeeded;
        self.manifest = Some(manifest);
        self.finished_at = Some(now);
        Ok(())
    }

    pub fn fail(&mut self, error: String, now: String) -> Result<(), TransitionError> {
        self.check(JobState::Failed)?;
        self.state = JobState::Failed;
        self.manifest = None;
        self.error = Some(error);
        self.finished_at = Some(now);
        Ok(())
    }

    /// Replaces the entry for `p.node_id`, appending when new.
    pub fn record_progress(&mut self, p: &NodeProgress) {
        match self.progress.iter_mut().find(|x| x.node_id == p.node_id) {
            Some(slot) => *slot = p.clone(),
            None => self.progress.push(p.clone()),
        }
    }
}
