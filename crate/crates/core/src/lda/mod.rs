//! Latent Dirichlet allocation trained by collapsed Gibbs sampling.
//!
//! Randomness comes from `ChaCha8Rng` seeded through `SeedableRng::seed_from_u64`,
//! whose output stream is fixed across platforms. Topic indices are drawn
//! as `u32` so the stream does not depend on pointer width.

mod archive;
mod sampler;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{BowCorpus, Dictionary};

pub use archive::{read_archive, write_archive, ArchiveHeader, ARCHIVE_MAGIC};
use sampler::GibbsState;

#[derive(Debug, Error)]
pub enum LdaError {
    #[error("invalid LDA configuration: {0}")]
    InvalidConfig(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("term id {term_id} is outside the dictionary (V={vocab})")]
    TermOutOfRange { term_id: u32, vocab: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("malformed model archive: {0}")]
    Archive(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub num_topics: usize,
    /// Symmetric document-topic concentration.
    pub alpha: f64,
    /// Symmetric topic-term concentration.
    pub beta: f64,
    /// Number of Gibbs sweeps.
    pub iterations: usize,
    /// Sweeps before estimation starts. Estimates are taken from the final
    /// sweep's counts, so this only has to be smaller than `iterations`.
    pub burn_in: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// Defaults: `alpha = 50 / K`, `beta = 0.01`, 1000 sweeps, no burn-in, seed 0.
    pub fn new(num_topics: usize) -> Self {
        Self {
            num_topics,
            alpha: 50.0 / num_topics.max(1) as f64,
            beta: DEFAULT_BETA,
            iterations: DEFAULT_ITERATIONS,
            burn_in: 0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), LdaError> {
        let bad = |m: &str| Err(LdaError::InvalidConfig(m.to_string()));
        if self.num_topics < 1 {
            return bad("num_topics must be >= 1");
        }
        if self.num_topics > u32::MAX as usize {
            return bad("num_topics too large");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive and finite");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive and finite");
        }
        if self.iterations < 1 {
            return bad("iterations must be >= 1");
        }
        if self.burn_in >= self.iterations {
            return bad("burn_in must be smaller than iterations");
        }
        Ok(())
    }
}

/// Hyperparameters shared by several models that differ only in K.
/// `alpha: None` means `50 / K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for LdaParams {
    fn default() -> Self {
        Self {
            alpha: None,
            beta: DEFAULT_BETA,
            iterations: DEFAULT_ITERATIONS,
            burn_in: 0,
            seed: 0,
        }
    }
}

impl LdaParams {
    pub fn config_for(&self, num_topics: usize) -> LdaConfig {
        let base = LdaConfig::new(num_topics);
        LdaConfig {
            alpha: self.alpha.unwrap_or(base.alpha),
            beta: self.beta,
            iterations: self.iterations,
            burn_in: self.burn_in,
            seed: self.seed,
            ..base
        }
    }
}

/// A trained model. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub config: LdaConfig,
    pub doc_ids: Vec<String>,
    pub dictionary_hash: String,
    /// K x V, rows sum to one.
    pub phi: Array2<f64>,
    /// D x K, rows sum to one.
    pub theta: Array2<f64>,
    /// Final topic label of every token, in bag-of-words expansion order.
    pub assignments: Vec<Vec<u32>>,
    /// Joint log-likelihood `log p(w, z)` after each sweep.
    pub log_likelihood_trace: Vec<f64>,
}

impl LdaModel {
    pub fn num_topics(&self) -> usize {
        self.phi.nrows()
    }

    pub fn vocab_size(&self) -> usize {
        self.phi.ncols()
    }

    pub fn num_docs(&self) -> usize {
        self.theta.nrows()
    }

    /// The `n` highest-probability terms of `topic`, ties by ascending id.
    pub fn top_terms(&self, topic: usize, n: usize) -> Vec<(u32, f64)> {
        let row = self.phi.row(topic);
        let mut ids: Vec<u32> = (0..row.len() as u32).collect();
        ids.sort_by(|&a, &b| {
            row[b as usize]
                .total_cmp(&row[a as usize])
                .then(a.cmp(&b))
        });
        ids.truncate(n);
        ids.into_iter().map(|id| (id, row[id as usize])).collect()
    }

    /// Returns a copy whose topic `i` is this model's topic `order[i]`.
    pub fn relabel_topics(&self, order: &[usize]) -> Result<Self, LdaError> {
        let k = self.num_topics();
        let mut seen = vec![false; k];
        if order.len() != k || order.iter().any(|&t| t >= k || std::mem::replace(&mut seen[t], true)) {
            return Err(LdaError::DimensionMismatch(
                "relabeling must be a permutation of the topics".into(),
            ));
        }
        let mut inverse = vec![0u32; k];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new as u32;
        }
        let phi = Array2::from_shape_fn(self.phi.dim(), |(t, w)| self.phi[(order[t], w)]);
        let theta = Array2::from_shape_fn(self.theta.dim(), |(d, t)| self.theta[(d, order[t])]);
        let assignments = self
            .assignments
            .iter()
            .map(|zs| zs.iter().map(|&z| inverse[z as usize]).collect())
            .collect();
        Ok(Self {
            phi,
            theta,
            assignments,
            ..self.clone()
        })
    }
}

fn check_consistency(corpus: &BowCorpus, dict: &Dictionary) -> Result<(), LdaError> {
    if let Some(max) = corpus.max_term_id() {
        if max as usize >= dict.len() {
            return Err(LdaError::TermOutOfRange {
                term_id: max,
                vocab: dict.len(),
            });
        }
    }
    Ok(())
}

pub fn train_lda(
    corpus: &BowCorpus,
    dict: &Dictionary,
    config: &LdaConfig,
) -> Result<LdaModel, LdaError> {
    config.validate()?;
    if corpus.num_docs() == 0 || corpus.total_tokens() == 0 {
        return Err(LdaError::EmptyCorpus);
    }
    check_consistency(corpus, dict)?;
    if config.num_topics as u64 > corpus.total_tokens() {
        tracing::warn!(
            topics = config.num_topics,
            tokens = corpus.total_tokens(),
            "more topics than tokens"
        );
    }

    let mut state = GibbsState::new(corpus, dict.len(), config);
    let mut trace = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        state.sweep();
        debug_assert!(state.counts_conserved());
        trace.push(state.log_likelihood());
    }
    let (phi, theta) = state.estimates();
    Ok(LdaModel {
        config: *config,
        doc_ids: corpus.docs().iter().map(|d| d.doc_id.clone()).collect(),
        dictionary_hash: dict.content_hash(),
        phi,
        theta,
        assignments: state.into_assignments(),
        log_likelihood_trace: trace,
    })
}

/// Training-set perplexity
/// `exp(-(sum_d sum_w n_dw ln sum_k theta_dk phi_kw) / N)`.
pub fn perplexity(model: &LdaModel, corpus: &BowCorpus) -> Result<f64, LdaError> {
    if corpus.num_docs() != model.num_docs() {
        return Err(LdaError::DimensionMismatch(format!(
            "corpus has {} documents, model has {}",
            corpus.num_docs(),
            model.num_docs()
        )));
    }
    if let Some(max) = corpus.max_term_id() {
        if max as usize >= model.vocab_size() {
            return Err(LdaError::TermOutOfRange {
                term_id: max,
                vocab: model.vocab_size(),
            });
        }
    }
    if corpus.total_tokens() == 0 {
        return Err(LdaError::EmptyCorpus);
    }
    let k = model.num_topics();
    let mut log_lik = 0.0;
    for (d, doc) in corpus.docs().iter().enumerate() {
        let theta = model.theta.row(d);
        for &(w, c) in &doc.terms {
            let p: f64 = (0..k).map(|t| theta[t] * model.phi[(t, w as usize)]).sum();
            assert!(p > 0.0, "zero-probability token under a smoothed model");
            log_lik += c as f64 * p.ln();
        }
    }
    Ok((-log_lik / corpus.total_tokens() as f64).exp())
}
