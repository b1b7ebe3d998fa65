//! Topic coherence (UMass and NPMI) and multi-K coherence sweeps.
//!
//! Co-occurrence is counted at document level on token sets.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{BowCorpus, Dictionary};
use crate::lda::{perplexity, train_lda, LdaError, LdaModel, LdaParams};
use crate::text::TokenizedDoc;

/// Smoothing added inside the NPMI logarithms.
pub const NPMI_EPSILON: f64 = 1e-12;
/// Default number of top terms scored per topic.
pub const DEFAULT_TOP_M: usize = 10;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("top term '{0}' does not occur in any document")]
    UnknownTerm(String),
    #[error("no topics to score")]
    NoTopics,
    #[error("topic {0} has an empty term list")]
    EmptyTopic(usize),
    #[error("K list is empty")]
    EmptyKList,
    #[error("invalid K {0}: every K must be >= 1 and appear once")]
    InvalidK(usize),
    #[error("unknown coherence metric '{0}' (expected \"umass\" or \"npmi\")")]
    UnknownMetric(String),
    #[error("training failed for K={k}: {source}")]
    Training {
        k: usize,
        #[source]
        source: LdaError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoherenceMetric {
    #[default]
    UMass,
    Npmi,
}

impl fmt::Display for CoherenceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoherenceMetric::UMass => "umass",
            CoherenceMetric::Npmi => "npmi",
        })
    }
}

impl FromStr for CoherenceMetric {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "umass" => Ok(Self::UMass),
            "npmi" => Ok(Self::Npmi),
            other => Err(EvalError::UnknownMetric(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub metric: CoherenceMetric,
    pub per_topic: Vec<f64>,
    pub mean: f64,
}

/// Sorted document postings per term, built once and shared read-only.
#[derive(Debug, Clone)]
pub struct CooccurrenceIndex {
    num_docs: usize,
    postings: BTreeMap<String, Vec<u32>>,
}

impl CooccurrenceIndex {
    pub fn build(docs: &[TokenizedDoc]) -> Self {
        let mut postings: BTreeMap<String, Vec<u32>> = BTreeMap::new();
        for (i, doc) in docs.iter().enumerate() {
            for tok in &doc.tokens {
                let list = postings.entry(tok.clone()).or_default();
                if list.last() != Some(&(i as u32)) {
                    list.push(i as u32);
                }
            }
        }
        Self {
            num_docs: docs.len(),
            postings,
        }
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn doc_count(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn co_doc_count(&self, a: &str, b: &str) -> usize {
        let (Some(pa), Some(pb)) = (self.postings.get(a), self.postings.get(b)) else {
            return 0;
        };
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < pa.len() && j < pb.len() {
            match pa[i].cmp(&pb[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    fn check_terms(&self, top_terms: &[Vec<String>]) -> Result<(), EvalError> {
        if top_terms.is_empty() {
            return Err(EvalError::NoTopics);
        }
        for (k, terms) in top_terms.iter().enumerate() {
            if terms.is_empty() {
                return Err(EvalError::EmptyTopic(k));
            }
            if let Some(t) = terms.iter().find(|t| self.doc_count(t) == 0) {
                return Err(EvalError::UnknownTerm(t.clone()));
            }
        }
        Ok(())
    }

    /// Mean over ranked pairs `(m, l)`, `l < m`, of
    /// `ln((D(v_m, v_l) + 1) / D(v_l))`. A single term scores 0.
    fn umass_topic(&self, terms: &[String]) -> f64 {
        let m = terms.len();
        if m < 2 {
            return 0.0;
        }
        let mut sum = 0.0;
        for i in 1..m {
            for j in 0..i {
                let co = self.co_doc_count(&terms[i], &terms[j]) as f64;
                sum += ((co + 1.0) / self.doc_count(&terms[j]) as f64).ln();
            }
        }
        sum / (m * (m - 1) / 2) as f64
    }

    /// NPMI of one pair. A pair that never co-occurs is -1 (the limit as
    /// the joint probability goes to zero); a pair present in every
    /// document is 0 (the 0/0 saturation case).
    fn npmi_pair(&self, a: &str, b: &str) -> f64 {
        let co = self.co_doc_count(a, b);
        if co == 0 {
            return -1.0;
        }
        if co == self.num_docs {
            return 0.0;
        }
        let n = self.num_docs as f64;
        let p_ab = co as f64 / n;
        let p_a = self.doc_count(a) as f64 / n;
        let p_b = self.doc_count(b) as f64 / n;
        let pmi = ((p_ab + NPMI_EPSILON) / (p_a * p_b)).ln();
        pmi / -(p_ab + NPMI_EPSILON).ln()
    }

    fn npmi_topic(&self, terms: &[String]) -> f64 {
        let m = terms.len();
        if m < 2 {
            return 0.0;
        }
        let mut sum = 0.0;
        for i in 1..m {
            for j in 0..i {
                sum += self.npmi_pair(&terms[i], &terms[j]);
            }
        }
        sum / (m * (m - 1) / 2) as f64
    }

    pub fn coherence(
        &self,
        metric: CoherenceMetric,
        top_terms: &[Vec<String>],
    ) -> Result<CoherenceReport, EvalError> {
        self.check_terms(top_terms)?;
        let per_topic: Vec<f64> = top_terms
            .iter()
            .map(|t| match metric {
                CoherenceMetric::UMass => self.umass_topic(t),
                CoherenceMetric::Npmi => self.npmi_topic(t),
            })
            .collect();
        let mean = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
        Ok(CoherenceReport {
            metric,
            per_topic,
            mean,
        })
    }
}

pub fn umass_coherence(
    top_terms: &[Vec<String>],
    docs: &[TokenizedDoc],
) -> Result<CoherenceReport, EvalError> {
    CooccurrenceIndex::build(docs).coherence(CoherenceMetric::UMass, top_terms)
}

pub fn npmi_coherence(
    top_terms: &[Vec<String>],
    docs: &[TokenizedDoc],
) -> Result<CoherenceReport, EvalError> {
    CooccurrenceIndex::build(docs).coherence(CoherenceMetric::Npmi, top_terms)
}

/// The `m` highest-probability terms of every topic, as strings.
pub fn model_top_terms(model: &LdaModel, dict: &Dictionary, m: usize) -> Vec<Vec<String>> {
    (0..model.num_topics())
        .map(|k| {
            model
                .top_terms(k, m)
                .into_iter()
                .map(|(id, _)| dict.term(id).to_string())
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub coherence_mean: f64,
    pub perplexity: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub metric: CoherenceMetric,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// CSV with columns `K,coherence_mean,perplexity,seed`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("K,coherence_mean,perplexity,seed\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.k, r.coherence_mean, r.perplexity, r.seed
            ));
        }
        out
    }
}

/// Trains one model per K (same template and seed) and scores each.
/// No K is selected; rows come back in ascending K.
pub fn coherence_sweep(
    corpus: &BowCorpus,
    dict: &Dictionary,
    docs: &[TokenizedDoc],
    k_list: &[usize],
    params: &LdaParams,
    top_m: usize,
    metric: CoherenceMetric,
) -> Result<SweepResult, EvalError> {
    if k_list.is_empty() {
        return Err(EvalError::EmptyKList);
    }
    let mut ks = k_list.to_vec();
    ks.sort_unstable();
    for w in ks.windows(2) {
        if w[0] == w[1] {
            return Err(EvalError::InvalidK(w[0]));
        }
    }
    if ks[0] == 0 {
        return Err(EvalError::InvalidK(0));
    }
    let index = CooccurrenceIndex::build(docs);
    let rows = ks
        .par_iter()
        .map(|&k| {
            let config = params.config_for(k);
            let model = train_lda(corpus, dict, &config)
                .map_err(|source| EvalError::Training { k, source })?;
            let report = index.coherence(metric, &model_top_terms(&model, dict, top_m))?;
            let perplexity =
                perplexity(&model, corpus).map_err(|source| EvalError::Training { k, source })?;
            Ok(SweepRow {
                k,
                coherence_mean: report.mean,
                perplexity,
                seed: config.seed,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(SweepResult { metric, rows })
}
