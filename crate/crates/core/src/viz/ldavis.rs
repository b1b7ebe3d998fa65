use std::cmp::Ordering;
use std::f64::consts::LN_2;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::ArrayView1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{VizError, SCHEMA_VERSION};
use crate::corpus::{BowCorpus, Dictionary};
use crate::lda::LdaModel;

pub const DEFAULT_RELEVANCE_TERMS: usize = 30;

/// Eigenvalues below this are treated as zero when laying out topics.
const EIGEN_FLOOR: f64 = 1e-12;

/// `{0.0, 0.1, ..., 1.0}`.
pub fn lambda_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn kl_to_mixture(p: ArrayView1<f64>, q: ArrayView1<f64>) -> f64 {
    p.iter()
        .zip(q.iter())
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (2.0 * a / (a + b)).ln())
        .sum()
}

/// Jensen-Shannon divergence in nats, clamped to `[0, ln 2]`.
pub fn jensen_shannon(p: ArrayView1<f64>, q: ArrayView1<f64>) -> f64 {
    let d = 0.5 * kl_to_mixture(p, q) + 0.5 * kl_to_mixture(q, p);
    d.clamp(0.0, LN_2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntertopicMap {
    pub distances: Vec<Vec<f64>>,
    pub coords: Vec<[f64; 2]>,
}

#[allow(clippy::needless_range_loop)]
pub fn intertopic_map(model: &LdaModel) -> IntertopicMap {
    let k = model.num_topics();
    let mut distances = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let d = jensen_shannon(model.phi.row(i), model.phi.row(j));
            distances[i][j] = d;
            distances[j][i] = d;
        }
    }
    let coords = classical_mds(&distances);
    IntertopicMap { distances, coords }
}

/// Two-dimensional classical scaling of a distance matrix.
fn classical_mds(dist: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let k = dist.len();
    match k {
        0 => return Vec::new(),
        1 => return vec![[0.0, 0.0]],
        2 => {
            let h = dist[0][1] / 2.0;
            return vec![[h, 0.0], [-h, 0.0]];
        }
        _ => {}
    }
    let d2 = DMatrix::from_fn(k, k, |i, j| dist[i][j] * dist[i][j]);
    let row_means: Vec<f64> = (0..k).map(|i| d2.row(i).sum() / k as f64).collect();
    let grand = row_means.iter().sum::<f64>() / k as f64;
    let b = DMatrix::from_fn(k, k, |i, j| {
        -0.5 * (d2[(i, j)] - row_means[i] - row_means[j] + grand)
    });
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut coords = vec![[0.0; 2]; k];
    for (axis, &e) in order.iter().take(2).enumerate() {
        let lambda = eig.eigenvalues[e];
        if lambda <= EIGEN_FLOOR {
            continue;
        }
        let v = eig.eigenvectors.column(e);
        let sign = match v.iter().find(|x| x.abs() > EIGEN_FLOOR) {
            Some(&x) if x < 0.0 => -1.0,
            _ => 1.0,
        };
        let scale = sign * lambda.sqrt();
        for i in 0..k {
            coords[i][axis] = v[i] * scale;
        }
    }
    // the eigenvectors are orthogonal to the ones vector only up to rounding
    for axis in 0..2 {
        let mean = coords.iter().map(|c| c[axis]).sum::<f64>() / k as f64;
        for c in &mut coords {
            c[axis] -= mean;
        }
    }
    coords
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTerm {
    pub term_id: u32,
    pub term: String,
    pub relevance: f64,
    pub phi: f64,
    pub lift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicTerms {
    /// 1-based topic id.
    pub topic: usize,
    /// One ranking per entry of the lambda grid.
    pub rankings: Vec<Vec<RankedTerm>>,
}

fn corpus_term_probabilities(
    model: &LdaModel,
    corpus: &BowCorpus,
    dict: &Dictionary,
) -> Result<Vec<f64>, VizError> {
    let v = model.vocab_size();
    if dict.len() != v {
        return Err(VizError::DimensionMismatch(format!(
            "dictionary has {} terms, model has {v}",
            dict.len()
        )));
    }
    if let Some(max) = corpus.max_term_id() {
        if max as usize >= v {
            return Err(VizError::DimensionMismatch(format!(
                "corpus term id {max} outside vocabulary of {v}"
            )));
        }
    }
    let p = corpus.term_probabilities(v);
    if let Some(w) = p.iter().position(|&x| x <= 0.0) {
        return Err(VizError::ZeroTermProbability(dict.term(w as u32).to_string()));
    }
    Ok(p)
}

/// Top `r` terms per topic and lambda by `lambda ln phi + (1 - lambda) ln(phi / p_w)`,
/// ties broken by ascending term id.
pub fn relevance_table(
    model: &LdaModel,
    corpus: &BowCorpus,
    dict: &Dictionary,
    lambdas: &[f64],
    r: usize,
) -> Result<Vec<TopicTerms>, VizError> {
    let p = corpus_term_probabilities(model, corpus, dict)?;
    Ok(relevance_with(model, dict, &p, lambdas, r))
}

fn relevance_with(
    model: &LdaModel,
    dict: &Dictionary,
    p: &[f64],
    lambdas: &[f64],
    r: usize,
) -> Vec<TopicTerms> {
    let v = model.vocab_size();
    let r = r.min(v);
    (0..model.num_topics())
        .into_par_iter()
        .map(|k| {
            let phi = model.phi.row(k);
            let log_phi: Vec<f64> = phi.iter().map(|x| x.ln()).collect();
            let log_lift: Vec<f64> = (0..v).map(|w| log_phi[w] - p[w].ln()).collect();
            let rankings = lambdas
                .iter()
                .map(|&lambda| {
                    let score: Vec<f64> = (0..v)
                        .map(|w| lambda * log_phi[w] + (1.0 - lambda) * log_lift[w])
                        .collect();
                    let mut ids: Vec<usize> = (0..v).collect();
                    ids.sort_by(|&a, &b| {
                        score[b]
                            .partial_cmp(&score[a])
                            .unwrap_or(Ordering::Equal)
                            .then(a.cmp(&b))
                    });
                    ids.into_iter()
                        .take(r)
                        .map(|w| RankedTerm {
                            term_id: w as u32,
                            term: dict.term(w as u32).to_string(),
                            relevance: score[w],
                            phi: phi[w],
                            lift: phi[w] / p[w],
                        })
                        .collect()
                })
                .collect();
            TopicTerms {
                topic: k + 1,
                rankings,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicPoint {
    /// 1-based topic id.
    pub topic: usize,
    pub proportion: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefaultTerm {
    pub term_id: u32,
    pub term: String,
    pub probability: f64,
}

/// Payload of the intertopic map view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdavisData {
    pub schema_version: u32,
    pub num_topics: usize,
    pub lambda_grid: Vec<f64>,
    pub relevance_terms: usize,
    /// 1-based topic ids by proportion, largest first.
    pub topic_order: Vec<usize>,
    /// Indexed by topic id minus one.
    pub topics: Vec<TopicPoint>,
    pub distances: Vec<Vec<f64>>,
    pub term_table: Vec<TopicTerms>,
    /// Most frequent corpus terms, shown when no topic is selected.
    pub default_terms: Vec<DefaultTerm>,
}

impl LdavisData {
    pub fn proportions(&self) -> Vec<f64> {
        self.topics.iter().map(|t| t.proportion).collect()
    }

    pub fn coords(&self) -> Vec<[f64; 2]> {
        self.topics.iter().map(|t| [t.x, t.y]).collect()
    }
}

/// `P_k = sum_d theta_dk n_d / N`. A corpus without tokens gives uniform weight.
fn topic_proportions(model: &LdaModel, corpus: &BowCorpus) -> Vec<f64> {
    let k = model.num_topics();
    let total = corpus.total_tokens() as f64;
    if total == 0.0 {
        return vec![1.0 / k as f64; k];
    }
    let mut p = vec![0.0; k];
    for (d, doc) in corpus.docs().iter().enumerate() {
        let n = doc.len() as f64;
        for (t, x) in model.theta.row(d).iter().enumerate() {
            p[t] += x * n;
        }
    }
    p.iter().map(|x| x / total).collect()
}

pub fn ldavis_data(
    model: &LdaModel,
    corpus: &BowCorpus,
    dict: &Dictionary,
    r: usize,
) -> Result<LdavisData, VizError> {
    if corpus.num_docs() != model.num_docs() {
        return Err(VizError::DimensionMismatch(format!(
            "corpus has {} documents, model has {}",
            corpus.num_docs(),
            model.num_docs()
        )));
    }
    let p_w = corpus_term_probabilities(model, corpus, dict)?;
    let grid = lambda_grid();
    let term_table = relevance_with(model, dict, &p_w, &grid, r);
    let map = intertopic_map(model);
    let proportions = topic_proportions(model, corpus);

    let mut topic_order: Vec<usize> = (0..model.num_topics()).collect();
    topic_order.sort_by(|&a, &b| {
        proportions[b]
            .partial_cmp(&proportions[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut by_freq: Vec<usize> = (0..p_w.len()).collect();
    by_freq.sort_by(|&a, &b| {
        p_w[b]
            .partial_cmp(&p_w[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let default_terms = by_freq
        .into_iter()
        .take(r)
        .map(|w| DefaultTerm {
            term_id: w as u32,
            term: dict.term(w as u32).to_string(),
            probability: p_w[w],
        })
        .collect();
    let topics = proportions
        .iter()
        .zip(&map.coords)
        .enumerate()
        .map(|(k, (&proportion, c))| TopicPoint {
            topic: k + 1,
            proportion,
            x: c[0],
            y: c[1],
        })
        .collect();
    Ok(LdavisData {
        schema_version: SCHEMA_VERSION,
        num_topics: model.num_topics(),
        lambda_grid: grid,
        relevance_terms: r.min(model.vocab_size()),
        topic_order: topic_order.into_iter().map(|k| k + 1).collect(),
        topics,
        distances: map.distances,
        term_table,
        default_terms,
    })
}
