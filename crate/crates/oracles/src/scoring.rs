//! Straight-line formula evaluations.

use crate::counting::{co_doc_freq, doc_freq};

/// `exp(-(sum_d sum_w n_dw * ln(sum_k theta_dk phi_kw)) / N)` by direct
/// summation over a dense count matrix `counts[d][w]`.
pub fn perplexity(theta: &[Vec<f64>], phi: &[Vec<f64>], counts: &[Vec<u32>]) -> f64 {
    let mut log_lik = 0.0;
    let mut n = 0.0;
    for d in 0..counts.len() {
        for w in 0..counts[d].len() {
            let c = counts[d][w] as f64;
            if c == 0.0 {
                continue;
            }
            let mut p = 0.0;
            for k in 0..phi.len() {
                p += theta[d][k] * phi[k][w];
            }
            log_lik += c * p.ln();
            n += c;
        }
    }
    (-log_lik / n).exp()
}

/// UMass pair score sum over ranked terms, divided by the pair count.
pub fn umass(top: &[String], docs: &[Vec<String>]) -> f64 {
    let m = top.len();
    if m < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut pairs = 0.0;
    for i in 1..m {
        for j in 0..i {
            let co = co_doc_freq(docs, &top[i], &top[j]) as f64;
            let dj = doc_freq(docs, &top[j]) as f64;
            total += ((co + 1.0) / dj).ln();
            pairs += 1.0;
        }
    }
    total / pairs
}

/// Mean NPMI over unordered pairs, using the conventions: a pair that
/// never co-occurs scores -1 and a pair present in every document scores 0.
pub fn npmi(top: &[String], docs: &[Vec<String>]) -> f64 {
    let m = top.len();
    if m < 2 {
        return 0.0;
    }
    let n = docs.len() as f64;
    let eps = 1e-12;
    let mut total = 0.0;
    let mut pairs = 0.0;
    for i in 1..m {
        for j in 0..i {
            let co = co_doc_freq(docs, &top[i], &top[j]);
            let pi = doc_freq(docs, &top[i]) as f64 / n;
            let pj = doc_freq(docs, &top[j]) as f64 / n;
            let pij = co as f64 / n;
            let score = if co == 0 {
                -1.0
            } else if co == docs.len() {
                0.0
            } else {
                let pmi = ((pij + eps) / (pi * pj)).ln();
                pmi / -(pij + eps).ln()
            };
            total += score;
            pairs += 1.0;
        }
    }
    total / pairs
}

/// Jensen-Shannon divergence with natural logarithms.
pub fn jsd(p: &[f64], q: &[f64]) -> f64 {
    let mut kl_p = 0.0;
    let mut kl_q = 0.0;
    for i in 0..p.len() {
        let m = 0.5 * (p[i] + q[i]);
        if p[i] > 0.0 {
            kl_p += p[i] * (p[i] / m).ln();
        }
        if q[i] > 0.0 {
            kl_q += q[i] * (q[i] / m).ln();
        }
    }
    0.5 * kl_p + 0.5 * kl_q
}

/// Total-variation distance.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Greedy one-to-one matching of recovered rows to true rows by minimal JSD.
/// Returns `matches[true_index] = recovered_index`.
pub fn greedy_match(truth: &[Vec<f64>], recovered: &[Vec<f64>]) -> Vec<usize> {
    let mut pairs = Vec::new();
    for (t, p) in truth.iter().enumerate() {
        for (r, q) in recovered.iter().enumerate() {
            pairs.push((jsd(p, q), t, r));
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut assigned = vec![usize::MAX; truth.len()];
    let mut used = vec![false; recovered.len()];
    for (_, t, r) in pairs {
        if assigned[t] == usize::MAX && !used[r] {
            assigned[t] = r;
            used[r] = true;
        }
    }
    assigned
}

/// Relevance `lambda * ln(phi) + (1 - lambda) * ln(phi / p)` for one cell.
pub fn relevance(phi: f64, p: f64, lambda: f64) -> f64 {
    lambda * phi.ln() + (1.0 - lambda) * (phi / p).ln()
}

/// Indices of the `n` largest scores, ties broken by lower index, by full sort.
pub fn top_indices(scores: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    // simple insertion sort keeps this independent of the engine's sort
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 {
            let (a, b) = (idx[j - 1], idx[j]);
            let swap = scores[b] > scores[a] || (scores[b] == scores[a] && b < a);
            if !swap {
                break;
            }
            idx.swap(j - 1, j);
            j -= 1;
        }
    }
    idx.truncate(n);
    idx
}

/// First index of the maximum value.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..row.len() {
        if row[i] > row[best] {
            best = i;
        }
    }
    best
}
