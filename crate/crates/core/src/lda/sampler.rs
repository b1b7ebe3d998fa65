use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use super::LdaConfig;
use crate::corpus::BowCorpus;

/// Count tables of the collapsed sampler. Matrices are row-major `Vec`s.
pub(super) struct GibbsState {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    words: Vec<Vec<u32>>,
    z: Vec<Vec<u32>>,
    /// D x K
    n_dk: Vec<u32>,
    /// K x V
    n_kw: Vec<u32>,
    n_k: Vec<u64>,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl GibbsState {
    /// Expands each bag-of-words vector into tokens (term-id order) and
    /// assigns every token a uniformly random topic.
    pub(super) fn new(corpus: &BowCorpus, vocab: usize, config: &LdaConfig) -> Self {
        let k = config.num_topics;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let words: Vec<Vec<u32>> = corpus
            .docs()
            .iter()
            .map(|d| {
                d.terms
                    .iter()
                    .flat_map(|&(w, c)| std::iter::repeat_n(w, c as usize))
                    .collect()
            })
            .collect();
        let mut state = Self {
            k,
            v: vocab,
            alpha: config.alpha,
            beta: config.beta,
            z: Vec::with_capacity(words.len()),
            n_dk: vec![0; words.len() * k],
            n_kw: vec![0; k * vocab],
            n_k: vec![0; k],
            weights: vec![0.0; k],
            words: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(0),
        };
        for (d, doc) in words.iter().enumerate() {
            let zs: Vec<u32> = doc
                .iter()
                .map(|&w| {
                    let t = rng.random_range(0..k as u32);
                    state.add(d, w, t);
                    t
                })
                .collect();
            state.z.push(zs);
        }
        state.words = words;
        state.rng = rng;
        state
    }

    fn add(&mut self, d: usize, w: u32, t: u32) {
        let t = t as usize;
        self.n_dk[d * self.k + t] += 1;
        self.n_kw[t * self.v + w as usize] += 1;
        self.n_k[t] += 1;
    }

    fn remove(&mut self, d: usize, w: u32, t: u32) {
        let t = t as usize;
        self.n_dk[d * self.k + t] -= 1;
        self.n_kw[t * self.v + w as usize] -= 1;
        self.n_k[t] -= 1;
    }

    /// One pass over every token, resampling its topic from
    /// `(n_dk + alpha) (n_kw + beta) / (n_k + V beta)` with the token removed.
    pub(super) fn sweep(&mut self) {
        let v_beta = self.v as f64 * self.beta;
        for d in 0..self.words.len() {
            for i in 0..self.words[d].len() {
                let w = self.words[d][i];
                let old = self.z[d][i];
                self.remove(d, w, old);
                let mut total = 0.0;
                for t in 0..self.k {
                    let p = (self.n_dk[d * self.k + t] as f64 + self.alpha)
                        * (self.n_kw[t * self.v + w as usize] as f64 + self.beta)
                        / (self.n_k[t] as f64 + v_beta);
                    total += p;
                    self.weights[t] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self
                    .weights
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(self.k - 1) as u32;
                self.z[d][i] = new;
                self.add(d, w, new);
            }
        }
    }

    /// `sum_k n_dk == n_d` for every document and `sum_d n_dk == n_k` for
    /// every topic, plus the same identity for the topic-term table.
    pub(super) fn counts_conserved(&self) -> bool {
        let k = self.k;
        for (d, doc) in self.words.iter().enumerate() {
            let s: u64 = self.n_dk[d * k..(d + 1) * k].iter().map(|&c| c as u64).sum();
            if s != doc.len() as u64 {
                return false;
            }
        }
        for t in 0..k {
            let by_doc: u64 = (0..self.words.len()).map(|d| self.n_dk[d * k + t] as u64).sum();
            let by_term: u64 = self.n_kw[t * self.v..(t + 1) * self.v]
                .iter()
                .map(|&c| c as u64)
                .sum();
            if by_doc != self.n_k[t] || by_term != self.n_k[t] {
                return false;
            }
        }
        true
    }

    /// Joint log-likelihood `log p(w, z | alpha, beta)` of the current state.
    pub(super) fn log_likelihood(&self) -> f64 {
        let (k, v) = (self.k as f64, self.v as f64);
        let lg_beta = ln_gamma(self.beta);
        let lg_alpha = ln_gamma(self.alpha);
        let mut ll = 0.0;
        for t in 0..self.k {
            // zero counts contribute ln_gamma(beta) - ln_gamma(beta) = 0
            ll += ln_gamma(v * self.beta) - ln_gamma(self.n_k[t] as f64 + v * self.beta);
            for &c in &self.n_kw[t * self.v..(t + 1) * self.v] {
                if c > 0 {
                    ll += ln_gamma(c as f64 + self.beta) - lg_beta;
                }
            }
        }
        for (d, doc) in self.words.iter().enumerate() {
            ll += ln_gamma(k * self.alpha) - k * lg_alpha;
            for &c in &self.n_dk[d * self.k..(d + 1) * self.k] {
                ll += ln_gamma(c as f64 + self.alpha);
            }
            ll -= ln_gamma(doc.len() as f64 + k * self.alpha);
        }
        ll
    }

    /// Smoothed point estimates from the current counts. Documents with no
    /// tokens get a uniform topic mixture.
    pub(super) fn estimates(&self) -> (Array2<f64>, Array2<f64>) {
        let (k, v) = (self.k, self.v);
        let v_beta = v as f64 * self.beta;
        let phi = Array2::from_shape_fn((k, v), |(t, w)| {
            (self.n_kw[t * v + w] as f64 + self.beta) / (self.n_k[t] as f64 + v_beta)
        });
        let k_alpha = k as f64 * self.alpha;
        let theta = Array2::from_shape_fn((self.words.len(), k), |(d, t)| {
            let n_d = self.words[d].len();
            if n_d == 0 {
                1.0 / k as f64
            } else {
                (self.n_dk[d * k + t] as f64 + self.alpha) / (n_d as f64 + k_alpha)
            }
        });
        (phi, theta)
    }

    pub(super) fn into_assignments(self) -> Vec<Vec<u32>> {
        self.z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::BowDoc;

    fn corpus() -> BowCorpus {
        BowCorpus::from_docs(vec![
            BowDoc {
                doc_id: "a".into(),
                terms: vec![(0, 3), (1, 1), (4, 2)],
            },
            BowDoc {
                doc_id: "b".into(),
                terms: vec![],
            },
            BowDoc {
                doc_id: "c".into(),
                terms: vec![(2, 5), (3, 1), (4, 1)],
            },
        ])
    }

    #[test]
    fn counts_conserved_every_sweep() {
        let mut config = LdaConfig::new(3);
        config.seed = 5;
        let mut s = GibbsState::new(&corpus(), 5, &config);
        assert!(s.counts_conserved());
        for _ in 0..100 {
            s.sweep();
            assert!(s.counts_conserved());
            assert!(s.log_likelihood().is_finite());
        }
    }

    #[test]
    fn empty_document_gets_uniform_theta() {
        let mut s = GibbsState::new(&corpus(), 5, &LdaConfig::new(4));
        s.sweep();
        let (_, theta) = s.estimates();
        assert!(theta.row(1).iter().all(|&x| x == 0.25));
    }

    #[test]
    fn single_topic_likelihood_has_closed_form() {
        // with K = 1 every token is in topic 0: the document terms cancel and
        // only the Dirichlet-multinomial of the term counts remains
        let config = LdaConfig {
            alpha: 0.5,
            beta: 0.1,
            ..LdaConfig::new(1)
        };
        let s = GibbsState::new(&corpus(), 5, &config);
        let counts = [3.0, 1.0, 5.0, 1.0, 3.0];
        let n: f64 = counts.iter().sum();
        let mut expected = ln_gamma(5.0 * 0.1) - ln_gamma(n + 0.5);
        for c in counts {
            expected += ln_gamma(c + 0.1) - ln_gamma(0.1);
        }
        assert!((s.log_likelihood() - expected).abs() < 1e-9);
    }
}
