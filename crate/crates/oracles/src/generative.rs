//! Corpus generator following the LDA generative story:
//! `phi_k ~ Dir(beta)`, `theta_d ~ Dir(alpha)`, `N_d ~ Poisson(mean_len)`,
//! then for each token `z ~ Cat(theta_d)`, `w ~ Cat(phi_z)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, Poisson};

pub struct GenerativeSpec {
    pub topics: usize,
    pub vocab: usize,
    pub docs: usize,
    pub mean_len: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

pub struct GeneratedCorpus {
    pub phi: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    /// Token ids per document.
    pub docs: Vec<Vec<usize>>,
}

fn dirichlet(rng: &mut ChaCha20Rng, conc: f64, dim: usize) -> Vec<f64> {
    let gamma = Gamma::new(conc, 1.0).unwrap();
    loop {
        let draws: Vec<f64> = (0..dim).map(|_| gamma.sample(rng)).collect();
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            return draws.into_iter().map(|x| x / sum).collect();
        }
    }
}

fn categorical(rng: &mut ChaCha20Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

pub fn generate(spec: &GenerativeSpec) -> GeneratedCorpus {
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let phi: Vec<Vec<f64>> = (0..spec.topics)
        .map(|_| dirichlet(&mut rng, spec.beta, spec.vocab))
        .collect();
    let poisson = Poisson::new(spec.mean_len).unwrap();
    let mut theta = Vec::with_capacity(spec.docs);
    let mut docs = Vec::with_capacity(spec.docs);
    for _ in 0..spec.docs {
        let t = dirichlet(&mut rng, spec.alpha, spec.topics);
        let len = (poisson.sample(&mut rng) as usize).max(1);
        let doc = (0..len)
            .map(|_| {
                let z = categorical(&mut rng, &t);
                categorical(&mut rng, &phi[z])
            })
            .collect();
        theta.push(t);
        docs.push(doc);
    }
    GeneratedCorpus { phi, theta, docs }
}

/// Term label used for generated token ids; zero padded so that
/// lexicographic order equals numeric order.
pub fn term_label(id: usize) -> String {
    format!("w{id:04}")
}
