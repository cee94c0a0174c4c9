//! Latent Dirichlet allocation by collapsed Gibbs sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelTag, TopicDictionary};
use crate::corpus::{DocTermMatrix, Weighting};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub topics: usize,
    /// Symmetric Dirichlet concentration of document-topic proportions.
    pub alpha: f64,
    /// Symmetric Dirichlet concentration of topic-word distributions.
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaConfig {
    pub fn new(topics: usize, seed: u64) -> Self {
        LdaConfig {
            topics,
            alpha: 0.1,
            beta: 0.01,
            iterations: 200,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.topics == 0 {
            return Err(Error::config("LDA needs at least one topic"));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::config("LDA alpha and beta must be positive"));
        }
        if self.iterations == 0 {
            return Err(Error::config("LDA needs at least one sweep"));
        }
        Ok(())
    }

    /// Number of trailing sweeps whose estimates are averaged (the final 20%).
    pub fn averaged_sweeps(&self) -> usize {
        self.iterations.div_ceil(5).max(1)
    }
}

/// Token-level state of the collapsed sampler.
pub struct GibbsSampler {
    n_words: usize,
    n_topics: usize,
    alpha: f64,
    beta: f64,
    /// Word of each token, grouped by document.
    token_word: Vec<u32>,
    doc_start: Vec<usize>,
    assignment: Vec<u32>,
    /// Row-major n_words x n_topics.
    word_topic: Vec<u32>,
    topic_total: Vec<u32>,
    /// Row-major n_docs x n_topics.
    doc_topic: Vec<u32>,
    rng: ChaCha8Rng,
    probs: Vec<f64>,
}

impl GibbsSampler {
    /// Expands the count matrix into tokens (column order, then row order) and
    /// draws initial assignments uniformly.
    pub fn new(x: &DocTermMatrix, config: &LdaConfig) -> Result<Self> {
        config.validate()?;
        if x.weighting() != Weighting::RawCount {
            return Err(Error::NeedsRawCounts(x.weighting().to_string()));
        }
        let k = config.topics;
        let mut token_word = Vec::new();
        let mut doc_start = Vec::with_capacity(x.n_cols() + 1);
        for j in 0..x.n_cols() {
            doc_start.push(token_word.len());
            let (rows, vals) = x.column(j);
            for (&r, &v) in rows.iter().zip(vals) {
                if v.fract() != 0.0 {
                    return Err(Error::NeedsRawCounts(format!("non-integer ({v})")));
                }
                token_word.extend(std::iter::repeat_n(r as u32, v as usize));
            }
        }
        doc_start.push(token_word.len());

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut s = GibbsSampler {
            n_words: x.n_rows(),
            n_topics: k,
            alpha: config.alpha,
            beta: config.beta,
            assignment: Vec::with_capacity(token_word.len()),
            word_topic: vec![0; x.n_rows() * k],
            topic_total: vec![0; k],
            doc_topic: vec![0; x.n_cols() * k],
            probs: vec![0.0; k],
            token_word,
            doc_start,
            rng: ChaCha8Rng::seed_from_u64(0),
        };
        for d in 0..x.n_cols() {
            for t in s.doc_start[d]..s.doc_start[d + 1] {
                let z = rng.gen_range(0..k);
                s.assignment.push(z as u32);
                let w = s.token_word[t] as usize;
                s.word_topic[w * k + z] += 1;
                s.topic_total[z] += 1;
                s.doc_topic[d * k + z] += 1;
            }
        }
        s.rng = rng;
        Ok(s)
    }

    pub fn n_tokens(&self) -> usize {
        self.token_word.len()
    }

    /// Resamples every token's topic once.
    pub fn sweep(&mut self) {
        let k = self.n_topics;
        let nbeta = self.n_words as f64 * self.beta;
        for d in 0..self.doc_start.len() - 1 {
            for t in self.doc_start[d]..self.doc_start[d + 1] {
                let w = self.token_word[t] as usize;
                let old = self.assignment[t] as usize;
                self.word_topic[w * k + old] -= 1;
                self.topic_total[old] -= 1;
                self.doc_topic[d * k + old] -= 1;

                let mut total = 0.0;
                for z in 0..k {
                    let p = (self.doc_topic[d * k + z] as f64 + self.alpha)
                        * (self.word_topic[w * k + z] as f64 + self.beta)
                        / (self.topic_total[z] as f64 + nbeta);
                    total += p;
                    self.probs[z] = total;
                }
                let u = self.rng.gen::<f64>() * total;
                let new = self.probs.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.assignment[t] = new as u32;
                self.word_topic[w * k + new] += 1;
                self.topic_total[new] += 1;
                self.doc_topic[d * k + new] += 1;
            }
        }
    }

    /// Count of tokens of `word` assigned to `topic`.
    pub fn word_topic_count(&self, word: usize, topic: usize) -> u32 {
        self.word_topic[word * self.n_topics + topic]
    }

    pub fn topic_count(&self, topic: usize) -> u32 {
        self.topic_total[topic]
    }

    pub fn doc_topic_count(&self, doc: usize, topic: usize) -> u32 {
        self.doc_topic[doc * self.n_topics + topic]
    }

    /// Recounts from the assignments and compares with the running tables.
    pub fn check_counts(&self) -> Result<()> {
        let k = self.n_topics;
        let mut wt = vec![0u32; self.word_topic.len()];
        let mut tt = vec![0u32; k];
        let mut dt = vec![0u32; self.doc_topic.len()];
        for d in 0..self.doc_start.len() - 1 {
            for t in self.doc_start[d]..self.doc_start[d + 1] {
                let z = self.assignment[t] as usize;
                wt[self.token_word[t] as usize * k + z] += 1;
                tt[z] += 1;
                dt[d * k + z] += 1;
            }
        }
        if wt != self.word_topic || tt != self.topic_total || dt != self.doc_topic {
            return Err(Error::Invariant("Gibbs count tables out of sync".into()));
        }
        Ok(())
    }

    /// Posterior-mean topic-word distributions, column-major (word fastest).
    pub fn topic_word_estimate(&self) -> Vec<f64> {
        let k = self.n_topics;
        let nbeta = self.n_words as f64 * self.beta;
        let mut out = Vec::with_capacity(self.n_words * k);
        for z in 0..k {
            let denom = self.topic_total[z] as f64 + nbeta;
            out.extend((0..self.n_words).map(|w| (self.word_topic[w * k + z] as f64 + self.beta) / denom));
        }
        out
    }
}

/// Runs the sampler for `config.iterations` sweeps and averages the
/// topic-word estimates of the final 20% of sweeps.
pub fn lda_fit(x: &DocTermMatrix, config: &LdaConfig) -> Result<TopicDictionary> {
    let mut sampler = GibbsSampler::new(x, config)?;
    let averaged = config.averaged_sweeps();
    let mut acc = vec![0.0; x.n_rows() * config.topics];
    for it in 0..config.iterations {
        sampler.sweep();
        if it + averaged >= config.iterations {
            for (a, p) in acc.iter_mut().zip(sampler.topic_word_estimate()) {
                *a += p;
            }
        }
    }
    let n = x.n_rows();
    for col in acc.chunks_exact_mut(n.max(1)) {
        let sum: f64 = col.iter().sum();
        col.iter_mut().for_each(|v| *v /= sum);
    }
    TopicDictionary::new(n, config.topics, acc, ModelTag::Lda)
}
