//! Online structured dictionary learning.
//!
//! Minimizes the recency-weighted cost
//! `sum_i w_i * min_a [0.5 ||x_i - D a||^2 + kappa Omega(a)]` with
//! `w_i = (i/M)^rho / sum_j (j/M)^rho`, over dictionaries whose atoms lie in
//! the unit Euclidean ball.
//!
//! Documents are streamed in index order. Each one is re-encoded against the
//! current dictionary, its contribution to the weighted sufficient statistics
//! `A = sum w_i a_i a_i^T`, `B = sum w_i x_i a_i^T` is swapped for the new
//! code, and every atom then takes one projected block-coordinate step on the
//! resulting quadratic surrogate. At the start of each epoch all codes are
//! refreshed against the current dictionary and the statistics rebuilt, so the
//! surrogate coincides with the weighted cost and never increases through the
//! epoch.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::sparse::{solve, DictView};
use super::{ModelTag, Regularizer, TopicDictionary};
use crate::corpus::DocTermMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictLearnConfig {
    pub topics: usize,
    pub kappa: f64,
    pub rho: f64,
    pub regularizer: Regularizer,
    pub epochs: usize,
    pub seed: u64,
}

impl DictLearnConfig {
    pub fn new(topics: usize, seed: u64) -> Self {
        DictLearnConfig {
            topics,
            kappa: 0.1,
            rho: 0.0,
            regularizer: Regularizer::L1,
            epochs: 10,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.topics == 0 {
            return Err(Error::config("dictionary learning needs at least one atom"));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::config("kappa must be positive"));
        }
        if !(self.rho >= 0.0) {
            return Err(Error::config("rho must be non-negative"));
        }
        self.regularizer.validate(self.topics)
    }
}

/// Normalized recency weights `(i/M)^rho / sum_j (j/M)^rho`, i = 1..M.
pub fn document_weights(m: usize, rho: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=m).map(|i| (i as f64 / m as f64).powf(rho)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

pub struct DictLearner {
    config: DictLearnConfig,
    n_rows: usize,
    docs: Vec<Vec<f64>>,
    weights: Vec<f64>,
    /// Column-major n_rows x K.
    dict: Vec<f64>,
    codes: Vec<Vec<f64>>,
    /// K x K, row-major.
    stat_a: Vec<f64>,
    /// Column-major n_rows x K.
    stat_b: Vec<f64>,
    epochs_done: usize,
}

impl DictLearner {
    pub fn new(x: &DocTermMatrix, config: &DictLearnConfig) -> Result<Self> {
        let docs = (0..x.n_cols()).map(|j| x.dense_column(j)).collect();
        Self::from_dense(x.n_rows(), docs, config)
    }

    /// Learner over arbitrary real-valued signals of length `n_rows`.
    pub fn from_dense(n_rows: usize, docs: Vec<Vec<f64>>, config: &DictLearnConfig) -> Result<Self> {
        config.validate()?;
        if docs.iter().any(|d| d.len() != n_rows) {
            return Err(Error::config("every signal must have n_rows entries"));
        }
        if docs.is_empty() {
            return Err(Error::EmptyInput("no signals to learn from".into()));
        }
        let (n, k, m) = (n_rows, config.topics, docs.len());
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut dict = Vec::with_capacity(n * k);
        for _ in 0..k {
            let mut col: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            col.iter_mut().for_each(|v| *v /= norm);
            dict.extend(col);
        }
        Ok(DictLearner {
            config: config.clone(),
            n_rows: n,
            docs,
            weights: document_weights(m, config.rho),
            dict,
            codes: vec![vec![0.0; k]; m],
            stat_a: vec![0.0; k * k],
            stat_b: vec![0.0; n * k],
            epochs_done: 0,
        })
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    pub fn dictionary(&self) -> TopicDictionary {
        TopicDictionary::new(self.n_rows, self.config.topics, self.dict.clone(), ModelTag::Dictlearn)
            .expect("dimensions are fixed at construction")
    }

    /// Current code of document `i`.
    pub fn code(&self, i: usize) -> &[f64] {
        &self.codes[i]
    }

    fn encode(&self, i: usize) -> Vec<f64> {
        let view = DictView {
            n_rows: self.n_rows,
            n_cols: self.config.topics,
            data: &self.dict,
        };
        solve(view, &self.docs[i], self.config.kappa, &self.config.regularizer, Some(&self.codes[i])).coefficients
    }

    /// Adds `sign * w_i` times document `i`'s current code to the statistics.
    fn accumulate(&mut self, i: usize, sign: f64) {
        let (k, n) = (self.config.topics, self.n_rows);
        let w = sign * self.weights[i];
        let code = &self.codes[i];
        for a in 0..k {
            if code[a] == 0.0 {
                continue;
            }
            for b in 0..k {
                self.stat_a[a * k + b] += w * code[a] * code[b];
            }
            let col = &mut self.stat_b[a * n..(a + 1) * n];
            for (bv, xv) in col.iter_mut().zip(&self.docs[i]) {
                *bv += w * code[a] * xv;
            }
        }
    }

    /// One projected block-coordinate pass over the atoms.
    fn update_atoms(&mut self) {
        let (k, n) = (self.config.topics, self.n_rows);
        let mut da = vec![0.0; n];
        for j in 0..k {
            let ajj = self.stat_a[j * k + j];
            if ajj <= 0.0 {
                continue;
            }
            da.iter_mut().for_each(|v| *v = 0.0);
            for l in 0..k {
                let a = self.stat_a[l * k + j];
                if a != 0.0 {
                    for (dv, dl) in da.iter_mut().zip(&self.dict[l * n..(l + 1) * n]) {
                        *dv += a * dl;
                    }
                }
            }
            let col = &self.dict[j * n..(j + 1) * n];
            let b = &self.stat_b[j * n..(j + 1) * n];
            let u: Vec<f64> = (0..n).map(|r| col[r] + (b[r] - da[r]) / ajj).collect();
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let scale = 1.0 / norm.max(1.0);
            for (dv, uv) in self.dict[j * n..(j + 1) * n].iter_mut().zip(u) {
                *dv = uv * scale;
            }
        }
    }

    pub fn run_epoch(&mut self) {
        let m = self.docs.len();
        for i in 0..m {
            self.codes[i] = self.encode(i);
        }
        self.stat_a.iter_mut().for_each(|v| *v = 0.0);
        self.stat_b.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            self.accumulate(i, 1.0);
        }
        for i in 0..m {
            let code = self.encode(i);
            self.accumulate(i, -1.0);
            self.codes[i] = code;
            self.accumulate(i, 1.0);
            self.update_atoms();
        }
        self.epochs_done += 1;
    }
}

pub fn dict_learn_fit(x: &DocTermMatrix, config: &DictLearnConfig) -> Result<TopicDictionary> {
    let mut learner = DictLearner::new(x, config)?;
    for _ in 0..config.epochs {
        learner.run_epoch();
    }
    Ok(learner.dictionary())
}
