//! Latent semantic analysis: the leading left singular vectors of X.
//!
//! Large problems use a seeded randomized range finder (Gaussian sketch,
//! subspace power iterations, QR re-orthonormalization) followed by a small
//! dense SVD. When the sketch would cover the whole column space anyway the
//! dense SVD of X is taken directly.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ModelTag, TopicDictionary};
use crate::corpus::DocTermMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsaConfig {
    pub topics: usize,
    pub seed: u64,
    #[serde(default = "default_power_iters")]
    pub power_iters: usize,
    #[serde(default = "default_oversample")]
    pub oversample: usize,
}

fn default_power_iters() -> usize {
    10
}

fn default_oversample() -> usize {
    8
}

impl LsaConfig {
    pub fn new(topics: usize, seed: u64) -> Self {
        LsaConfig {
            topics,
            seed,
            power_iters: default_power_iters(),
            oversample: default_oversample(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsaFit {
    pub dictionary: TopicDictionary,
    /// Descending.
    pub singular_values: Vec<f64>,
}

fn dense(x: &DocTermMatrix) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(x.n_rows(), x.n_cols());
    for (r, c, v) in x.triplets() {
        m[(r, c)] = v;
    }
    m
}

/// X * B for dense B (M x l).
fn sparse_mul(x: &DocTermMatrix, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(x.n_rows(), b.ncols());
    for (r, c, v) in x.triplets() {
        for l in 0..b.ncols() {
            out[(r, l)] += v * b[(c, l)];
        }
    }
    out
}

/// X^T * A for dense A (N x l).
fn sparse_tr_mul(x: &DocTermMatrix, a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(x.n_cols(), a.ncols());
    for (r, c, v) in x.triplets() {
        for l in 0..a.ncols() {
            out[(c, l)] += v * a[(r, l)];
        }
    }
    out
}

fn orthonormal_basis(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

/// Thin SVD sorted by descending singular value.
fn sorted_svd(m: DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    (u, values)
}

fn effective_rank(values: &[f64], n: usize, m: usize) -> usize {
    let top = values.first().copied().unwrap_or(0.0);
    let tol = n.max(m) as f64 * f64::EPSILON * top;
    values.iter().filter(|&&s| s > tol).count()
}

/// Top-K left singular vectors of `x`, each flipped so that its
/// largest-magnitude entry is positive.
pub fn lsa_fit(x: &DocTermMatrix, config: &LsaConfig) -> Result<LsaFit> {
    let (n, m) = (x.n_rows(), x.n_cols());
    let k = config.topics;
    let full = n.min(m);
    if k == 0 {
        return Err(Error::config("LSA needs at least one topic"));
    }
    if k > full {
        let (_, values) = sorted_svd(dense(x));
        return Err(Error::RankDeficient {
            requested: k,
            effective_rank: effective_rank(&values, n, m),
        });
    }

    let sketch = (k + config.oversample).min(full);
    let (u, values) = if sketch == full {
        sorted_svd(dense(x))
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let omega = DMatrix::from_fn(m, sketch, |_, _| StandardNormal.sample(&mut rng));
        let mut q = orthonormal_basis(sparse_mul(x, &omega));
        for _ in 0..config.power_iters {
            let z = orthonormal_basis(sparse_tr_mul(x, &q));
            q = orthonormal_basis(sparse_mul(x, &z));
        }
        // B = Q^T X, small (sketch x M)
        let b = sparse_tr_mul(x, &q).transpose();
        let (ub, values) = sorted_svd(b);
        (q * ub, values)
    };

    let rank = effective_rank(&values, n, m);
    if rank < k {
        return Err(Error::RankDeficient {
            requested: k,
            effective_rank: rank,
        });
    }

    let mut weights = Vec::with_capacity(n * k);
    for c in 0..k {
        let col = u.column(c);
        let pivot = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &v)| if v.abs() > best.1 { (i, v.abs()) } else { best })
            .0;
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        weights.extend(col.iter().map(|v| sign * v));
    }
    Ok(LsaFit {
        dictionary: TopicDictionary::new(n, k, weights, ModelTag::Lsa)?,
        singular_values: values[..k].to_vec(),
    })
}
