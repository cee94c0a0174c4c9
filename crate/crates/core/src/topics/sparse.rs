//! Sparse coding: minimize `0.5 * ||x - D a||^2 + kappa * Omega(a)` over `a`.
//!
//! Omega is either the l1 norm (cyclic coordinate descent with soft
//! thresholding) or a sum of group l2 norms (block coordinate descent with
//! group soft thresholding).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::TopicDictionary;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 200_000;
const STEP_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularizer {
    L1,
    /// Sum of l2 norms over a partition of the coefficients.
    GroupL2(Vec<Vec<usize>>),
}

impl Regularizer {
    /// Contiguous blocks of `size` coefficients; the last block may be shorter.
    pub fn contiguous_groups(n_coefs: usize, size: usize) -> Self {
        let size = size.max(1);
        Regularizer::GroupL2(
            (0..n_coefs)
                .step_by(size)
                .map(|s| (s..(s + size).min(n_coefs)).collect())
                .collect(),
        )
    }

    /// Checks that group indices partition `0..n_coefs`.
    pub fn validate(&self, n_coefs: usize) -> Result<()> {
        if let Regularizer::GroupL2(groups) = self {
            let mut seen = vec![false; n_coefs];
            for &i in groups.iter().flatten() {
                if i >= n_coefs || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::config("groups must partition the coefficients"));
                }
            }
            if seen.iter().any(|s| !s) || groups.iter().any(Vec::is_empty) {
                return Err(Error::config("groups must partition the coefficients"));
            }
        }
        Ok(())
    }

    pub fn penalty(&self, coefs: &[f64]) -> f64 {
        match self {
            Regularizer::L1 => coefs.iter().map(|a| a.abs()).sum(),
            Regularizer::GroupL2(groups) => groups
                .iter()
                .map(|g| g.iter().map(|&i| coefs[i] * coefs[i]).sum::<f64>().sqrt())
                .sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    pub coefficients: Vec<f64>,
    /// Value of the penalized least-squares objective at `coefficients`.
    pub objective: f64,
}

/// Borrowed column-major dictionary.
#[derive(Clone, Copy)]
pub(crate) struct DictView<'a> {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: &'a [f64],
}

impl DictView<'_> {
    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }

    fn gram(&self) -> Vec<f64> {
        let k = self.n_cols;
        let mut g = vec![0.0; k * k];
        for a in 0..k {
            for b in a..k {
                let v = dot(self.col(a), self.col(b));
                g[a * k + b] = v;
                g[b * k + a] = v;
            }
        }
        g
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// `0.5 * ||x - D a||^2 + kappa * Omega(a)`, evaluated through the residual.
pub(crate) fn objective(d: DictView<'_>, x: &[f64], coefs: &[f64], kappa: f64, reg: &Regularizer) -> f64 {
    let mut r = x.to_vec();
    for (j, &a) in coefs.iter().enumerate() {
        if a != 0.0 {
            for (ri, di) in r.iter_mut().zip(d.col(j)) {
                *ri -= a * di;
            }
        }
    }
    0.5 * dot(&r, &r) + kappa * reg.penalty(coefs)
}

pub(crate) fn solve(d: DictView<'_>, x: &[f64], kappa: f64, reg: &Regularizer, init: Option<&[f64]>) -> SparseCode {
    let k = d.n_cols;
    let gram = d.gram();
    let corr: Vec<f64> = (0..k).map(|j| dot(d.col(j), x)).collect();
    let mut a = init.map_or_else(|| vec![0.0; k], <[f64]>::to_vec);

    match reg {
        Regularizer::L1 => {
            for _ in 0..MAX_SWEEPS {
                let mut max_step = 0.0f64;
                let mut scale = 1.0f64;
                for j in 0..k {
                    let gjj = gram[j * k + j];
                    let new = if gjj > 0.0 {
                        let row = &gram[j * k..(j + 1) * k];
                        let partial = corr[j] - dot(row, &a) + gjj * a[j];
                        soft_threshold(partial, kappa) / gjj
                    } else {
                        0.0
                    };
                    max_step = max_step.max((new - a[j]).abs());
                    scale = scale.max(new.abs());
                    a[j] = new;
                }
                if max_step <= STEP_TOL * scale {
                    break;
                }
            }
        }
        Regularizer::GroupL2(groups) => {
            // Step size per block from the largest eigenvalue of its Gram block.
            let lipschitz: Vec<f64> = groups
                .iter()
                .map(|g| {
                    let block = DMatrix::from_fn(g.len(), g.len(), |r, c| gram[g[r] * k + g[c]]);
                    block.symmetric_eigenvalues().max()
                })
                .collect();
            for _ in 0..MAX_SWEEPS {
                let mut max_step = 0.0f64;
                let mut scale = 1.0f64;
                for (g, &lip) in groups.iter().zip(&lipschitz) {
                    if lip <= 0.0 {
                        g.iter().for_each(|&i| a[i] = 0.0);
                        continue;
                    }
                    let v: Vec<f64> = g
                        .iter()
                        .map(|&i| {
                            let grad = dot(&gram[i * k..(i + 1) * k], &a) - corr[i];
                            a[i] - grad / lip
                        })
                        .collect();
                    let norm = dot(&v, &v).sqrt();
                    let shrink = if norm > 0.0 {
                        (1.0 - kappa / (lip * norm)).max(0.0)
                    } else {
                        0.0
                    };
                    for (&i, vi) in g.iter().zip(v) {
                        let new = vi * shrink;
                        max_step = max_step.max((new - a[i]).abs());
                        scale = scale.max(new.abs());
                        a[i] = new;
                    }
                }
                if max_step <= STEP_TOL * scale {
                    break;
                }
            }
        }
    }

    let objective = objective(d, x, &a, kappa, reg);
    SparseCode {
        coefficients: a,
        objective,
    }
}

/// Sparse code of `x` over the columns of `dict`, started from zero.
pub fn sparse_code(x: &[f64], dict: &TopicDictionary, kappa: f64, reg: &Regularizer) -> Result<SparseCode> {
    if !(kappa > 0.0) {
        return Err(Error::config("kappa must be positive"));
    }
    if x.len() != dict.n_words() {
        return Err(Error::config(format!(
            "signal has length {} but dictionary atoms have length {}",
            x.len(),
            dict.n_words()
        )));
    }
    reg.validate(dict.n_topics())?;
    let view = DictView {
        n_rows: dict.n_words(),
        n_cols: dict.n_topics(),
        data: dict.weights(),
    };
    Ok(solve(view, x, kappa, reg, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topics::ModelTag;

    fn orthonormal() -> TopicDictionary {
        let s = 1.0 / 2f64.sqrt();
        TopicDictionary::from_columns(
            &[vec![s, s, 0.0], vec![s, -s, 0.0], vec![0.0, 0.0, 1.0]],
            ModelTag::Dictlearn,
        )
        .unwrap()
    }

    #[test]
    fn orthonormal_l1_is_soft_threshold() {
        let d = orthonormal();
        let x = [1.0, 0.2, -0.7];
        let kappa = 0.3;
        let code = sparse_code(&x, &d, kappa, &Regularizer::L1).unwrap();
        for (j, col) in d.columns().enumerate() {
            let expect = soft_threshold(dot(col, &x), kappa);
            assert!((code.coefficients[j] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn large_kappa_gives_zero() {
        let d = orthonormal();
        let x = [1.0, 0.2, -0.7];
        let max_corr = d.columns().map(|c| dot(c, &x).abs()).fold(0.0, f64::max);
        for reg in [Regularizer::L1, Regularizer::contiguous_groups(3, 1)] {
            let code = sparse_code(&x, &d, max_corr, &reg).unwrap();
            assert!(code.coefficients.iter().all(|&a| a == 0.0));
            assert!((code.objective - 0.5 * dot(&x, &x)).abs() < 1e-15);
        }
    }

    #[test]
    fn orthonormal_group_is_group_soft_threshold() {
        let d = orthonormal();
        let x = [1.0, 0.2, -0.7];
        let kappa = 0.25;
        let reg = Regularizer::GroupL2(vec![vec![0, 1], vec![2]]);
        let code = sparse_code(&x, &d, kappa, &reg).unwrap();
        let c: Vec<f64> = d.columns().map(|col| dot(col, &x)).collect();
        let n01 = (c[0] * c[0] + c[1] * c[1]).sqrt();
        let expect = [c[0] * (1.0 - kappa / n01), c[1] * (1.0 - kappa / n01), soft_threshold(c[2], kappa)];
        for (a, e) in code.coefficients.iter().zip(expect) {
            assert!((a - e).abs() < 1e-10, "{a} vs {e}");
        }
    }

    #[test]
    fn rejects_bad_partition_and_kappa() {
        let d = orthonormal();
        let x = [1.0, 0.0, 0.0];
        assert!(sparse_code(&x, &d, 0.0, &Regularizer::L1).is_err());
        let bad = Regularizer::GroupL2(vec![vec![0, 1], vec![1, 2]]);
        assert!(sparse_code(&x, &d, 0.1, &bad).is_err());
    }

    #[test]
    fn contiguous_groups_cover() {
        assert_eq!(
            Regularizer::contiguous_groups(5, 2),
            Regularizer::GroupL2(vec![vec![0, 1], vec![2, 3], vec![4]])
        );
    }
}
