//! Consistent-set yield as a function of the threshold.

use std::fmt::Write as _;

use crate::consistency::{score_word_sets, ScoredSet};
use crate::error::{Error, Result};
use crate::esa::Similarity;
use crate::topics::{extract_top_k, TopicModel};

/// Consistent-set counts over a threshold grid, one row per model.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldCurve {
    pub deltas: Vec<f64>,
    /// `(model label, count at each delta)`.
    pub counts: Vec<(String, Vec<usize>)>,
}

impl YieldCurve {
    pub fn count(&self, label: &str, delta_index: usize) -> Option<usize> {
        self.counts
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, c)| c[delta_index])
    }

    /// True when every model's counts are non-increasing along the grid.
    pub fn is_monotone(&self) -> bool {
        self.counts.iter().all(|(_, c)| c.windows(2).all(|w| w[0] >= w[1]))
    }

    /// One row per delta, one column per model.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# a set counts at delta when its bottleneck score is strictly greater than delta\n");
        out.push_str("delta");
        for (label, _) in &self.counts {
            let _ = write!(out, ",{label}");
        }
        out.push('\n');
        for (i, d) in self.deltas.iter().enumerate() {
            let _ = write!(out, "{d}");
            for (_, c) in &self.counts {
                let _ = write!(out, ",{}", c[i]);
            }
            out.push('\n');
        }
        out
    }
}

/// `start, start + step, ...` up to and including `stop` (within 1e-9).
pub fn delta_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

fn check_grid(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() {
        return Err(Error::config("delta grid is empty"));
    }
    if deltas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("delta grid must be strictly increasing"));
    }
    if deltas.iter().any(|d| !(0.0..1.0).contains(d)) {
        return Err(Error::config("every delta must lie in [0, 1)"));
    }
    Ok(())
}

/// Counts, for each delta, the scored sets whose score exceeds it.
pub fn yield_counts(scored: &[ScoredSet], deltas: &[f64]) -> Vec<usize> {
    deltas
        .iter()
        .map(|&d| scored.iter().filter(|s| s.score > d).count())
        .collect()
}

/// Scores the top-`k` sets of each model once and tabulates yields.
pub fn eval_yield<S: Similarity + ?Sized>(
    models: &[(String, &TopicModel)],
    k: usize,
    sim: &S,
    deltas: &[f64],
) -> Result<YieldCurve> {
    check_grid(deltas)?;
    let mut counts = Vec::with_capacity(models.len());
    for (label, model) in models {
        let sets = extract_top_k(&model.dictionary, k)?;
        let scored = score_word_sets(&sets, &model.vocab, sim)?;
        counts.push((label.clone(), yield_counts(&scored, deltas)));
    }
    let curve = YieldCurve {
        deltas: deltas.to_vec(),
        counts,
    };
    if !curve.is_monotone() {
        return Err(Error::Invariant("yield curve increases with delta".into()));
    }
    Ok(curve)
}
