//! Consistency of candidate word sets.
//!
//! The relatedness of two words in a set is the widest-path value between them
//! in the complete graph weighted by pairwise similarity: the best, over all
//! paths, of the weakest edge on the path. A set is scored by its least
//! related pair. Because the widest path between any two nodes runs along the
//! maximum spanning tree, that score is simply the lightest edge of the tree.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::esa::{submatrix, Similarity};
use crate::persist;
use crate::topics::TopicWordSet;

/// Default acceptance threshold.
pub const DEFAULT_DELTA: f64 = 0.1;

/// Largest graph [`widest_path_sim`] will enumerate paths on.
pub const MAX_ENUMERATION_NODES: usize = 10;

/// Complete graph with symmetric weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    weights: Vec<f64>,
}

impl WeightedGraph {
    /// Builds the graph from a square symmetric matrix; the diagonal is ignored.
    pub fn from_matrix(m: &[Vec<f64>]) -> Result<Self> {
        let n = m.len();
        let mut weights = vec![0.0; n * n];
        for (i, row) in m.iter().enumerate() {
            if row.len() != n {
                return Err(Error::config("similarity matrix is not square"));
            }
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = row[j];
                if !(0.0..=1.0).contains(&w) || w != m[j][i] {
                    return Err(Error::config(format!(
                        "edge ({i}, {j}) has weight {w}; weights must be symmetric and within [0, 1]"
                    )));
                }
                weights[i * n + j] = w;
            }
        }
        Ok(WeightedGraph { n, weights })
    }

    /// Builds the graph from the upper triangle, `weight(i, j)` for `i < j`.
    pub fn from_fn(n: usize, mut weight: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let w = weight(i, j);
                m[i][j] = w;
                m[j][i] = w;
            }
        }
        Self::from_matrix(&m)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    fn require_edges(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::GraphTooSmall(self.n));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    /// `(u, v, weight)` with `u < v`, in the order Kruskal accepted them.
    pub edges: Vec<(usize, usize, f64)>,
}

impl SpanningTree {
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    pub fn min_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).fold(f64::INFINITY, f64::min)
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Kruskal on descending weights. Equal weights prefer the lexicographically
/// smaller `(u, v)` pair.
pub fn max_spanning_tree(g: &WeightedGraph) -> Result<SpanningTree> {
    g.require_edges()?;
    let n = g.n;
    let mut edges: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .map(|(u, v)| (u, v, g.weight(u, v)))
        .collect();
    edges.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));

    let mut parent: Vec<usize> = (0..n).collect();
    let mut tree = Vec::with_capacity(n - 1);
    for (u, v, w) in edges {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
            tree.push((u, v, w));
            if tree.len() == n - 1 {
                break;
            }
        }
    }
    Ok(SpanningTree { edges: tree })
}

/// Similarity of the two least related nodes: the lightest edge of the
/// maximum spanning tree.
pub fn bottleneck_score(g: &WeightedGraph) -> Result<f64> {
    Ok(max_spanning_tree(g)?.min_weight())
}

/// Exact widest-path value between `i` and `j` by enumerating every simple
/// path. Exponential; limited to [`MAX_ENUMERATION_NODES`] nodes.
pub fn widest_path_sim(g: &WeightedGraph, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::config("widest path needs two distinct nodes"));
    }
    if i >= g.n || j >= g.n {
        return Err(Error::config(format!("node out of range for a {}-node graph", g.n)));
    }
    if g.n > MAX_ENUMERATION_NODES {
        return Err(Error::config(format!(
            "path enumeration is limited to {MAX_ENUMERATION_NODES} nodes"
        )));
    }

    fn walk(g: &WeightedGraph, at: usize, target: usize, width: f64, visited: &mut [bool], best: &mut f64) {
        if at == target {
            *best = best.max(width);
            return;
        }
        for next in 0..g.n {
            if !visited[next] {
                visited[next] = true;
                walk(g, next, target, width.min(g.weight(at, next)), visited, best);
                visited[next] = false;
            }
        }
    }

    let mut visited = vec![false; g.n];
    visited[i] = true;
    let mut best = f64::NEG_INFINITY;
    walk(g, i, j, f64::INFINITY, &mut visited, &mut best);
    Ok(best)
}

/// Minimum over all node pairs of [`widest_path_sim`].
pub fn brute_force_bottleneck(g: &WeightedGraph) -> Result<f64> {
    g.require_edges()?;
    let mut worst = f64::INFINITY;
    for i in 0..g.n {
        for j in i + 1..g.n {
            worst = worst.min(widest_path_sim(g, i, j)?);
        }
    }
    Ok(worst)
}

/// A candidate word set together with its consistency score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSet {
    pub topic: usize,
    pub words: Vec<String>,
    pub score: f64,
}

/// A word set whose score exceeded the threshold `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistentSet {
    pub topic: usize,
    pub words: Vec<String>,
    pub score: f64,
    pub delta: f64,
}

/// Bottleneck score of an arbitrary word list under `sim`.
pub fn score_words<S: Similarity + ?Sized>(words: &[String], sim: &S) -> Result<f64> {
    bottleneck_score(&WeightedGraph::from_matrix(&submatrix(sim, words))?)
}

/// Scores every candidate set, in input order. `vocab` names the word indices.
pub fn score_word_sets<S: Similarity + ?Sized>(
    sets: &[TopicWordSet],
    vocab: &[String],
    sim: &S,
) -> Result<Vec<ScoredSet>> {
    sets.par_iter()
        .map(|set| {
            let words: Vec<String> = set
                .words
                .iter()
                .map(|&i| {
                    vocab
                        .get(i)
                        .cloned()
                        .ok_or_else(|| Error::config(format!("word index {i} outside the vocabulary")))
                })
                .collect::<Result<_>>()?;
            let score = score_words(&words, sim)?;
            Ok(ScoredSet {
                topic: set.topic,
                words,
                score,
            })
        })
        .collect()
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::config(format!("delta = {delta} must lie in [0, 1)")));
    }
    Ok(())
}

/// Keeps the scored sets with score strictly above `delta`.
pub fn filter_consistent(scored: &[ScoredSet], delta: f64) -> Result<Vec<ConsistentSet>> {
    check_delta(delta)?;
    Ok(scored
        .iter()
        .filter(|s| s.score > delta)
        .map(|s| ConsistentSet {
            topic: s.topic,
            words: s.words.clone(),
            score: s.score,
            delta,
        })
        .collect())
}

/// Scores each candidate set and keeps those whose score is strictly greater
/// than `delta`, preserving topic order.
pub fn identify_consistent_sets<S: Similarity + ?Sized>(
    sets: &[TopicWordSet],
    vocab: &[String],
    sim: &S,
    delta: f64,
) -> Result<Vec<ConsistentSet>> {
    check_delta(delta)?;
    filter_consistent(&score_word_sets(sets, vocab, sim)?, delta)
}

pub fn write_consistent_sets(path: &Path, sets: &[ConsistentSet]) -> Result<()> {
    persist::write_jsonl(path, sets)
}

pub fn read_consistent_sets(path: &Path) -> Result<Vec<ConsistentSet>> {
    persist::read_jsonl(path)
}
