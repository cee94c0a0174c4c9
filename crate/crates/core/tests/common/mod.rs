//! Reference implementations the library is checked against. Kept naive on
//! purpose: no code is shared with the crate under test.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use wordpuzzle::corpus::{Corpus, Document, TokenizerConfig};
use wordpuzzle::esa::{build_esa_index, EsaConfig, EsaIndex};

/// Singular values of a row-major matrix, descending, by one-sided Jacobi
/// rotations on the columns of its transpose.
pub fn jacobi_singular_values(a: &[Vec<f64>]) -> Vec<f64> {
    let (m, n) = (a.len(), a[0].len());
    // Columns of a^T are the rows of a: m columns of length n.
    let mut cols: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..m {
            for q in p + 1..m {
                let alpha: f64 = cols[p].iter().map(|v| v * v).sum();
                let beta: f64 = cols[q].iter().map(|v| v * v).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let (x, y) = (cols[p][k], cols[q][k]);
                    cols[p][k] = c * x - s * y;
                    cols[q][k] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// `k` orthonormal columns of length `n` by twice-applied Gram-Schmidt.
pub fn random_orthonormal<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
    while q.len() < k {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for u in &q {
                let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= d * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            q.push(v);
        }
    }
    q
}

/// `||X - Q Q^T X||_F` for row-major X and orthonormal columns Q.
pub fn projection_residual(x: &[Vec<f64>], q: &[Vec<f64>]) -> f64 {
    let (n, m) = (x.len(), x[0].len());
    let mut total = 0.0;
    for j in 0..m {
        let col: Vec<f64> = (0..n).map(|i| x[i][j]).collect();
        let mut r = col.clone();
        for u in q {
            let d: f64 = u.iter().zip(&col).map(|(a, b)| a * b).sum();
            r.iter_mut().zip(u).for_each(|(v, w)| *v -= d * w);
        }
        total += r.iter().map(|v| v * v).sum::<f64>();
    }
    total.sqrt()
}

/// Widest path between `i` and `j` by enumerating every simple path.
pub fn widest_path_oracle(w: &[Vec<f64>], i: usize, j: usize) -> f64 {
    fn dfs(w: &[Vec<f64>], at: usize, target: usize, seen: &mut Vec<bool>, width: f64, best: &mut f64) {
        if at == target {
            *best = best.max(width);
            return;
        }
        for next in 0..w.len() {
            if !seen[next] {
                seen[next] = true;
                dfs(w, next, target, seen, width.min(w[at][next]), best);
                seen[next] = false;
            }
        }
    }
    let mut seen = vec![false; w.len()];
    seen[i] = true;
    let mut best = f64::NEG_INFINITY;
    dfs(w, i, j, &mut seen, f64::INFINITY, &mut best);
    best
}

/// Minimum over distinct pairs of the widest-path similarity.
pub fn bottleneck_oracle(w: &[Vec<f64>]) -> f64 {
    let n = w.len();
    let mut worst = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.min(widest_path_oracle(w, i, j));
        }
    }
    worst
}

/// All spanning trees of the complete graph, as edge lists `(i, j)` with i < j.
pub fn all_spanning_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut trees = Vec::new();
    for mask in 0u32..(1 << edges.len()) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let mut comp: Vec<usize> = (0..n).collect();
        let mut acyclic = true;
        for (e, &(a, b)) in edges.iter().enumerate() {
            if mask & (1 << e) == 0 {
                continue;
            }
            let (ca, cb) = (comp[a], comp[b]);
            if ca == cb {
                acyclic = false;
                break;
            }
            comp.iter_mut().filter(|c| **c == cb).for_each(|c| *c = ca);
        }
        if acyclic {
            trees.push(edges.iter().enumerate().filter(|(e, _)| mask & (1 << e) != 0).map(|(_, &p)| p).collect());
        }
    }
    trees
}

pub fn random_weights<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut w = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = rng.gen();
            w[i][j] = v;
            w[j][i] = v;
        }
    }
    w
}

pub enum Penalty {
    L1,
    Groups(Vec<Vec<usize>>),
}

impl Penalty {
    pub fn value(&self, a: &[f64]) -> f64 {
        match self {
            Penalty::L1 => a.iter().map(|v| v.abs()).sum(),
            Penalty::Groups(gs) => gs
                .iter()
                .map(|g| g.iter().map(|&i| a[i] * a[i]).sum::<f64>().sqrt())
                .sum(),
        }
    }
}

/// `0.5 ||x - D a||^2 + kappa * penalty(a)` with D given by columns.
pub fn lasso_objective(d: &[Vec<f64>], x: &[f64], a: &[f64], kappa: f64, pen: &Penalty) -> f64 {
    let mut r = x.to_vec();
    for (col, &c) in d.iter().zip(a) {
        r.iter_mut().zip(col).for_each(|(v, w)| *v -= c * w);
    }
    0.5 * r.iter().map(|v| v * v).sum::<f64>() + kappa * pen.value(a)
}

/// Minimizes the three-coefficient objective over the grid `[-2, 2]^3` with
/// step 0.01, then refines the best grid point by compass search over all 26
/// neighbour directions. Returns `(minimizer, value)`.
pub fn grid_oracle(d: &[Vec<f64>], x: &[f64], kappa: f64, pen: &Penalty) -> (Vec<f64>, f64) {
    assert_eq!(d.len(), 3);
    let grid: Vec<f64> = (0..=400).map(|i| -2.0 + i as f64 * 0.01).collect();
    let f = |a: &[f64]| lasso_objective(d, x, a, kappa, pen);
    // Grid scan on the expanded quadratic 0.5 x'x - c'a + 0.5 a'Ga.
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
    let c: Vec<f64> = d.iter().map(|col| dot(col, x)).collect();
    let g: Vec<Vec<f64>> = d.iter().map(|p| d.iter().map(|q| dot(p, q)).collect()).collect();
    let xx = 0.5 * dot(x, x);
    let (best_a, best_v) = grid
        .par_iter()
        .map(|&a0| {
            let mut best = (vec![0.0; 3], f64::INFINITY);
            for &a1 in &grid {
                for &a2 in &grid {
                    let a = [a0, a1, a2];
                    let quad = 0.5
                        * (g[0][0] * a0 * a0 + g[1][1] * a1 * a1 + g[2][2] * a2 * a2)
                        + g[0][1] * a0 * a1
                        + g[0][2] * a0 * a2
                        + g[1][2] * a1 * a2;
                    let v = xx - (c[0] * a0 + c[1] * a1 + c[2] * a2) + quad + kappa * pen.value(&a);
                    if v < best.1 {
                        best = (a.to_vec(), v);
                    }
                }
            }
            best
        })
        .reduce(|| (vec![0.0; 3], f64::INFINITY), |p, q| if q.1 < p.1 { q } else { p });
    let best_v = f(&best_a).min(best_v);

    let dirs: Vec<[f64; 3]> = (0..27)
        .filter(|&c| c != 13)
        .map(|c| [(c / 9) as f64 - 1.0, ((c / 3) % 3) as f64 - 1.0, (c % 3) as f64 - 1.0])
        .collect();
    let (mut a, mut v, mut h) = (best_a, best_v, 0.01);
    while h > 1e-13 {
        let mut moved = false;
        for dir in &dirs {
            let cand: Vec<f64> = a.iter().zip(dir).map(|(p, q)| p + h * q).collect();
            let cv = f(&cand);
            if cv < v {
                a = cand;
                v = cv;
                moved = true;
            }
        }
        if !moved {
            h /= 2.0;
        }
    }
    (a, v)
}

/// Number of planted topics whose top words share at least `need` words with
/// the top words of some learned topic.
pub fn matched_topics(planted: &[Vec<String>], learned: &[Vec<String>], need: usize) -> usize {
    planted
        .iter()
        .filter(|p| {
            learned
                .iter()
                .any(|l| l.iter().filter(|w| p.contains(w)).count() >= need)
        })
        .count()
}

pub fn ingest(docs: &[Document]) -> Corpus {
    Corpus::ingest(docs, 1, 1.0, &TokenizerConfig::default()).expect("ingest")
}

pub fn esa(docs: &[Document]) -> EsaIndex {
    build_esa_index(docs, &EsaConfig::default()).expect("esa index")
}

pub struct PipelineRun {
    pub sets: Vec<wordpuzzle::consistency::ConsistentSet>,
    /// One bank per band, in the order beginner, intermediate.
    pub banks: Vec<(wordpuzzle::puzzles::DifficultyBand, wordpuzzle::puzzles::PuzzleBank)>,
    pub bank_bytes: Vec<Vec<u8>>,
    pub sim: wordpuzzle::esa::SimilarityProvider,
}

/// Planted corpus with 2% topic leakage, LDA with 8 topics, ESA over a second
/// corpus from the same generator, consistent sets at delta 0.1 and banks for
/// both preset bands.
pub fn run_pipeline(seed: u64, dir: &std::path::Path) -> PipelineRun {
    use wordpuzzle::consistency::identify_consistent_sets;
    use wordpuzzle::esa::SimilarityProvider;
    use wordpuzzle::puzzles::{generate_bank, write_bank, BankConfig, DifficultyBand, GenContext};
    use wordpuzzle::synthetic::{planted_corpus, PlantedConfig};
    use wordpuzzle::topics::{extract_top_k, LdaConfig, ModelConfig, TopicModel};

    let leaky = |s| PlantedConfig { leak_rate: 0.02, seed: s, ..PlantedConfig::default() };
    let corpus = ingest(&planted_corpus(&leaky(seed)).docs);
    let model = TopicModel::fit(
        &corpus.matrix,
        corpus.vocab.words(),
        &ModelConfig::Lda(LdaConfig::new(8, seed)),
    )
    .unwrap();
    let sim = SimilarityProvider::new(esa(&planted_corpus(&leaky(seed + 1_000)).docs));
    let candidates = extract_top_k(&model.dictionary, 4).unwrap();
    let sets = identify_consistent_sets(&candidates, &model.vocab, &sim, 0.1).unwrap();

    let pool: Vec<String> = sim.index().nonzero_words().into_iter().map(String::from).collect();
    let mut banks = Vec::new();
    let mut bank_bytes = Vec::new();
    for band in [DifficultyBand::beginner(), DifficultyBand::intermediate()] {
        let ctx = GenContext::new(&sim, &pool, band.clone());
        let config = BankConfig { master_seed: seed, eta2_cross: band.eta2, ..BankConfig::default() };
        let bank = generate_bank(&ctx, &sets, &config).unwrap();
        let path = dir.join(format!("bank-{}-{seed}.jsonl", band.name.clone().unwrap_or_default()));
        write_bank(&path, &bank.puzzles).unwrap();
        bank_bytes.push(std::fs::read(&path).unwrap());
        banks.push((band, bank));
    }
    PipelineRun { sets, banks, bank_bytes, sim }
}

/// Undoes the presentation order of `p`, renders the canonical puzzle again
/// under its seed and checks the solution survives both directions.
pub fn round_trips(p: &wordpuzzle::puzzles::Puzzle) -> bool {
    use rand::SeedableRng;
    use wordpuzzle::puzzles::{resolve, shuffle_and_render};

    let n = p.words.len();
    let mut canonical = p.clone();
    for (shown, &c) in p.order.iter().enumerate() {
        canonical.words[c] = p.words[shown].clone();
    }
    canonical.solution = resolve(p);
    canonical.order = (0..n).collect();
    let rendered = shuffle_and_render(&canonical, &mut rand_chacha::ChaCha8Rng::seed_from_u64(p.seed));
    resolve(&rendered) == canonical.solution
        && (0..n).all(|i| rendered.words[i] == canonical.words[rendered.order[i]])
}
