//! Acceptance run: one PASS/FAIL line per criterion. Criterion 4 is reported
//! but does not affect the exit status.

mod common;

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use common::Penalty;
use wordpuzzle::consistency::{bottleneck_score, max_spanning_tree, score_words, WeightedGraph};
use wordpuzzle::corpus::{Corpus, DocTermMatrix};
use wordpuzzle::esa::{EsaIndex, SimilarityProvider};
use wordpuzzle::eval::{delta_grid, eval_yield, YieldCurve};
use wordpuzzle::puzzles::{verify_puzzle, PuzzleKind};
use wordpuzzle::synthetic::{planted_corpus, uniform_matrix, PlantedConfig};
use wordpuzzle::topics::{
    document_weights, extract_top_k, lda_fit, lsa_fit, sparse_code, DictLearnConfig, DictLearner, GibbsSampler,
    LdaConfig, LsaConfig, ModelConfig, ModelTag, Regularizer, TopicDictionary, TopicModel,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn graphs() -> Vec<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..1000)
        .map(|_| {
            let n = rng.gen_range(3..=7);
            common::random_weights(n, &mut rng)
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut mismatches = 0;
    for w in graphs() {
        let g = WeightedGraph::from_matrix(&w).unwrap();
        if bottleneck_score(&g).unwrap() != common::bottleneck_oracle(&w) {
            mismatches += 1;
        }
    }
    let took = start.elapsed();
    outcome(
        mismatches == 0 && took < Duration::from_secs(10),
        format!("{mismatches}/1000 mismatches against path enumeration, {:.2?}", took),
    )
}

fn criterion_2() -> Outcome {
    let mut mismatches = 0;
    for w in graphs() {
        let g = WeightedGraph::from_matrix(&w).unwrap();
        if max_spanning_tree(&g).unwrap().min_weight() != common::bottleneck_oracle(&w) {
            mismatches += 1;
        }
    }
    let k4 = vec![
        vec![1.0, 0.9, 0.2, 0.3],
        vec![0.9, 1.0, 0.8, 0.1],
        vec![0.2, 0.8, 1.0, 0.7],
        vec![0.3, 0.1, 0.7, 1.0],
    ];
    let g = WeightedGraph::from_matrix(&k4).unwrap();
    let tree = max_spanning_tree(&g).unwrap();
    let mut edges: Vec<(usize, usize)> = tree.edges.iter().map(|e| (e.0, e.1)).collect();
    edges.sort();
    let total = |t: &Vec<(usize, usize)>| t.iter().map(|&(a, b)| k4[a][b]).sum::<f64>();
    let brute_best = common::all_spanning_trees(4)
        .into_iter()
        .max_by(|a, b| total(a).partial_cmp(&total(b)).unwrap())
        .unwrap();
    let score = bottleneck_score(&g).unwrap();
    let k4_ok = edges == brute_best && edges == [(0, 1), (1, 2), (2, 3)] && (tree.total_weight() - 2.4).abs() < 1e-12 && score == 0.7;
    outcome(
        mismatches == 0 && k4_ok,
        format!("{mismatches}/1000 tree minima differ from widest-path bottleneck; K4 tree {edges:?} score {score}"),
    )
}

fn concept_corpus(seed: u64) -> SimilarityProvider {
    let cfg = PlantedConfig { leak_rate: 0.02, seed: seed + 1_000, ..PlantedConfig::default() };
    SimilarityProvider::new(common::esa(&planted_corpus(&cfg).docs))
}

fn fit_models(corpus: &Corpus, seed: u64, tags: &[ModelTag]) -> Vec<(String, TopicModel)> {
    tags.iter()
        .map(|&tag| {
            let config = match tag {
                ModelTag::Lsa => ModelConfig::Lsa(LsaConfig::new(8, seed)),
                ModelTag::Lda => ModelConfig::Lda(LdaConfig::new(8, seed)),
                ModelTag::Dictlearn => ModelConfig::Dictlearn(DictLearnConfig::new(8, seed)),
            };
            let model = TopicModel::fit(&corpus.matrix, corpus.vocab.words(), &config).unwrap();
            (tag.name().to_string(), model)
        })
        .collect()
}

fn curve(models: &[(String, TopicModel)], sim: &SimilarityProvider, deltas: &[f64]) -> wordpuzzle::Result<YieldCurve> {
    let refs: Vec<(String, &TopicModel)> = models.iter().map(|(l, m)| (l.clone(), m)).collect();
    eval_yield(&refs, 4, sim, deltas)
}

fn criterion_3() -> Outcome {
    let grid = delta_grid(0.0, 0.5, 0.05);
    let corpora = [
        ("planted", PlantedConfig::default()),
        ("leaky", PlantedConfig { leak_rate: 0.02, ..PlantedConfig::default() }),
        ("background", PlantedConfig { background_words: 40, background_rate: 0.15, ..PlantedConfig::default() }),
    ];
    let sim = concept_corpus(0);
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, cfg) in corpora {
        let corpus = common::ingest(&planted_corpus(&cfg).docs);
        let models = fit_models(&corpus, 0, &[ModelTag::Lsa, ModelTag::Lda, ModelTag::Dictlearn]);
        match curve(&models, &sim, &grid) {
            Ok(c) => {
                pass &= c.is_monotone();
                let first_last: Vec<String> = c
                    .counts
                    .iter()
                    .map(|(l, v)| format!("{l} {}->{}", v[0], v[v.len() - 1]))
                    .collect();
                detail.push(format!("{name}: {}", first_last.join(", ")));
            }
            Err(e) => {
                pass = false;
                detail.push(format!("{name}: {e}"));
            }
        }
    }
    outcome(pass, detail.join("; "))
}

fn criterion_4() -> (Outcome, String) {
    let start = Instant::now();
    let mut wins = 0;
    let mut table = String::from("seed,lda@0.1,lsa@0.1\n");
    let mut curves = String::new();
    for seed in 0..10 {
        let corpus = common::ingest(&planted_corpus(&PlantedConfig { seed, ..PlantedConfig::default() }).docs);
        let sim = concept_corpus(seed);
        let models = fit_models(&corpus, seed, &[ModelTag::Lda, ModelTag::Lsa]);
        let c = curve(&models, &sim, &delta_grid(0.0, 0.5, 0.05)).unwrap();
        let at = c.deltas.iter().position(|d| (d - 0.1).abs() < 1e-12).unwrap();
        let (lda, lsa) = (c.count("lda", at).unwrap(), c.count("lsa", at).unwrap());
        if lda >= lsa {
            wins += 1;
        }
        table.push_str(&format!("{seed},{lda},{lsa}\n"));
        curves.push_str(&format!("seed {seed}\n{}", c.to_csv()));
    }
    let took = start.elapsed();
    let pass = wins >= 8 && took < Duration::from_secs(300);
    let attach = if pass { table } else { format!("{table}{curves}") };
    (outcome(pass, format!("LDA >= LSA at delta 0.1 in {wins}/10 seeds, {:.1?}", took)), attach)
}

fn rows(x: &DocTermMatrix) -> Vec<Vec<f64>> {
    let mut r = vec![vec![0.0; x.n_cols()]; x.n_rows()];
    for (i, j, v) in x.triplets() {
        r[i][j] = v;
    }
    r
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let (mut worst_sv, mut ey_violations) = (0.0f64, 0);
    for m in 0..50 {
        let x = uniform_matrix(20, 30, 500 + m);
        let fit = lsa_fit(&x, &LsaConfig::new(5, m)).unwrap();
        let xr = rows(&x);
        let oracle = common::jacobi_singular_values(&xr);
        for (a, b) in fit.singular_values.iter().zip(&oracle) {
            worst_sv = worst_sv.max((a - b).abs());
        }
        let cols: Vec<Vec<f64>> = fit.dictionary.columns().map(<[f64]>::to_vec).collect();
        let ours = common::projection_residual(&xr, &cols);
        for _ in 0..100 {
            let q = common::random_orthonormal(20, 5, &mut rng);
            if ours > common::projection_residual(&xr, &q) + 1e-6 {
                ey_violations += 1;
            }
        }
    }
    outcome(
        worst_sv < 1e-8 && ey_violations == 0,
        format!("max singular value error {worst_sv:.2e}; {ey_violations}/5000 projectors beat the LSA subspace"),
    )
}

fn criterion_6() -> Outcome {
    let planted = planted_corpus(&PlantedConfig::default());
    let corpus = common::ingest(&planted.docs);
    let x = &corpus.matrix;
    let cfg = LdaConfig::new(8, 0);
    let row_totals: Vec<u32> = (0..x.n_rows())
        .map(|i| (0..x.n_cols()).map(|j| x.get(i, j)).sum::<f64>() as u32)
        .collect();
    let mut sampler = GibbsSampler::new(x, &cfg).unwrap();
    let mut broken = 0;
    for _ in 0..cfg.iterations {
        sampler.sweep();
        let words_ok = row_totals
            .iter()
            .enumerate()
            .all(|(w, &t)| (0..8).map(|z| sampler.word_topic_count(w, z)).sum::<u32>() == t);
        let topics_ok = (0..8).all(|z| (0..x.n_rows()).map(|w| sampler.word_topic_count(w, z)).sum::<u32>() == sampler.topic_count(z));
        if !(words_ok && topics_ok) {
            broken += 1;
        }
    }
    let a = lda_fit(x, &cfg).unwrap();
    let b = lda_fit(x, &cfg).unwrap();
    let identical = a.weights().iter().zip(b.weights()).all(|(p, q)| p.to_bits() == q.to_bits());
    let learned: Vec<Vec<String>> = extract_top_k(&a, 4)
        .unwrap()
        .iter()
        .map(|s| s.words.iter().map(|&w| corpus.vocab.word(w).to_string()).collect())
        .collect();
    let matched = common::matched_topics(&planted.top_words(4), &learned, 3);
    outcome(
        broken == 0 && identical && matched >= 6,
        format!("{broken} sweeps broke conservation; bit-identical rerun {identical}; {matched}/8 planted topics recovered"),
    )
}

fn normalized_columns<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..k)
        .map(|_| {
            let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}

fn batch_objective(learner: &DictLearner, docs: &[Vec<f64>], cfg: &DictLearnConfig) -> f64 {
    let d = learner.dictionary();
    let w = document_weights(docs.len(), cfg.rho);
    docs.iter()
        .zip(&w)
        .map(|(x, wi)| wi * sparse_code(x, &d, cfg.kappa, &cfg.regularizer).unwrap().objective)
        .sum()
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut done, mut skipped, mut worst_grid) = (0, 0, 0.0f64);
    while done < 25 {
        let cols = normalized_columns(5, 3, &mut rng);
        let x: Vec<f64> = (0..5).map(|_| rng.sample(StandardNormal)).collect();
        let kappa = rng.gen_range(0.05..0.5);
        let groups = vec![vec![0, 1], vec![2]];
        let (reg, pen) = if done % 2 == 0 {
            (Regularizer::L1, Penalty::L1)
        } else {
            (Regularizer::GroupL2(groups.clone()), Penalty::Groups(groups))
        };
        let (a, oracle) = common::grid_oracle(&cols, &x, kappa, &pen);
        if a.iter().any(|v| v.abs() > 1.95) {
            skipped += 1;
            continue;
        }
        let dict = TopicDictionary::from_columns(&cols, ModelTag::Dictlearn).unwrap();
        let ours = sparse_code(&x, &dict, kappa, &reg).unwrap().objective;
        worst_grid = worst_grid.max((ours - oracle).abs());
        done += 1;
    }

    let mut worst_closed = 0.0f64;
    for _ in 0..25 {
        let q = common::random_orthonormal(8, 4, &mut rng);
        let dict = TopicDictionary::from_columns(&q, ModelTag::Dictlearn).unwrap();
        let x: Vec<f64> = (0..8).map(|_| rng.sample(StandardNormal)).collect();
        let kappa = rng.gen_range(0.05..1.0);
        let c: Vec<f64> = q.iter().map(|d| d.iter().zip(&x).map(|(a, b)| a * b).sum()).collect();
        let lasso = sparse_code(&x, &dict, kappa, &Regularizer::L1).unwrap().coefficients;
        for (a, ci) in lasso.iter().zip(&c) {
            worst_closed = worst_closed.max((a - ci.signum() * (ci.abs() - kappa).max(0.0)).abs());
        }
        let groups = vec![vec![0, 1], vec![2, 3]];
        let group = sparse_code(&x, &dict, kappa, &Regularizer::GroupL2(groups.clone())).unwrap().coefficients;
        for g in &groups {
            let norm = g.iter().map(|&i| c[i] * c[i]).sum::<f64>().sqrt();
            let shrink = (1.0 - kappa / norm).max(0.0);
            for &i in g {
                worst_closed = worst_closed.max((group[i] - shrink * c[i]).abs());
            }
        }
    }

    let planted = planted_corpus(&PlantedConfig { docs: 50, seed: 50, ..PlantedConfig::default() });
    let x = common::ingest(&planted.docs).matrix;
    let docs: Vec<Vec<f64>> = (0..x.n_cols()).map(|j| x.dense_column(j)).collect();
    let mut worst_rise = f64::NEG_INFINITY;
    for reg in [Regularizer::L1, Regularizer::contiguous_groups(8, 2)] {
        let mut cfg = DictLearnConfig::new(8, 50);
        cfg.regularizer = reg;
        let mut learner = DictLearner::new(&x, &cfg).unwrap();
        let mut prev = batch_objective(&learner, &docs, &cfg);
        for _ in 0..10 {
            learner.run_epoch();
            let now = batch_objective(&learner, &docs, &cfg);
            worst_rise = worst_rise.max(now - prev);
            prev = now;
        }
    }
    outcome(
        worst_grid < 1e-4 && worst_closed < 1e-10 && worst_rise <= 1e-9,
        format!(
            "grid gap {worst_grid:.2e} over 25 instances ({skipped} redrawn, optimum outside the grid box); \
             closed-form error {worst_closed:.2e}; largest per-epoch objective change {worst_rise:.2e}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut failures = Vec::new();
    let mut counts: HashMap<(String, PuzzleKind), usize> = HashMap::new();
    let mut total = 0;
    for seed in 0..3 {
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let run = common::run_pipeline(seed, d1.path());
        let again = common::run_pipeline(seed, d2.path());
        if run.bank_bytes != again.bank_bytes {
            failures.push(format!("seed {seed}: banks differ between runs"));
        }
        let by_id: HashMap<usize, _> = run.sets.iter().map(|s| (s.topic, s.clone())).collect();
        for s in &run.sets {
            if score_words(&s.words, &run.sim).unwrap() <= s.delta {
                failures.push(format!("seed {seed}: set {} no longer scores above delta", s.topic));
            }
        }
        for (band, bank) in &run.banks {
            for p in &bank.puzzles {
                total += 1;
                *counts.entry((band.name.clone().unwrap_or_default(), p.kind)).or_default() += 1;
                if let Err(e) = verify_puzzle(p, &by_id, &run.sim) {
                    failures.push(format!("seed {seed}: {e}"));
                }
                if !common::round_trips(p) {
                    failures.push(format!("seed {seed}: solution does not round-trip"));
                }
            }
        }
    }
    let mut summary: Vec<String> = counts.iter().map(|((b, k), n)| format!("{b}/{} {n}", k.name())).collect();
    summary.sort();
    outcome(
        failures.is_empty() && total > 0,
        format!("{total} puzzles over 3 seeds ({}) {}", summary.join(", "), failures.join("; ")),
    )
}

fn criterion_9() -> Outcome {
    let cfg = PlantedConfig {
        background_words: 40,
        background_rate: 0.1,
        leak_rate: 0.02,
        seed: 9,
        ..PlantedConfig::default()
    };
    let sim = SimilarityProvider::new(common::esa(&planted_corpus(&cfg).docs));
    let words = sim.index().words().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut asym, mut out_of_range) = (0, 0);
    for _ in 0..10_000 {
        let a = &words[rng.gen_range(0..words.len())];
        let b = &words[rng.gen_range(0..words.len())];
        let ab = sim.relatedness(a, b).value;
        if ab.to_bits() != sim.relatedness(b, a).value.to_bits() {
            asym += 1;
        }
        if !(0.0..=1.0).contains(&ab) {
            out_of_range += 1;
        }
    }
    let nonzero = sim.index().nonzero_words();
    let not_self = nonzero.iter().filter(|w| sim.relatedness(w, w).value != 1.0).count();
    let hand = EsaIndex::from_vectors(2, vec![("u".into(), vec![(0, 1.0)]), ("v".into(), vec![(0, 1.0), (1, 1.0)])])
        .unwrap();
    let h = SimilarityProvider::new(hand).relatedness("u", "v").value;
    outcome(
        asym == 0 && out_of_range == 0 && not_self == 0 && (h - 1.0 / 2f64.sqrt()).abs() < 1e-9,
        format!(
            "{asym} asymmetric, {out_of_range} out of [0,1] in 10000 pairs; {not_self}/{} self-similarities != 1; hand case {h:.10}",
            nonzero.len()
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut failed = Vec::new();
    let mut run = |n: u32, gating: bool, f: &dyn Fn() -> (Outcome, String)| {
        let t = Instant::now();
        let (o, attachment) = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        let note = if gating || o.pass { "" } else { " (report only)" };
        println!("criterion {n}: {verdict}{note} [{:.1?}] - {}", t.elapsed(), o.detail);
        for line in attachment.lines() {
            println!("    {line}");
        }
        if gating && !o.pass {
            failed.push(n);
        }
    };
    let plain = |f: fn() -> Outcome| move || (f(), String::new());
    run(1, true, &plain(criterion_1));
    run(2, true, &plain(criterion_2));
    run(3, true, &plain(criterion_3));
    run(4, false, &criterion_4);
    run(5, true, &plain(criterion_5));
    run(6, true, &plain(criterion_6));
    run(7, true, &plain(criterion_7));
    run(8, true, &plain(criterion_8));
    run(9, true, &plain(criterion_9));
    println!("acceptance finished in {:.1?}", start.elapsed());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
