//! Puzzle generation from consistent word sets.
//!
//! Every generator mixes a consistent set with words whose relatedness to the
//! set falls inside a difficulty band `(eta1, eta2)`: `eta2` keeps the extra
//! word clearly apart from the set, and raising `eta1` pulls it closer, which
//! makes the puzzle harder.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consistency::{score_words, ConsistentSet};
use crate::error::{Error, Result};
use crate::esa::Similarity;
use crate::persist;

/// Open relatedness interval `(eta1, eta2)` for mixed-in words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyBand {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub eta1: f64,
    pub eta2: f64,
}

impl DifficultyBand {
    pub fn new(eta1: f64, eta2: f64) -> Result<Self> {
        if !(0.0 <= eta1 && eta1 < eta2 && eta2 <= 1.0) {
            return Err(Error::config(format!(
                "difficulty band ({eta1}, {eta2}) must satisfy 0 <= eta1 < eta2 <= 1"
            )));
        }
        Ok(DifficultyBand {
            name: None,
            eta1,
            eta2,
        })
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn beginner() -> Self {
        DifficultyBand::new(0.005, 0.02).unwrap().named("beginner")
    }

    pub fn intermediate() -> Self {
        DifficultyBand::new(0.1, 0.2).unwrap().named("intermediate")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "beginner" => Some(Self::beginner()),
            "intermediate" => Some(Self::intermediate()),
            _ => None,
        }
    }

    pub fn contains(&self, sigma: f64) -> bool {
        self.eta1 < sigma && sigma < self.eta2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PuzzleKind {
    OddOneOut,
    ChooseRelated,
    SeparateTopics,
}

impl PuzzleKind {
    pub const ALL: [PuzzleKind; 3] = [PuzzleKind::OddOneOut, PuzzleKind::ChooseRelated, PuzzleKind::SeparateTopics];

    pub fn name(self) -> &'static str {
        match self {
            PuzzleKind::OddOneOut => "odd-one-out",
            PuzzleKind::ChooseRelated => "choose-related",
            PuzzleKind::SeparateTopics => "separate-topics",
        }
    }

    fn code(self) -> u64 {
        match self {
            PuzzleKind::OddOneOut => 1,
            PuzzleKind::ChooseRelated => 2,
            PuzzleKind::SeparateTopics => 3,
        }
    }
}

impl std::str::FromStr for PuzzleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PuzzleKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown puzzle kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solution {
    /// Position of the word that does not belong.
    OddIndex(usize),
    /// Position of the candidate related to the stem.
    AnswerIndex(usize),
    /// Bit `p` set iff the word at position `p` belongs to the first set.
    Partition(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Puzzle {
    pub kind: PuzzleKind,
    /// The group the answer must relate to (choose-related only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stem: Vec<String>,
    pub words: Vec<String>,
    pub solution: Solution,
    pub band: DifficultyBand,
    /// Odd-one-out: relatedness of the odd word to the set. Choose-related:
    /// the largest distractor relatedness to the stem. Separate-topics: the
    /// largest cross-set relatedness.
    pub sigma: f64,
    /// Topic ids of the source sets.
    pub sources: Vec<usize>,
    pub seed: u64,
    /// `order[p]` is the canonical position of the word shown at position `p`.
    pub order: Vec<usize>,
}

/// What a generator produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Generated(Puzzle),
    /// No acceptable word turned up within the attempt budget.
    Exhausted { attempts: usize },
    /// The inputs cannot form this kind of puzzle.
    Rejected(String),
}

impl Outcome {
    pub fn puzzle(self) -> Option<Puzzle> {
        match self {
            Outcome::Generated(p) => Some(p),
            _ => None,
        }
    }
}

/// `min(5000, ceil(10 * sqrt(vocabulary size)))`, at least 1.
pub fn default_max_attempts(vocab_len: usize) -> usize {
    ((10.0 * (vocab_len as f64).sqrt()).ceil() as usize).clamp(1, 5000)
}

/// Shared inputs of the generators.
pub struct GenContext<'a, S: Similarity + ?Sized> {
    pub sim: &'a S,
    /// Words the mixed-in elements are drawn from.
    pub pool: &'a [String],
    /// Optional sampling weights aligned with `pool`; uniform when absent.
    pub pool_weights: Option<&'a [f64]>,
    pub band: DifficultyBand,
    pub max_attempts: usize,
}

impl<'a, S: Similarity + ?Sized> GenContext<'a, S> {
    pub fn new(sim: &'a S, pool: &'a [String], band: DifficultyBand) -> Self {
        GenContext {
            sim,
            pool,
            pool_weights: None,
            max_attempts: default_max_attempts(pool.len()),
            band,
        }
    }

    fn validate(&self) -> Result<()> {
        DifficultyBand::new(self.band.eta1, self.band.eta2)?;
        if self.max_attempts == 0 {
            return Err(Error::config("max_attempts must be at least 1"));
        }
        if let Some(w) = self.pool_weights {
            if w.len() != self.pool.len() {
                return Err(Error::config("pool weights must align with the pool"));
            }
        }
        Ok(())
    }

    /// Pool entries outside `exclude`, with their weights.
    fn candidates(&self, exclude: &[String]) -> (Vec<&'a str>, Option<WeightedIndex<f64>>) {
        let exclude: HashSet<&str> = exclude.iter().map(String::as_str).collect();
        let keep: Vec<usize> = (0..self.pool.len())
            .filter(|&i| !exclude.contains(self.pool[i].as_str()))
            .collect();
        let words = keep.iter().map(|&i| self.pool[i].as_str()).collect();
        let dist = self
            .pool_weights
            .and_then(|w| WeightedIndex::new(keep.iter().map(|&i| w[i])).ok());
        (words, dist)
    }

    /// Maximum relatedness of `word` to any member of `set`.
    pub fn sigma(&self, set: &[String], word: &str) -> f64 {
        set.iter()
            .map(|t| self.sim.similarity(t, word))
            .fold(0.0, f64::max)
    }
}

fn draw<'w, R: Rng>(rng: &mut R, words: &[&'w str], dist: &Option<WeightedIndex<f64>>) -> &'w str {
    match dist {
        Some(d) => words[d.sample(rng)],
        None => words[rng.gen_range(0..words.len())],
    }
}

/// Per-set seed, independent of scheduling.
pub fn derive_seed(master: u64, kind: PuzzleKind, ids: &[usize]) -> u64 {
    // splitmix64 finalizer over the mixed inputs
    let mut z = master ^ kind.code().wrapping_mul(0x9E37_79B9_7F4A_7C15);
    for &id in ids {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(id as u64);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// Draws random words until one has `eta1 < sigma < eta2` against `set`, then
/// presents the set plus that word in shuffled order.
pub fn gen_odd_one_out<S: Similarity + ?Sized, R: Rng>(
    ctx: &GenContext<'_, S>,
    set: &ConsistentSet,
    rng: &mut R,
    seed: u64,
) -> Result<Outcome> {
    ctx.validate()?;
    let (candidates, dist) = ctx.candidates(&set.words);
    if candidates.is_empty() {
        return Ok(Outcome::Exhausted { attempts: 0 });
    }
    for _ in 0..ctx.max_attempts {
        let w = draw(rng, &candidates, &dist);
        let sigma = ctx.sigma(&set.words, w);
        if ctx.band.contains(sigma) {
            let mut words = set.words.clone();
            words.push(w.to_string());
            let canonical = Puzzle {
                kind: PuzzleKind::OddOneOut,
                stem: Vec::new(),
                solution: Solution::OddIndex(words.len() - 1),
                order: (0..words.len()).collect(),
                words,
                band: ctx.band.clone(),
                sigma,
                sources: vec![set.topic],
                seed,
            };
            return Ok(Outcome::Generated(shuffle_and_render(&canonical, rng)));
        }
    }
    Ok(Outcome::Exhausted {
        attempts: ctx.max_attempts,
    })
}

/// Holds out one member of the set as the answer; the rest form the stem.
/// Distractors are random words whose relatedness to the stem lies in the band.
pub fn gen_choose_related<S: Similarity + ?Sized, R: Rng>(
    ctx: &GenContext<'_, S>,
    set: &ConsistentSet,
    n_distractors: usize,
    rng: &mut R,
    seed: u64,
) -> Result<Outcome> {
    ctx.validate()?;
    if set.words.len() < 3 {
        return Err(Error::config("choose-related needs a set of at least 3 words"));
    }
    if n_distractors == 0 {
        return Err(Error::config("choose-related needs at least one distractor"));
    }
    let held_out = rng.gen_range(0..set.words.len());
    let answer = set.words[held_out].clone();
    let stem: Vec<String> = set
        .words
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != held_out)
        .map(|(_, w)| w.clone())
        .collect();

    let (candidates, dist) = ctx.candidates(&set.words);
    let mut distractors: Vec<String> = Vec::with_capacity(n_distractors);
    let mut hardest = f64::NEG_INFINITY;
    let budget = ctx.max_attempts * n_distractors;
    let mut attempts = 0;
    while distractors.len() < n_distractors {
        if attempts == budget || candidates.is_empty() {
            return Ok(Outcome::Exhausted { attempts });
        }
        attempts += 1;
        let w = draw(rng, &candidates, &dist);
        if distractors.iter().any(|d| d == w) {
            continue;
        }
        let sigma = ctx.sigma(&stem, w);
        if ctx.band.contains(sigma) {
            hardest = hardest.max(sigma);
            distractors.push(w.to_string());
        }
    }

    let mut words = vec![answer];
    words.extend(distractors);
    let canonical = Puzzle {
        kind: PuzzleKind::ChooseRelated,
        stem,
        solution: Solution::AnswerIndex(0),
        order: (0..words.len()).collect(),
        words,
        band: ctx.band.clone(),
        sigma: hardest,
        sources: vec![set.topic],
        seed,
    };
    Ok(Outcome::Generated(shuffle_and_render(&canonical, rng)))
}

/// Mixes two disjoint sets whose every cross pair relates below `eta2_cross`.
pub fn gen_separate_topics<S: Similarity + ?Sized, R: Rng>(
    sim: &S,
    first: &ConsistentSet,
    second: &ConsistentSet,
    eta2_cross: f64,
    rng: &mut R,
    seed: u64,
) -> Result<Outcome> {
    let band = DifficultyBand::new(0.0, eta2_cross)?.named("cross-cap");
    let total = first.words.len() + second.words.len();
    if total > 64 {
        return Err(Error::config("separate-topics supports at most 64 words"));
    }
    let a: HashSet<&str> = first.words.iter().map(String::as_str).collect();
    if a.len() != first.words.len() || second.words.iter().any(|w| a.contains(w.as_str())) {
        return Ok(Outcome::Rejected("sets overlap".into()));
    }
    let mut cross = 0.0f64;
    for u in &first.words {
        for v in &second.words {
            cross = cross.max(sim.similarity(u, v));
        }
    }
    if cross >= eta2_cross {
        return Ok(Outcome::Rejected(format!(
            "cross relatedness {cross} reaches the cap {eta2_cross}"
        )));
    }
    let mut words = first.words.clone();
    words.extend(second.words.iter().cloned());
    let canonical = Puzzle {
        kind: PuzzleKind::SeparateTopics,
        stem: Vec::new(),
        solution: Solution::Partition((1u64 << first.words.len()) - 1),
        order: (0..words.len()).collect(),
        words,
        band,
        sigma: cross,
        sources: vec![first.topic, second.topic],
        seed,
    };
    Ok(Outcome::Generated(shuffle_and_render(&canonical, rng)))
}

fn remap(solution: Solution, order: &[usize], to_canonical: bool) -> Solution {
    let position = |i: usize| {
        if to_canonical {
            order[i]
        } else {
            order.iter().position(|&c| c == i).expect("order is a permutation")
        }
    };
    match solution {
        Solution::OddIndex(i) => Solution::OddIndex(position(i)),
        Solution::AnswerIndex(i) => Solution::AnswerIndex(position(i)),
        Solution::Partition(mask) => {
            let mut out = 0u64;
            for p in 0..order.len() {
                let (from, to) = if to_canonical { (p, order[p]) } else { (order[p], p) };
                if mask >> from & 1 == 1 {
                    out |= 1 << to;
                }
            }
            Solution::Partition(out)
        }
    }
}

/// Applies a Fisher-Yates permutation to the presented words of a canonical
/// puzzle and remaps its solution.
pub fn shuffle_and_render<R: Rng>(canonical: &Puzzle, rng: &mut R) -> Puzzle {
    let mut order: Vec<usize> = (0..canonical.words.len()).collect();
    order.shuffle(rng);
    let mut out = canonical.clone();
    out.words = order.iter().map(|&i| canonical.words[i].clone()).collect();
    out.solution = remap(canonical.solution, &order, false);
    out.order = order;
    out
}

/// Solution in canonical (pre-shuffle) positions.
pub fn resolve(puzzle: &Puzzle) -> Solution {
    remap(puzzle.solution, &puzzle.order, true)
}

/// Re-checks a puzzle against the similarity provider and its source sets.
pub fn verify_puzzle<S: Similarity + ?Sized>(
    puzzle: &Puzzle,
    sources: &HashMap<usize, ConsistentSet>,
    sim: &S,
) -> Result<()> {
    let fail = |msg: String| Err(Error::Invariant(msg));
    let srcs: Vec<&ConsistentSet> = puzzle
        .sources
        .iter()
        .map(|id| sources.get(id).ok_or_else(|| Error::Invariant(format!("unknown source set {id}"))))
        .collect::<Result<_>>()?;
    for s in &srcs {
        let score = score_words(&s.words, sim)?;
        if !(score > s.delta) {
            return fail(format!("source set {} re-scores {score} <= delta {}", s.topic, s.delta));
        }
    }
    let unique: HashSet<&String> = puzzle.words.iter().chain(&puzzle.stem).collect();
    if unique.len() != puzzle.words.len() + puzzle.stem.len() {
        return fail("presented words are not distinct".into());
    }
    let mut sorted = puzzle.order.clone();
    sorted.sort_unstable();
    if sorted != (0..puzzle.words.len()).collect::<Vec<_>>() {
        return fail("order is not a permutation".into());
    }
    let sigma_of = |set: &[String], w: &str| set.iter().map(|t| sim.similarity(t, w)).fold(0.0, f64::max);
    let set_words: HashSet<&str> = srcs[0].words.iter().map(String::as_str).collect();

    match (puzzle.kind, puzzle.solution) {
        (PuzzleKind::OddOneOut, Solution::OddIndex(i)) => {
            let odd = puzzle.words.get(i).ok_or_else(|| Error::Invariant("odd index out of range".into()))?;
            let rest: Vec<String> = puzzle.words.iter().filter(|w| *w != odd).cloned().collect();
            if set_words.contains(odd.as_str()) || rest.iter().any(|w| !set_words.contains(w.as_str())) {
                return fail("odd word and source set disagree".into());
            }
            let sigma = sigma_of(&srcs[0].words, odd);
            if sigma != puzzle.sigma || !puzzle.band.contains(sigma) {
                return fail(format!("odd word sigma {sigma} outside {:?}", puzzle.band));
            }
        }
        (PuzzleKind::ChooseRelated, Solution::AnswerIndex(i)) => {
            let answer = puzzle.words.get(i).ok_or_else(|| Error::Invariant("answer index out of range".into()))?;
            if !set_words.contains(answer.as_str()) || puzzle.stem.iter().any(|w| !set_words.contains(w.as_str())) {
                return fail("answer or stem outside the source set".into());
            }
            let mut hardest = f64::NEG_INFINITY;
            for (p, w) in puzzle.words.iter().enumerate() {
                if p == i {
                    continue;
                }
                if set_words.contains(w.as_str()) {
                    return fail(format!("distractor {w:?} belongs to the source set"));
                }
                let sigma = sigma_of(&puzzle.stem, w);
                if !puzzle.band.contains(sigma) {
                    return fail(format!("distractor {w:?} sigma {sigma} outside the band"));
                }
                hardest = hardest.max(sigma);
            }
            if hardest != puzzle.sigma {
                return fail("recorded sigma disagrees with the distractors".into());
            }
        }
        (PuzzleKind::SeparateTopics, Solution::Partition(mask)) => {
            let second = srcs
                .get(1)
                .ok_or_else(|| Error::Invariant("separate-topics needs two sources".into()))?;
            let second_words: HashSet<&str> = second.words.iter().map(String::as_str).collect();
            for (p, w) in puzzle.words.iter().enumerate() {
                let in_first = mask >> p & 1 == 1;
                let ok = if in_first {
                    set_words.contains(w.as_str())
                } else {
                    second_words.contains(w.as_str())
                };
                if !ok {
                    return fail(format!("word {w:?} on the wrong side of the partition"));
                }
            }
            let mut cross = 0.0f64;
            for u in &srcs[0].words {
                for v in &second.words {
                    cross = cross.max(sim.similarity(u, v));
                }
            }
            if cross != puzzle.sigma || !(cross < puzzle.band.eta2) {
                return fail(format!("cross relatedness {cross} violates the cap"));
            }
        }
        _ => return fail("solution shape does not match the puzzle kind".into()),
    }
    Ok(())
}

/// Settings for a whole puzzle bank.
#[derive(Debug, Clone, PartialEq)]
pub struct BankConfig {
    pub kinds: Vec<PuzzleKind>,
    pub master_seed: u64,
    pub n_distractors: usize,
    pub eta2_cross: f64,
}

impl Default for BankConfig {
    fn default() -> Self {
        BankConfig {
            kinds: PuzzleKind::ALL.to_vec(),
            master_seed: 0,
            n_distractors: 3,
            eta2_cross: 0.02,
        }
    }
}

/// A set (or pair of sets) for which no puzzle could be made.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Miss {
    pub kind: PuzzleKind,
    pub sources: Vec<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PuzzleBank {
    pub puzzles: Vec<Puzzle>,
    pub misses: Vec<Miss>,
}

fn miss(kind: PuzzleKind, sources: Vec<usize>, outcome: Outcome) -> std::result::Result<Puzzle, Miss> {
    match outcome {
        Outcome::Generated(p) => Ok(p),
        Outcome::Exhausted { attempts } => Err(Miss {
            kind,
            sources,
            reason: format!("exhausted after {attempts} attempts"),
        }),
        Outcome::Rejected(reason) => Err(Miss { kind, sources, reason }),
    }
}

/// Generates puzzles of every requested kind. Odd-one-out and choose-related
/// run per set with a seed derived from the master seed and the set's topic,
/// so the bank does not depend on scheduling. Separate-topics pairs sets
/// greedily in input order, each set used at most once.
pub fn generate_bank<S: Similarity + ?Sized>(
    ctx: &GenContext<'_, S>,
    sets: &[ConsistentSet],
    config: &BankConfig,
) -> Result<PuzzleBank> {
    ctx.validate()?;
    let mut bank = PuzzleBank::default();
    let push = |bank: &mut PuzzleBank, r: std::result::Result<Puzzle, Miss>| match r {
        Ok(p) => bank.puzzles.push(p),
        Err(m) => bank.misses.push(m),
    };

    for &kind in &config.kinds {
        match kind {
            PuzzleKind::OddOneOut | PuzzleKind::ChooseRelated => {
                let results: Vec<_> = sets
                    .par_iter()
                    .map(|set| {
                        let seed = derive_seed(config.master_seed, kind, &[set.topic]);
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let outcome = if kind == PuzzleKind::OddOneOut {
                            gen_odd_one_out(ctx, set, &mut rng, seed)?
                        } else if set.words.len() < 3 {
                            Outcome::Rejected("set has fewer than 3 words".into())
                        } else {
                            gen_choose_related(ctx, set, config.n_distractors, &mut rng, seed)?
                        };
                        Ok(miss(kind, vec![set.topic], outcome))
                    })
                    .collect::<Result<_>>()?;
                for r in results {
                    push(&mut bank, r);
                }
            }
            PuzzleKind::SeparateTopics => {
                let mut used = vec![false; sets.len()];
                for i in 0..sets.len() {
                    if used[i] {
                        continue;
                    }
                    let mut last = None;
                    for j in i + 1..sets.len() {
                        if used[j] {
                            continue;
                        }
                        let seed = derive_seed(config.master_seed, kind, &[sets[i].topic, sets[j].topic]);
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let outcome = gen_separate_topics(ctx.sim, &sets[i], &sets[j], config.eta2_cross, &mut rng, seed)?;
                        if let Outcome::Generated(p) = outcome {
                            used[i] = true;
                            used[j] = true;
                            last = Some(p);
                            break;
                        }
                    }
                    match last {
                        Some(p) => bank.puzzles.push(p),
                        None => bank.misses.push(Miss {
                            kind,
                            sources: vec![sets[i].topic],
                            reason: "no compatible partner set".into(),
                        }),
                    }
                }
            }
        }
    }
    Ok(bank)
}

pub fn write_bank(path: &Path, puzzles: &[Puzzle]) -> Result<()> {
    persist::write_jsonl(path, puzzles)
}

/// Writes the bank without `solution` and `order` fields.
pub fn write_public_bank(path: &Path, puzzles: &[Puzzle]) -> Result<()> {
    let records: Vec<serde_json::Value> = puzzles
        .iter()
        .map(|p| {
            let mut v = serde_json::to_value(p).expect("puzzles serialize");
            if let Some(obj) = v.as_object_mut() {
                obj.remove("solution");
                obj.remove("order");
            }
            v
        })
        .collect();
    persist::write_jsonl(path, &records)
}

pub fn read_bank(path: &Path) -> Result<Vec<Puzzle>> {
    persist::read_jsonl(path)
}
