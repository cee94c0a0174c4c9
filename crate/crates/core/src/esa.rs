//! Explicit semantic analysis: words as TF-IDF vectors over a repository of
//! concept documents, compared by cosine.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::RwLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Document, TokenizerConfig};
use crate::error::{Error, Result};
use crate::persist::{self, FormatTag};

const INDEX_FORMAT: &str = "wordpuzzle.esa-index";
const INDEX_VERSION: u32 = 1;

pub const DEFAULT_TRUNCATION: usize = 1000;
const DEFAULT_MEMO_CAPACITY: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsaConfig {
    /// Maximum number of concepts kept per word (the heaviest ones).
    pub truncation: usize,
    pub tokenizer: TokenizerConfig,
}

impl Default for EsaConfig {
    fn default() -> Self {
        EsaConfig {
            truncation: DEFAULT_TRUNCATION,
            tokenizer: TokenizerConfig::default(),
        }
    }
}

/// Sparse concept vector: `(concept id, weight)` sorted by concept id, all
/// weights strictly positive.
pub type ConceptVector = Vec<(u32, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct EsaIndex {
    n_concepts: usize,
    truncation: usize,
    concept_ids: Vec<String>,
    /// Sorted.
    words: Vec<String>,
    lookup: HashMap<String, usize>,
    vectors: Vec<ConceptVector>,
    sq_norms: Vec<f64>,
}

fn sq_norm(v: &ConceptVector) -> f64 {
    v.iter().map(|(_, w)| w * w).sum()
}

/// Builds the index: `phi(w)[c] = tf(w, c) * ln(C / df(w))`, truncated to the
/// `truncation` heaviest concepts per word (ties keep the lower concept id).
pub fn build_esa_index(concepts: &[Document], config: &EsaConfig) -> Result<EsaIndex> {
    if concepts.is_empty() {
        return Err(Error::EmptyInput("concept repository has no documents".into()));
    }
    if config.truncation == 0 {
        return Err(Error::config("truncation must be at least 1"));
    }
    let counts: Vec<BTreeMap<String, f64>> = concepts
        .par_iter()
        .map(|d| {
            let mut m = BTreeMap::new();
            for t in tokenize(&d.text, &config.tokenizer) {
                *m.entry(t).or_insert(0.0) += 1.0;
            }
            m
        })
        .collect();

    let mut postings: BTreeMap<&str, Vec<(u32, f64)>> = BTreeMap::new();
    for (c, m) in counts.iter().enumerate() {
        for (w, &tf) in m {
            postings.entry(w.as_str()).or_default().push((c as u32, tf));
        }
    }
    let n = concepts.len() as f64;
    let mut words = Vec::with_capacity(postings.len());
    let mut vectors = Vec::with_capacity(postings.len());
    for (w, post) in postings {
        let idf = (n / post.len() as f64).ln();
        let mut v: ConceptVector = post
            .into_iter()
            .map(|(c, tf)| (c, tf * idf))
            .filter(|&(_, x)| x > 0.0)
            .collect();
        if v.len() > config.truncation {
            v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            v.truncate(config.truncation);
            v.sort_by_key(|&(c, _)| c);
        }
        words.push(w.to_string());
        vectors.push(v);
    }
    Ok(EsaIndex::from_parts(
        concepts.len(),
        config.truncation,
        concepts.iter().map(|d| d.id.clone()).collect(),
        words,
        vectors,
    ))
}

impl EsaIndex {
    fn from_parts(
        n_concepts: usize,
        truncation: usize,
        concept_ids: Vec<String>,
        words: Vec<String>,
        vectors: Vec<ConceptVector>,
    ) -> Self {
        let lookup = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let sq_norms = vectors.iter().map(sq_norm).collect();
        EsaIndex {
            n_concepts,
            truncation,
            concept_ids,
            words,
            lookup,
            vectors,
            sq_norms,
        }
    }

    /// Index over hand-built vectors; concept ids are their decimal positions.
    pub fn from_vectors(n_concepts: usize, mut entries: Vec<(String, ConceptVector)>) -> Result<Self> {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if entries.windows(2).any(|p| p[0].0 == p[1].0) {
            return Err(Error::Format("duplicate word".into()));
        }
        let mut truncation = 1;
        for (w, v) in &mut entries {
            v.sort_by_key(|&(c, _)| c);
            let ok = v.windows(2).all(|p| p[0].0 < p[1].0)
                && v.iter().all(|&(c, x)| (c as usize) < n_concepts && x > 0.0 && x.is_finite());
            if !ok {
                return Err(Error::Format(format!("bad concept vector for {w:?}")));
            }
            truncation = truncation.max(v.len());
        }
        let (words, vectors) = entries.into_iter().unzip();
        Ok(EsaIndex::from_parts(
            n_concepts,
            truncation,
            (0..n_concepts).map(|c| c.to_string()).collect(),
            words,
            vectors,
        ))
    }

    pub fn n_concepts(&self) -> usize {
        self.n_concepts
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn n_words(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word_id(&self, word: &str) -> Option<usize> {
        self.lookup.get(word).copied()
    }

    pub fn vector(&self, word: &str) -> Option<&ConceptVector> {
        self.word_id(word).map(|i| &self.vectors[i])
    }

    /// Indexed words whose concept vector is not empty, in sorted order.
    pub fn nonzero_words(&self) -> Vec<&str> {
        self.words
            .iter()
            .zip(&self.vectors)
            .filter(|(_, v)| !v.is_empty())
            .map(|(w, _)| w.as_str())
            .collect()
    }

    /// Cosine of two indexed words' vectors, by id. Symmetric bit for bit.
    fn cosine(&self, a: usize, b: usize) -> f64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let (na, nb) = (self.sq_norms[a], self.sq_norms[b]);
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        if a == b {
            return 1.0;
        }
        let (va, vb) = (&self.vectors[a], &self.vectors[b]);
        let (mut i, mut j, mut dot) = (0, 0, 0.0);
        while i < va.len() && j < vb.len() {
            match va[i].0.cmp(&vb[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    dot += va[i].1 * vb[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        (dot / (na * nb).sqrt()).clamp(0.0, 1.0)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = IndexFile {
            header: IndexHeader {
                tag: FormatTag::new(INDEX_FORMAT, INDEX_VERSION),
                concepts: self.n_concepts,
                truncation: self.truncation,
                words: self.words.len(),
            },
            concept_ids: self.concept_ids.clone(),
            vectors: self
                .words
                .iter()
                .zip(&self.vectors)
                .map(|(w, v)| WordVector {
                    word: w.clone(),
                    concepts: v.clone(),
                })
                .collect(),
        };
        persist::write_json(path, &file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: IndexFile = persist::read_json(path)?;
        let h = file.header;
        h.tag.expect(INDEX_FORMAT, INDEX_VERSION)?;
        if file.vectors.len() != h.words || file.concept_ids.len() != h.concepts {
            return Err(Error::Format("index header disagrees with payload".into()));
        }
        let (mut words, mut vectors) = (Vec::new(), Vec::new());
        for wv in file.vectors {
            let sorted = wv.concepts.windows(2).all(|p| p[0].0 < p[1].0);
            let valid = wv
                .concepts
                .iter()
                .all(|&(c, x)| (c as usize) < h.concepts && x > 0.0 && x.is_finite());
            if !sorted || !valid || wv.concepts.len() > h.truncation {
                return Err(Error::Format(format!("bad concept vector for {:?}", wv.word)));
            }
            if words.last().is_some_and(|p: &String| *p >= wv.word) {
                return Err(Error::Format("index words are not sorted".into()));
            }
            words.push(wv.word);
            vectors.push(wv.concepts);
        }
        Ok(EsaIndex::from_parts(h.concepts, h.truncation, file.concept_ids, words, vectors))
    }
}

#[derive(Serialize, Deserialize)]
struct IndexHeader {
    #[serde(flatten)]
    tag: FormatTag,
    concepts: usize,
    truncation: usize,
    words: usize,
}

#[derive(Serialize, Deserialize)]
struct WordVector {
    word: String,
    concepts: ConceptVector,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    header: IndexHeader,
    concept_ids: Vec<String>,
    vectors: Vec<WordVector>,
}

/// Pairwise word relatedness in `[0, 1]`.
///
/// Implementations must be symmetric and return 1 for a word paired with
/// itself whenever the word has a representation.
pub trait Similarity: Sync {
    fn similarity(&self, a: &str, b: &str) -> f64;
}

/// A relatedness value plus whether either word was missing from the index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relatedness {
    pub value: f64,
    pub unindexed: bool,
}

/// Serves ESA relatedness lazily, memoizing computed pairs.
pub struct SimilarityProvider {
    index: EsaIndex,
    memo: RwLock<HashMap<(u32, u32), f64>>,
    capacity: usize,
    unindexed_lookups: AtomicUsize,
}

impl SimilarityProvider {
    pub fn new(index: EsaIndex) -> Self {
        Self::with_capacity(index, DEFAULT_MEMO_CAPACITY)
    }

    /// `capacity` bounds the number of memoized pairs; the memo is cleared
    /// when it fills up.
    pub fn with_capacity(index: EsaIndex, capacity: usize) -> Self {
        SimilarityProvider {
            index,
            memo: RwLock::new(HashMap::new()),
            capacity,
            unindexed_lookups: AtomicUsize::new(0),
        }
    }

    pub fn index(&self) -> &EsaIndex {
        &self.index
    }

    /// Cosine of the words' concept vectors; 0 when either vector is empty.
    /// Unindexed words relate to nothing (value 0) and are flagged.
    pub fn relatedness(&self, a: &str, b: &str) -> Relatedness {
        let (Some(ia), Some(ib)) = (self.index.word_id(a), self.index.word_id(b)) else {
            self.unindexed_lookups.fetch_add(1, Ordering::Relaxed);
            return Relatedness {
                value: 0.0,
                unindexed: true,
            };
        };
        let key = (ia.min(ib) as u32, ia.max(ib) as u32);
        if let Some(&v) = self.memo.read().unwrap().get(&key) {
            return Relatedness {
                value: v,
                unindexed: false,
            };
        }
        let value = self.index.cosine(ia, ib);
        if self.capacity > 0 {
            let mut memo = self.memo.write().unwrap();
            if memo.len() >= self.capacity {
                memo.clear();
            }
            memo.insert(key, value);
        }
        Relatedness {
            value,
            unindexed: false,
        }
    }

    /// Number of lookups so far that involved an unindexed word.
    pub fn unindexed_lookups(&self) -> usize {
        self.unindexed_lookups.load(Ordering::Relaxed)
    }

    pub fn memo_len(&self) -> usize {
        self.memo.read().unwrap().len()
    }

    /// S restricted to `words`: symmetric, one relatedness call per unordered
    /// pair.
    pub fn similarity_submatrix<S: AsRef<str>>(&self, words: &[S]) -> Vec<Vec<f64>> {
        submatrix(self, words)
    }
}

impl Similarity for SimilarityProvider {
    fn similarity(&self, a: &str, b: &str) -> f64 {
        self.relatedness(a, b).value
    }
}

/// Symmetric matrix of pairwise similarities over `words`.
pub fn submatrix<T: Similarity + ?Sized, S: AsRef<str>>(sim: &T, words: &[S]) -> Vec<Vec<f64>> {
    let n = words.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = sim.similarity(words[i].as_ref(), words[j].as_ref());
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}
