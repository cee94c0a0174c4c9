//! Topic dictionaries and the models that induce them.

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persist::{self, FormatTag};

mod dictlearn;
mod lda;
mod lsa;
mod sparse;

pub use dictlearn::{dict_learn_fit, document_weights, DictLearnConfig, DictLearner};
pub use lda::{lda_fit, GibbsSampler, LdaConfig};
pub use lsa::{lsa_fit, LsaConfig, LsaFit};
pub use sparse::{sparse_code, Regularizer, SparseCode};

const MODEL_FORMAT: &str = "wordpuzzle.topic-model";
const MODEL_VERSION: u32 = 1;

/// Default number of topics.
pub const DEFAULT_TOPICS: usize = 400;
/// Default number of words kept per topic.
pub const DEFAULT_SET_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelTag {
    Lsa,
    Lda,
    Dictlearn,
}

impl ModelTag {
    pub fn name(self) -> &'static str {
        match self {
            ModelTag::Lsa => "lsa",
            ModelTag::Lda => "lda",
            ModelTag::Dictlearn => "dictlearn",
        }
    }
}

impl std::str::FromStr for ModelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lsa" => Ok(ModelTag::Lsa),
            "lda" => Ok(ModelTag::Lda),
            "dictlearn" => Ok(ModelTag::Dictlearn),
            other => Err(Error::config(format!(
                "unknown model {other:?} (expected lsa, lda or dictlearn)"
            ))),
        }
    }
}

impl std::fmt::Display for ModelTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// N x K matrix whose columns are topics over the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicDictionary {
    n_words: usize,
    n_topics: usize,
    /// Column-major.
    weights: Vec<f64>,
    tag: ModelTag,
}

impl TopicDictionary {
    /// `weights` is column-major, `n_words * n_topics` long.
    pub fn new(n_words: usize, n_topics: usize, weights: Vec<f64>, tag: ModelTag) -> Result<Self> {
        if weights.len() != n_words * n_topics {
            return Err(Error::Format(format!(
                "{} weights for a {n_words} x {n_topics} dictionary",
                weights.len()
            )));
        }
        Ok(TopicDictionary {
            n_words,
            n_topics,
            weights,
            tag,
        })
    }

    pub fn from_columns(columns: &[Vec<f64>], tag: ModelTag) -> Result<Self> {
        let n_words = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_words) {
            return Err(Error::Format("ragged dictionary columns".into()));
        }
        Self::new(n_words, columns.len(), columns.concat(), tag)
    }

    pub fn n_words(&self) -> usize {
        self.n_words
    }

    pub fn n_topics(&self) -> usize {
        self.n_topics
    }

    pub fn tag(&self) -> ModelTag {
        self.tag
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.weights[k * self.n_words..(k + 1) * self.n_words]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.weights.chunks_exact(self.n_words.max(1)).take(self.n_topics)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn significance(&self, w: f64) -> f64 {
        match self.tag {
            ModelTag::Lsa => w.abs(),
            ModelTag::Lda | ModelTag::Dictlearn => w,
        }
    }

    /// Checks the per-model column invariants.
    pub fn validate(&self) -> Result<()> {
        for (k, col) in self.columns().enumerate() {
            if col.iter().all(|&w| w == 0.0) {
                return Err(Error::Invariant(format!("topic {k} is all zero")));
            }
            match self.tag {
                ModelTag::Lda => {
                    let sum: f64 = col.iter().sum();
                    if col.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-9 {
                        return Err(Error::Invariant(format!(
                            "topic {k} is not a probability vector (sum {sum})"
                        )));
                    }
                }
                ModelTag::Dictlearn => {
                    let norm = col.iter().map(|w| w * w).sum::<f64>().sqrt();
                    if norm > 1.0 + 1e-12 {
                        return Err(Error::Invariant(format!("topic {k} has norm {norm} > 1")));
                    }
                }
                ModelTag::Lsa => {}
            }
        }
        Ok(())
    }
}

/// The `k` most significant words of one topic, heaviest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicWordSet {
    pub topic: usize,
    pub words: Vec<usize>,
    /// Significance of each word: |weight| for LSA, the weight otherwise.
    pub weights: Vec<f64>,
}

/// Keeps the `k` most significant words of every topic. Ties go to the lower
/// word index.
pub fn extract_top_k(dict: &TopicDictionary, k: usize) -> Result<Vec<TopicWordSet>> {
    if k == 0 || k > dict.n_words {
        return Err(Error::config(format!(
            "set size k = {k} must lie in 1..={}",
            dict.n_words
        )));
    }
    Ok(dict
        .columns()
        .enumerate()
        .map(|(topic, col)| {
            let mut order: Vec<usize> = (0..col.len()).collect();
            let key = |i: usize| dict.significance(col[i]);
            order.sort_by(|&a, &b| {
                key(b)
                    .partial_cmp(&key(a))
                    .unwrap_or(Ordering::Equal)
                    .then(a.cmp(&b))
            });
            order.truncate(k);
            TopicWordSet {
                topic,
                weights: order.iter().map(|&i| key(i)).collect(),
                words: order,
            }
        })
        .collect())
}

/// Settings a dictionary was fitted with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelConfig {
    Lsa(LsaConfig),
    Lda(LdaConfig),
    Dictlearn(DictLearnConfig),
}

impl ModelConfig {
    pub fn tag(&self) -> ModelTag {
        match self {
            ModelConfig::Lsa(_) => ModelTag::Lsa,
            ModelConfig::Lda(_) => ModelTag::Lda,
            ModelConfig::Dictlearn(_) => ModelTag::Dictlearn,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ModelConfig::Lsa(c) => c.seed,
            ModelConfig::Lda(c) => c.seed,
            ModelConfig::Dictlearn(c) => c.seed,
        }
    }

    pub fn topics(&self) -> usize {
        match self {
            ModelConfig::Lsa(c) => c.topics,
            ModelConfig::Lda(c) => c.topics,
            ModelConfig::Dictlearn(c) => c.topics,
        }
    }
}

/// A fitted dictionary with the vocabulary naming its rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub dictionary: TopicDictionary,
    pub vocab: Vec<String>,
    pub config: ModelConfig,
    /// Descending singular values, LSA only.
    pub singular_values: Option<Vec<f64>>,
}

impl TopicModel {
    /// Fits the configured model on `x` whose rows are named by `vocab`.
    pub fn fit(x: &crate::corpus::DocTermMatrix, vocab: &[String], config: &ModelConfig) -> Result<Self> {
        if vocab.len() != x.n_rows() {
            return Err(Error::Format("vocabulary does not match matrix rows".into()));
        }
        let (dictionary, singular_values) = match config {
            ModelConfig::Lsa(c) => {
                let fit = lsa_fit(x, c)?;
                (fit.dictionary, Some(fit.singular_values))
            }
            ModelConfig::Lda(c) => (lda_fit(x, c)?, None),
            ModelConfig::Dictlearn(c) => (dict_learn_fit(x, c)?, None),
        };
        Ok(TopicModel {
            dictionary,
            vocab: vocab.to_vec(),
            config: config.clone(),
            singular_values,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            header: ModelHeader {
                tag: FormatTag::new(MODEL_FORMAT, MODEL_VERSION),
                rows: self.dictionary.n_words,
                cols: self.dictionary.n_topics,
                seed: self.config.seed(),
                config: self.config.clone(),
            },
            vocab: self.vocab.clone(),
            singular_values: self.singular_values.clone(),
            weights: self.dictionary.weights.clone(),
        };
        persist::write_json(path, &file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: ModelFile = persist::read_json(path)?;
        let h = file.header;
        h.tag.expect(MODEL_FORMAT, MODEL_VERSION)?;
        if file.vocab.len() != h.rows {
            return Err(Error::Format("vocabulary length disagrees with header".into()));
        }
        let dictionary = TopicDictionary::new(h.rows, h.cols, file.weights, h.config.tag())?;
        Ok(TopicModel {
            dictionary,
            vocab: file.vocab,
            config: h.config,
            singular_values: file.singular_values,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    #[serde(flatten)]
    tag: FormatTag,
    rows: usize,
    cols: usize,
    seed: u64,
    config: ModelConfig,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    header: ModelHeader,
    vocab: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    singular_values: Option<Vec<f64>>,
    /// Column-major.
    weights: Vec<f64>,
}
