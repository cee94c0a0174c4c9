//! Synthetic corpora with known ground truth.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{DocTermMatrix, Document, Weighting};

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

fn syllable(n: usize) -> String {
    let c = CONSONANTS[n % CONSONANTS.len()] as char;
    let v = VOWELS[(n / CONSONANTS.len()) % VOWELS.len()] as char;
    format!("{c}{v}")
}

/// Pronounceable, purely alphabetic name for word `rank` of group `group`.
/// Unique for `group`, `rank` below 70.
pub fn word_name(group: usize, rank: usize) -> String {
    format!("{}{}{}", syllable(group), syllable(rank), syllable(group + rank))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub topics: usize,
    pub words_per_topic: usize,
    pub docs: usize,
    pub doc_len: usize,
    /// Size of a vocabulary shared by all topics.
    pub background_words: usize,
    /// Probability that a token is drawn from the background vocabulary.
    pub background_rate: f64,
    /// Probability that a token is drawn uniformly from another planted topic.
    pub leak_rate: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    /// 8 topics of 10 words, 400 documents of 50 tokens, no background or leakage.
    fn default() -> Self {
        PlantedConfig {
            topics: 8,
            words_per_topic: 10,
            docs: 400,
            doc_len: 50,
            background_words: 0,
            background_rate: 0.0,
            leak_rate: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCorpus {
    pub docs: Vec<Document>,
    /// Words of each planted topic, most frequent first.
    pub topic_words: Vec<Vec<String>>,
    pub background: Vec<String>,
    pub doc_topic: Vec<usize>,
}

impl PlantedCorpus {
    /// The `k` most frequent words of each planted topic.
    pub fn top_words(&self, k: usize) -> Vec<Vec<String>> {
        self.topic_words.iter().map(|t| t[..k.min(t.len())].to_vec()).collect()
    }
}

/// Each document draws its tokens from one topic (documents cycle through
/// the topics), apart from background and leaked tokens. Within a topic, word `r` has Zipf weight `1 / (r + 1)`.
pub fn planted_corpus(config: &PlantedConfig) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let topic_words: Vec<Vec<String>> = (0..config.topics)
        .map(|t| (0..config.words_per_topic).map(|r| word_name(t, r)).collect())
        .collect();
    let background: Vec<String> = (0..config.background_words)
        .map(|r| word_name(config.topics, r))
        .collect();
    let zipf = WeightedIndex::new((0..config.words_per_topic).map(|r| 1.0 / (r + 1) as f64))
        .expect("at least one word per topic");

    let mut docs = Vec::with_capacity(config.docs);
    let mut doc_topic = Vec::with_capacity(config.docs);
    for d in 0..config.docs {
        let t = d % config.topics;
        let tokens: Vec<&str> = (0..config.doc_len)
            .map(|_| {
                let u: f64 = rng.gen();
                if !background.is_empty() && u < config.background_rate {
                    background[rng.gen_range(0..background.len())].as_str()
                } else if config.topics > 1 && u < config.background_rate + config.leak_rate {
                    let other = (t + rng.gen_range(1..config.topics)) % config.topics;
                    topic_words[other][rng.gen_range(0..config.words_per_topic)].as_str()
                } else {
                    topic_words[t][zipf.sample(&mut rng)].as_str()
                }
            })
            .collect();
        docs.push(Document::new(format!("doc{d:05}"), tokens.join(" ")));
        doc_topic.push(t);
    }
    PlantedCorpus {
        docs,
        topic_words,
        background,
        doc_topic,
    }
}

/// Dense matrix with entries uniform in `[0, 1)`.
pub fn uniform_matrix(n_rows: usize, n_cols: usize, seed: u64) -> DocTermMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns = (0..n_cols)
        .map(|_| (0..n_rows).map(|r| (r, rng.gen::<f64>())).collect())
        .collect();
    DocTermMatrix::from_columns(
        n_rows,
        columns,
        Weighting::RawCount,
        (0..n_cols).map(|j| format!("col{j}")).collect(),
    )
    .expect("entries are valid")
}
