//! Document ingestion: tokenization, vocabulary and the sparse word-by-document
//! matrix.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persist::{self, FormatTag};
use crate::stopwords;

const MATRIX_FORMAT: &str = "wordpuzzle.doc-term-matrix";
const MATRIX_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
        }
    }
}

/// Reads a JSON-lines corpus (`{"id": .., "text": ..}` per line).
///
/// Blank lines are skipped. Missing fields, bad JSON and duplicate ids are
/// reported with their line number; a file without documents is an error.
pub fn read_corpus(path: &Path) -> Result<Vec<Document>> {
    let docs: Vec<Document> = persist::read_jsonl(path)?;
    if docs.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no documents", path.display())));
    }
    let mut seen = HashSet::with_capacity(docs.len());
    // read_jsonl skips blank lines, so recount to report the physical line.
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, _)| i + 1);
    for (doc, line) in docs.iter().zip(lines) {
        if !seen.insert(doc.id.as_str()) {
            return Err(Error::MalformedLine {
                line,
                message: format!("duplicate document id {:?}", doc.id),
            });
        }
    }
    Ok(docs)
}

/// Which characters make up a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TokenPattern {
    /// Maximal runs of alphabetic characters.
    #[default]
    Alphabetic,
    /// Maximal runs of alphanumeric characters.
    Alphanumeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub pattern: TokenPattern,
    /// Sorted stopword list; empty disables filtering.
    pub stopwords: Vec<String>,
    pub min_len: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            pattern: TokenPattern::Alphabetic,
            stopwords: stopwords::ENGLISH.iter().map(|s| s.to_string()).collect(),
            min_len: 2,
        }
    }
}

impl TokenizerConfig {
    pub fn without_stopwords(mut self) -> Self {
        self.stopwords.clear();
        self
    }

    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stopwords = words.into_iter().map(Into::into).collect();
        self.stopwords.sort();
        self.stopwords.dedup();
        self
    }

    fn is_stopword(&self, token: &str) -> bool {
        self.stopwords
            .binary_search_by(|s| s.as_str().cmp(token))
            .is_ok()
    }

    fn is_token_char(&self, c: char) -> bool {
        match self.pattern {
            TokenPattern::Alphabetic => c.is_alphabetic(),
            TokenPattern::Alphanumeric => c.is_alphanumeric(),
        }
    }
}

/// Splits `text` into tokens. Order is preserved.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    text.split(|c: char| !config.is_token_char(c))
        .filter(|t| !t.is_empty())
        .map(|t| {
            if config.lowercase {
                t.to_lowercase()
            } else {
                t.to_string()
            }
        })
        .filter(|t| t.chars().count() >= config.min_len && !config.is_stopword(t))
        .collect()
}

/// Bijection between words and row indices `0..N`, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    words: Vec<String>,
    doc_freq: Vec<usize>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    words: Vec<String>,
    doc_freq: Vec<usize>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        Vocabulary::from_parts(r.words, r.doc_freq)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            words: v.words,
            doc_freq: v.doc_freq,
        }
    }
}

impl Vocabulary {
    fn from_parts(words: Vec<String>, doc_freq: Vec<usize>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocabulary {
            words,
            doc_freq,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn doc_freq(&self, index: usize) -> usize {
        self.doc_freq[index]
    }
}

fn tokenize_all(docs: &[Document], config: &TokenizerConfig) -> Vec<Vec<String>> {
    docs.par_iter().map(|d| tokenize(&d.text, config)).collect()
}

/// Keeps the tokens whose document frequency lies in `[min_df, max_df_ratio * M]`.
pub fn build_vocabulary(
    docs: &[Document],
    min_df: usize,
    max_df_ratio: f64,
    config: &TokenizerConfig,
) -> Result<Vocabulary> {
    if min_df < 1 {
        return Err(Error::config("min_df must be at least 1"));
    }
    if !(max_df_ratio > 0.0 && max_df_ratio <= 1.0) {
        return Err(Error::config("max_df_ratio must lie in (0, 1]"));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for tokens in tokenize_all(docs, config) {
        let unique: HashSet<String> = tokens.into_iter().collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    let max_df = max_df_ratio * docs.len() as f64;
    let (words, freqs): (Vec<String>, Vec<usize>) = df
        .into_iter()
        .filter(|&(_, n)| n >= min_df && n as f64 <= max_df)
        .unzip();
    if words.is_empty() {
        return Err(Error::EmptyVocabulary {
            min_df,
            max_df_ratio,
            docs: docs.len(),
        });
    }
    Ok(Vocabulary::from_parts(words, freqs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    RawCount,
    Tfidf,
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Weighting::RawCount => "raw-count",
            Weighting::Tfidf => "tfidf",
        })
    }
}

/// Sparse N x M word-by-document matrix in compressed-column form.
///
/// Only strictly positive entries are stored; row indices within a column are
/// increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTermMatrix {
    n_rows: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    weighting: Weighting,
    doc_ids: Vec<String>,
}

impl DocTermMatrix {
    /// Builds a matrix from per-column `(row, value)` lists. Zero entries are
    /// dropped; rows within each column must be strictly increasing.
    pub fn from_columns(
        n_rows: usize,
        columns: Vec<Vec<(usize, f64)>>,
        weighting: Weighting,
        doc_ids: Vec<String>,
    ) -> Result<Self> {
        if columns.len() != doc_ids.len() {
            return Err(Error::Format(format!(
                "{} columns but {} document ids",
                columns.len(),
                doc_ids.len()
            )));
        }
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for col in columns {
            let mut prev = None;
            for (r, v) in col {
                if r >= n_rows || prev.is_some_and(|p| r <= p) || !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Format(format!("bad entry ({r}, {v})")));
                }
                prev = Some(r);
                if v > 0.0 {
                    row_idx.push(r);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(DocTermMatrix {
            n_rows,
            col_ptr,
            row_idx,
            values,
            weighting,
            doc_ids,
        })
    }

    /// N, the vocabulary size.
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// M, the document count.
    pub fn n_cols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
        (&self.row_idx[a..b], &self.values[a..b])
    }

    pub fn dense_column(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        let (rows, vals) = self.column(j);
        for (&r, &v) in rows.iter().zip(vals) {
            out[r] = v;
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (rows, vals) = self.column(j);
        rows.binary_search(&i).map(|p| vals[p]).unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Number of columns in which each row has a stored entry.
    pub fn row_doc_freq(&self) -> Vec<usize> {
        let mut df = vec![0; self.n_rows];
        for &r in &self.row_idx {
            df[r] += 1;
        }
        df
    }

    /// Iterates `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_cols()).flat_map(move |j| {
            let (rows, vals) = self.column(j);
            rows.iter().zip(vals).map(move |(&r, &v)| (r, j, v))
        })
    }

    /// Row-major dense copy, mostly for small matrices in tests and LSA.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols()]; self.n_rows];
        for (r, c, v) in self.triplets() {
            out[r][c] = v;
        }
        out
    }

    /// y = X v, with `v` of length M.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        for (j, &vj) in v.iter().enumerate() {
            if vj == 0.0 {
                continue;
            }
            let (rows, vals) = self.column(j);
            for (&r, &x) in rows.iter().zip(vals) {
                y[r] += x * vj;
            }
        }
        y
    }

    /// y = X^T u, with `u` of length N.
    pub fn tr_mul_vec(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n_cols())
            .map(|j| {
                let (rows, vals) = self.column(j);
                rows.iter().zip(vals).map(|(&r, &x)| x * u[r]).sum()
            })
            .collect()
    }
}

/// Counts in-vocabulary tokens per document. Documents left without any
/// vocabulary word are dropped with a warning.
pub fn build_doc_term_matrix(
    docs: &[Document],
    vocab: &Vocabulary,
    config: &TokenizerConfig,
) -> Result<DocTermMatrix> {
    let mut columns = Vec::with_capacity(docs.len());
    let mut ids = Vec::with_capacity(docs.len());
    for (doc, tokens) in docs.iter().zip(tokenize_all(docs, config)) {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in &tokens {
            if let Some(i) = vocab.get(t) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        if counts.is_empty() {
            log::warn!("document {:?} has no vocabulary words; dropped", doc.id);
            continue;
        }
        columns.push(counts.into_iter().collect());
        ids.push(doc.id.clone());
    }
    if columns.is_empty() {
        return Err(Error::EmptyInput("every document was dropped".into()));
    }
    DocTermMatrix::from_columns(vocab.len(), columns, Weighting::RawCount, ids)
}

/// Reweights raw counts as `tf * ln(M / df)`. Entries whose word occurs in
/// every document become zero and are dropped.
pub fn tfidf_transform(x: &DocTermMatrix) -> Result<DocTermMatrix> {
    if x.weighting != Weighting::RawCount {
        return Err(Error::config("tfidf_transform expects a raw-count matrix"));
    }
    let m = x.n_cols() as f64;
    let idf: Vec<f64> = x
        .row_doc_freq()
        .into_iter()
        .map(|df| if df == 0 { 0.0 } else { (m / df as f64).ln() })
        .collect();
    let columns = (0..x.n_cols())
        .map(|j| {
            let (rows, vals) = x.column(j);
            rows.iter()
                .zip(vals)
                .map(|(&r, &tf)| (r, tf * idf[r]))
                .collect()
        })
        .collect();
    DocTermMatrix::from_columns(x.n_rows, columns, Weighting::Tfidf, x.doc_ids.clone())
}

/// A matrix together with the vocabulary that names its rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub vocab: Vocabulary,
    pub matrix: DocTermMatrix,
}

#[derive(Serialize, Deserialize)]
struct MatrixHeader {
    #[serde(flatten)]
    tag: FormatTag,
    weighting: Weighting,
    rows: usize,
    cols: usize,
    stopwords_version: String,
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    header: MatrixHeader,
    vocabulary: Vocabulary,
    doc_ids: Vec<String>,
    triplets: Vec<(usize, usize, f64)>,
}

impl Corpus {
    /// Ingests documents end to end with the given filters.
    pub fn ingest(
        docs: &[Document],
        min_df: usize,
        max_df_ratio: f64,
        config: &TokenizerConfig,
    ) -> Result<Self> {
        let vocab = build_vocabulary(docs, min_df, max_df_ratio, config)?;
        let matrix = build_doc_term_matrix(docs, &vocab, config)?;
        Ok(Corpus { vocab, matrix })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = MatrixFile {
            header: MatrixHeader {
                tag: FormatTag::new(MATRIX_FORMAT, MATRIX_VERSION),
                weighting: self.matrix.weighting,
                rows: self.matrix.n_rows,
                cols: self.matrix.n_cols(),
                stopwords_version: stopwords::STOPWORDS_VERSION.to_string(),
            },
            vocabulary: self.vocab.clone(),
            doc_ids: self.matrix.doc_ids.clone(),
            triplets: self.matrix.triplets().collect(),
        };
        persist::write_json(path, &file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: MatrixFile = persist::read_json(path)?;
        file.header.tag.expect(MATRIX_FORMAT, MATRIX_VERSION)?;
        let h = &file.header;
        if file.vocabulary.len() != h.rows || file.doc_ids.len() != h.cols {
            return Err(Error::Format("header dimensions disagree with payload".into()));
        }
        let mut columns = vec![Vec::new(); h.cols];
        let mut last = (0, 0);
        for (k, &(r, c, v)) in file.triplets.iter().enumerate() {
            if c >= h.cols || (k > 0 && (c, r) <= (last.1, last.0)) {
                return Err(Error::Format(format!("triplet {k} out of column-major order")));
            }
            last = (r, c);
            columns[c].push((r, v));
        }
        let matrix = DocTermMatrix::from_columns(h.rows, columns, h.weighting, file.doc_ids)?;
        Ok(Corpus {
            vocab: file.vocabulary,
            matrix,
        })
    }
}
