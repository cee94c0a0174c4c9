//! Command line front end.
//!
//! Every flag may also come from a JSON config file (`--config`), whose keys
//! are the long flag names; flags given on the command line win.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::consistency::{
    identify_consistent_sets, read_consistent_sets, write_consistent_sets, DEFAULT_DELTA,
};
use crate::corpus::{read_corpus, tfidf_transform, Corpus, TokenizerConfig};
use crate::error::{Error, Result};
use crate::esa::{build_esa_index, EsaConfig, EsaIndex, SimilarityProvider, DEFAULT_TRUNCATION};
use crate::eval::{delta_grid, eval_yield};
use crate::puzzles::{
    default_max_attempts, generate_bank, verify_puzzle, write_bank, write_public_bank, BankConfig,
    DifficultyBand, GenContext, PuzzleKind,
};
use crate::topics::{
    extract_top_k, DictLearnConfig, LdaConfig, LsaConfig, ModelConfig, ModelTag, Regularizer,
    TopicModel, DEFAULT_SET_SIZE, DEFAULT_TOPICS,
};

#[derive(Debug, Parser)]
#[command(name = "wordpuzzle", version, about = "Generate word puzzles from topic dictionaries")]
pub struct Cli {
    /// JSON file with default values for any flag (keys are long flag names).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize a JSON-lines corpus into a word-by-document matrix.
    Ingest(IngestArgs),
    /// Fit a topic model on an ingested matrix.
    Train(TrainArgs),
    /// Build the ESA relatedness index from a concept corpus.
    Index(IndexArgs),
    /// Keep the top-k word sets of each topic that pass the consistency threshold.
    ExtractSets(ExtractArgs),
    /// Generate a puzzle bank from consistent sets.
    Generate(GenerateArgs),
    /// Tabulate consistent-set counts over a threshold grid, per model.
    EvalYield(EvalArgs),
}

#[derive(Debug, Args)]
pub struct TokenizerArgs {
    /// Keep stopwords.
    #[arg(long)]
    pub no_stopwords: bool,
    #[arg(long)]
    pub min_token_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub min_df: Option<usize>,
    #[arg(long)]
    pub max_df_ratio: Option<f64>,
    /// Store TF-IDF weights instead of raw counts.
    #[arg(long)]
    pub tfidf: bool,
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    #[arg(long)]
    pub topics: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// l1 or group-l2.
    #[arg(long)]
    pub regularizer: Option<String>,
    #[arg(long)]
    pub group_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// lsa, lda or dictlearn.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub params: ModelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub concepts: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub truncation: Option<usize>,
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Fitted topic model file.
    #[arg(long = "model")]
    pub model_file: Option<PathBuf>,
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub sets: Option<PathBuf>,
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Preset band: beginner or intermediate.
    #[arg(long)]
    pub band: Option<String>,
    #[arg(long)]
    pub eta1: Option<f64>,
    #[arg(long)]
    pub eta2: Option<f64>,
    /// Comma-separated: odd-one-out, choose-related, separate-topics.
    #[arg(long, value_delimiter = ',')]
    pub kinds: Option<Vec<String>>,
    #[arg(long)]
    pub distractors: Option<usize>,
    /// Cap on cross-set relatedness for separate-topics (defaults to eta2).
    #[arg(long)]
    pub eta2_cross: Option<f64>,
    #[arg(long)]
    pub max_attempts: Option<usize>,
    /// uniform or frequency (weight words by the number of concepts they occur in).
    #[arg(long)]
    pub sampling: Option<String>,
    /// Also write `<out>.public.jsonl` with solutions withheld.
    #[arg(long)]
    pub no_solutions: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// CSV output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Models to fit, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    /// Previously trained model files to evaluate as well.
    #[arg(long = "model-files", value_delimiter = ',')]
    pub model_files: Option<Vec<PathBuf>>,
    /// Strictly increasing thresholds, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub deltas: Option<Vec<f64>>,
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub params: ModelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Config file contents; every key mirrors a long flag.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub concepts: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub model: Option<String>,
    pub model_file: Option<PathBuf>,
    pub model_files: Option<Vec<PathBuf>>,
    pub index: Option<PathBuf>,
    pub sets: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub min_df: Option<usize>,
    pub max_df_ratio: Option<f64>,
    pub tfidf: Option<bool>,
    pub no_stopwords: Option<bool>,
    pub min_token_len: Option<usize>,
    pub topics: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub iterations: Option<usize>,
    pub kappa: Option<f64>,
    pub rho: Option<f64>,
    pub regularizer: Option<String>,
    pub group_size: Option<usize>,
    pub epochs: Option<usize>,
    pub truncation: Option<usize>,
    pub k: Option<usize>,
    pub delta: Option<f64>,
    pub band: Option<String>,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub kinds: Option<Vec<String>>,
    pub distractors: Option<usize>,
    pub eta2_cross: Option<f64>,
    pub max_attempts: Option<usize>,
    pub sampling: Option<String>,
    pub no_solutions: Option<bool>,
    pub models: Option<Vec<String>>,
    pub deltas: Option<Vec<f64>>,
    pub seed: Option<u64>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }
}

fn require(path: Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    path.ok_or_else(|| Error::config(format!("--{flag} is required")))
}

fn tokenizer(args: &TokenizerArgs, cfg: &PipelineConfig) -> TokenizerConfig {
    let mut t = TokenizerConfig::default();
    if args.no_stopwords || cfg.no_stopwords.unwrap_or(false) {
        t = t.without_stopwords();
    }
    if let Some(n) = args.min_token_len.or(cfg.min_token_len) {
        t.min_len = n;
    }
    t
}

/// Builds a model configuration from flags, config file and defaults.
pub fn model_config(tag: ModelTag, args: &ModelArgs, cfg: &PipelineConfig, seed: u64) -> Result<ModelConfig> {
    let topics = args.topics.or(cfg.topics).unwrap_or(DEFAULT_TOPICS);
    Ok(match tag {
        ModelTag::Lsa => ModelConfig::Lsa(LsaConfig::new(topics, seed)),
        ModelTag::Lda => {
            let mut c = LdaConfig::new(topics, seed);
            c.alpha = args.alpha.or(cfg.alpha).unwrap_or(c.alpha);
            c.beta = args.beta.or(cfg.beta).unwrap_or(c.beta);
            c.iterations = args.iterations.or(cfg.iterations).unwrap_or(c.iterations);
            ModelConfig::Lda(c)
        }
        ModelTag::Dictlearn => {
            let mut c = DictLearnConfig::new(topics, seed);
            c.kappa = args.kappa.or(cfg.kappa).unwrap_or(c.kappa);
            c.rho = args.rho.or(cfg.rho).unwrap_or(c.rho);
            c.epochs = args.epochs.or(cfg.epochs).unwrap_or(c.epochs);
            let reg = args.regularizer.clone().or(cfg.regularizer.clone());
            c.regularizer = match reg.as_deref().unwrap_or("l1") {
                "l1" => Regularizer::L1,
                "group-l2" => {
                    let size = args.group_size.or(cfg.group_size).unwrap_or(4);
                    Regularizer::contiguous_groups(topics, size)
                }
                other => return Err(Error::config(format!("unknown regularizer {other:?}"))),
            };
            ModelConfig::Dictlearn(c)
        }
    })
}

fn load_provider(path: &Path) -> Result<SimilarityProvider> {
    Ok(SimilarityProvider::new(EsaIndex::load(path)?))
}

pub fn cmd_ingest(args: IngestArgs, cfg: &PipelineConfig) -> Result<()> {
    let corpus_path = require(args.corpus.or(cfg.corpus.clone()), "corpus")?;
    let out = require(args.out.or(cfg.out.clone()), "out")?;
    let tok = tokenizer(&args.tokenizer, cfg);
    let docs = read_corpus(&corpus_path)?;
    let mut corpus = Corpus::ingest(
        &docs,
        args.min_df.or(cfg.min_df).unwrap_or(1),
        args.max_df_ratio.or(cfg.max_df_ratio).unwrap_or(1.0),
        &tok,
    )?;
    if args.tfidf || cfg.tfidf.unwrap_or(false) {
        corpus.matrix = tfidf_transform(&corpus.matrix)?;
    }
    corpus.save(&out)?;
    println!(
        "ingested {} documents, {} words, {} entries ({})",
        corpus.matrix.n_cols(),
        corpus.matrix.n_rows(),
        corpus.matrix.nnz(),
        corpus.matrix.weighting()
    );
    Ok(())
}

pub fn cmd_train(args: TrainArgs, cfg: &PipelineConfig) -> Result<()> {
    let tag: ModelTag = args
        .model
        .or(cfg.model.clone())
        .ok_or_else(|| Error::config("--model is required"))?
        .parse()?;
    let matrix = require(args.matrix.or(cfg.matrix.clone()), "matrix")?;
    let out = require(args.out.or(cfg.out.clone()), "out")?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let config = model_config(tag, &args.params, cfg, seed)?;
    let corpus = Corpus::load(&matrix)?;
    let model = TopicModel::fit(&corpus.matrix, corpus.vocab.words(), &config)?;
    model.dictionary.validate()?;
    model.save(&out)?;
    println!("trained {tag} with {} topics over {} words", model.dictionary.n_topics(), model.dictionary.n_words());
    Ok(())
}

pub fn cmd_index(args: IndexArgs, cfg: &PipelineConfig) -> Result<()> {
    let concepts = require(args.concepts.or(cfg.concepts.clone()), "concepts")?;
    let out = require(args.out.or(cfg.out.clone()), "out")?;
    let config = EsaConfig {
        truncation: args.truncation.or(cfg.truncation).unwrap_or(DEFAULT_TRUNCATION),
        tokenizer: tokenizer(&args.tokenizer, cfg),
    };
    let index = build_esa_index(&read_corpus(&concepts)?, &config)?;
    index.save(&out)?;
    println!("indexed {} words over {} concepts", index.n_words(), index.n_concepts());
    Ok(())
}

pub fn cmd_extract_sets(args: ExtractArgs, cfg: &PipelineConfig) -> Result<()> {
    let model_path = require(args.model_file.or(cfg.model_file.clone()), "model")?;
    let index = require(args.index.or(cfg.index.clone()), "index")?;
    let out = require(args.out.or(cfg.out.clone()), "out")?;
    let k = args.k.or(cfg.k).unwrap_or(DEFAULT_SET_SIZE);
    let delta = args.delta.or(cfg.delta).unwrap_or(DEFAULT_DELTA);
    let model = TopicModel::load(&model_path)?;
    let sim = load_provider(&index)?;
    let candidates = extract_top_k(&model.dictionary, k)?;
    let sets = identify_consistent_sets(&candidates, &model.vocab, &sim, delta)?;
    write_consistent_sets(&out, &sets)?;
    println!(
        "{} of {} topics consistent at delta {delta} ({} lookups of unindexed words)",
        sets.len(),
        candidates.len(),
        sim.unindexed_lookups()
    );
    Ok(())
}

fn public_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("bank");
    out.with_file_name(format!("{stem}.public.jsonl"))
}

pub fn cmd_generate(args: GenerateArgs, cfg: &PipelineConfig) -> Result<()> {
    let sets_path = require(args.sets.or(cfg.sets.clone()), "sets")?;
    let index = require(args.index.or(cfg.index.clone()), "index")?;
    let out = require(args.out.or(cfg.out.clone()), "out")?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);

    let preset = args.band.or(cfg.band.clone()).unwrap_or_else(|| "beginner".into());
    let mut band = DifficultyBand::preset(&preset)
        .ok_or_else(|| Error::config(format!("unknown band {preset:?} (beginner or intermediate)")))?;
    let (eta1, eta2) = (args.eta1.or(cfg.eta1), args.eta2.or(cfg.eta2));
    if eta1.is_some() || eta2.is_some() {
        band = DifficultyBand::new(eta1.unwrap_or(band.eta1), eta2.unwrap_or(band.eta2))?.named("custom");
    }
    let kinds = match args.kinds.or(cfg.kinds.clone()) {
        Some(ks) => ks.iter().map(|k| k.parse()).collect::<Result<Vec<PuzzleKind>>>()?,
        None => PuzzleKind::ALL.to_vec(),
    };

    let sets = read_consistent_sets(&sets_path)?;
    let sim = load_provider(&index)?;
    let pool: Vec<String> = sim.index().nonzero_words().into_iter().map(String::from).collect();
    let weights: Option<Vec<f64>> = match args.sampling.or(cfg.sampling.clone()).as_deref().unwrap_or("uniform") {
        "uniform" => None,
        "frequency" => Some(
            pool.iter()
                .map(|w| sim.index().vector(w).map_or(0.0, |v| v.len() as f64))
                .collect(),
        ),
        other => return Err(Error::config(format!("unknown sampling {other:?}"))),
    };
    let mut ctx = GenContext::new(&sim, &pool, band.clone());
    ctx.pool_weights = weights.as_deref();
    ctx.max_attempts = args
        .max_attempts
        .or(cfg.max_attempts)
        .unwrap_or_else(|| default_max_attempts(pool.len()));

    let bank_config = BankConfig {
        kinds,
        master_seed: seed,
        n_distractors: args.distractors.or(cfg.distractors).unwrap_or(3),
        eta2_cross: args.eta2_cross.or(cfg.eta2_cross).unwrap_or(band.eta2),
    };
    let bank = generate_bank(&ctx, &sets, &bank_config)?;

    let by_id: HashMap<usize, _> = sets.iter().map(|s| (s.topic, s.clone())).collect();
    for p in &bank.puzzles {
        verify_puzzle(p, &by_id, &sim)?;
    }
    write_bank(&out, &bank.puzzles)?;
    if args.no_solutions || cfg.no_solutions.unwrap_or(false) {
        write_public_bank(&public_path(&out), &bank.puzzles)?;
    }

    for kind in &bank_config.kinds {
        let made = bank.puzzles.iter().filter(|p| p.kind == *kind).count();
        let missed: Vec<String> = bank
            .misses
            .iter()
            .filter(|m| m.kind == *kind)
            .map(|m| format!("{:?}: {}", m.sources, m.reason))
            .collect();
        println!("{}: {made} generated, {} without a puzzle", kind.name(), missed.len());
        for m in missed {
            println!("  {m}");
        }
    }
    Ok(())
}

pub fn cmd_eval_yield(args: EvalArgs, cfg: &PipelineConfig) -> Result<()> {
    let matrix = require(args.matrix.or(cfg.matrix.clone()), "matrix")?;
    let index = require(args.index.or(cfg.index.clone()), "index")?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let k = args.k.or(cfg.k).unwrap_or(DEFAULT_SET_SIZE);
    let deltas = args
        .deltas
        .or(cfg.deltas.clone())
        .unwrap_or_else(|| delta_grid(0.0, 0.5, 0.05));
    let files = args.model_files.or(cfg.model_files.clone()).unwrap_or_default();
    let names = match args.models.or(cfg.models.clone()) {
        Some(n) => n,
        None if files.is_empty() => vec!["lsa".into(), "lda".into(), "dictlearn".into()],
        None => vec![],
    };

    let sim = load_provider(&index)?;
    let mut models: Vec<(String, TopicModel)> = Vec::new();
    if !names.is_empty() {
        let corpus = Corpus::load(&matrix)?;
        for name in names {
            let tag: ModelTag = name.parse()?;
            let config = model_config(tag, &args.params, cfg, seed)?;
            models.push((name, TopicModel::fit(&corpus.matrix, corpus.vocab.words(), &config)?));
        }
    }
    for f in files {
        let label = f.file_stem().and_then(|s| s.to_str()).unwrap_or("model").to_string();
        models.push((label, TopicModel::load(&f)?));
    }
    let refs: Vec<(String, &TopicModel)> = models.iter().map(|(l, m)| (l.clone(), m)).collect();
    let curve = eval_yield(&refs, k, &sim, &deltas)?;
    let csv = curve.to_csv();
    match args.out.or(cfg.out.clone()) {
        Some(p) => std::fs::write(&p, csv).map_err(|e| Error::io(&p, e))?,
        None => print!("{csv}"),
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::Ingest(a) => cmd_ingest(a, &cfg),
        Command::Train(a) => cmd_train(a, &cfg),
        Command::Index(a) => cmd_index(a, &cfg),
        Command::ExtractSets(a) => cmd_extract_sets(a, &cfg),
        Command::Generate(a) => cmd_generate(a, &cfg),
        Command::EvalYield(a) => cmd_eval_yield(a, &cfg),
    }
}
