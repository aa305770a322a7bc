//! Stage helpers shared by the sweep, the command line and tests.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{ingest_tweets, load_labels, Corpus, Role, TokenizerSpec};
use crate::embedding::{build_vocab, train_sgns, SgnsConfig, Vocabulary, WordVectorTable};
use crate::eval::{cross_validate, CvResult, MetricsReport};
use crate::models::{self, HyperParams, TrainedModel};
use crate::seed::derive_seed;
use crate::vectorize::{
    assemble_dataset, build_blocks, vectorize_tweets, BlockSample, Task, TaskDataset, TweetVector, VectorizeReport,
};
use crate::{Error, Result};

/// Loads, joins and length-filters a corpus.
pub fn load_corpus(tweets: &Path, labels: &Path, tokenizer: &TokenizerSpec, min_tokens: usize) -> Result<Corpus> {
    let accounts = load_labels(labels)?;
    let records = ingest_tweets(tweets, tokenizer)?;
    Corpus::join(accounts, records)?.filter_short(min_tokens)
}

/// Trains word vectors on the posts of training accounts only.
pub fn train_embedding(corpus: &Corpus, config: &SgnsConfig) -> Result<(Vocabulary, WordVectorTable)> {
    let tweets = corpus.tweets_with_role(Role::Train);
    let vocab = build_vocab(&tweets, config.min_count)?;
    let table = train_sgns(&tweets, &vocab, config)?;
    Ok((vocab, table))
}

#[derive(Debug, Clone)]
pub struct Blocks {
    pub train: Vec<BlockSample>,
    pub test: Vec<BlockSample>,
    /// Trailing posts that did not fill a block.
    pub dropped_tweets: usize,
}

/// Vectorizes every post of the corpus.
pub fn vectorize_corpus(
    corpus: &Corpus,
    vocab: &Vocabulary,
    table: &WordVectorTable,
) -> Result<(Vec<TweetVector>, VectorizeReport)> {
    vectorize_tweets(corpus.tweets(), table, vocab)
}

/// Blocks of size `block_size` for every account, split by role.
pub fn make_role_blocks(
    corpus: &Corpus,
    vectors: &[TweetVector],
    block_size: usize,
) -> Result<Blocks> {
    let set = build_blocks(corpus.accounts(), vectors, block_size)?;
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for block in set.blocks {
        match corpus.account(&block.account_id).map(|a| a.role) {
            Some(Role::Train) => train.push(block),
            Some(Role::Test) => test.push(block),
            None => return Err(Error::Data(format!("block of unknown account '{}'", block.account_id))),
        }
    }
    Ok(Blocks {
        train,
        test,
        dropped_tweets: set.dropped_tweets,
    })
}

/// Training and test datasets of one task.
pub fn task_datasets(corpus: &Corpus, blocks: &Blocks, task: Task) -> Result<(TaskDataset, TaskDataset)> {
    Ok((
        assemble_dataset(&blocks.train, corpus.accounts(), task, Role::Train)?,
        assemble_dataset(&blocks.test, corpus.accounts(), task, Role::Test)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub cv_ms: u64,
    pub fit_ms: u64,
    pub eval_ms: u64,
}

#[derive(Debug, Clone)]
pub struct CellRun {
    pub cv: CvResult,
    pub model: TrainedModel,
    pub report: MetricsReport,
    pub timing: Timing,
}

/// Selects hyperparameters by cross-validation on `train`, refits the best
/// candidate on all of `train` and evaluates it on `test`.
pub fn run_cell(
    train: &TaskDataset,
    test: &TaskDataset,
    grid: &[HyperParams],
    folds: usize,
    seed: u64,
    n: usize,
    l: usize,
) -> Result<CellRun> {
    if test.is_empty() {
        return Err(Error::Data("no test blocks".into()));
    }
    let algorithm = grid
        .first()
        .ok_or_else(|| Error::Parameter("empty hyperparameter grid".into()))?
        .algorithm();
    let ms = |t: Instant| t.elapsed().as_millis() as u64;
    let start = Instant::now();
    let cv = cross_validate(train, grid, folds, derive_seed(seed, "cv"))?;
    let cv_ms = ms(start);
    let start = Instant::now();
    let model = models::train(train, &cv.best, derive_seed(seed, "fit"))?;
    let fit_ms = ms(start);
    let start = Instant::now();
    let predictions = model.predict(&test.rows)?;
    let report = MetricsReport::compute(train.task, algorithm, n, l, &test.labels, &predictions)?;
    let eval_ms = ms(start);
    Ok(CellRun {
        cv,
        model,
        report,
        timing: Timing { cv_ms, fit_ms, eval_ms },
    })
}
