use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::EmbeddingCache;
use super::config::SweepConfig;
use super::pipeline::{load_corpus, make_role_blocks, run_cell, task_datasets, Timing};
use crate::corpus::Role;
use crate::embedding::build_vocab;
use crate::eval::MetricsReport;
use crate::models::{Algorithm, HyperParams};
use crate::seed::derive_seed;
use crate::vectorize::{vectorize_tweets, Task, TaskDataset};
use crate::{Error, Result};

/// Train/test pairs of every task for one `L`, plus the posts left over.
type LDatasets = (Vec<(TaskDataset, TaskDataset)>, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Failed,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Failed => "failed",
        }
    }
}

/// Outcome of one (task, algorithm, N, L, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub task: Task,
    pub algorithm: Algorithm,
    pub n: usize,
    pub l: usize,
    pub seed: u64,
    pub status: CellStatus,
    pub report: Option<MetricsReport>,
    pub best_params: Option<HyperParams>,
    /// Mean held-out accuracy of the chosen candidate.
    pub cv_accuracy: Option<f64>,
    pub train_blocks: usize,
    pub test_blocks: usize,
    /// Trailing posts that did not fill a block, over all accounts.
    pub dropped_tweets: usize,
    /// Absent in deterministic mode.
    pub timing: Option<Timing>,
    pub error: Option<String>,
}

impl SweepResult {
    pub fn is_ok(&self) -> bool {
        self.status == CellStatus::Ok
    }

    pub fn cell_key(&self) -> String {
        format!("{}/{}/N={}/L={}/seed={}", self.task, self.algorithm, self.n, self.l, self.seed)
    }
}

/// Vectorization counts for one embedding dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorizeSummary {
    pub n: usize,
    pub vocab_size: usize,
    pub tweets: usize,
    pub all_oov_tweets: usize,
    pub used_tokens: usize,
    pub skipped_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub results: Vec<SweepResult>,
    pub vectorize: Vec<VectorizeSummary>,
    #[serde(skip)]
    pub embeddings_trained: usize,
    #[serde(skip)]
    pub embedding_cache_hits: usize,
}

/// Runs every configured cell. Inputs that cannot be read are fatal; any
/// later failure is recorded in the affected cells only.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Runtime(e.to_string()))?;
    pool.install(|| run_in_pool(config))
}

fn run_in_pool(config: &SweepConfig) -> Result<SweepOutcome> {
    let corpus = load_corpus(&config.tweets, &config.labels, &config.tokenizer, config.min_tokens)?;
    let train_tweets = corpus.tweets_with_role(Role::Train);
    let vocab = build_vocab(&train_tweets, config.embedding.min_count)?;
    let cache = EmbeddingCache::new(config.cache_dir());
    log::info!(
        "{} accounts, {} posts, vocabulary {} words",
        corpus.accounts().len(),
        corpus.tweets().len(),
        vocab.len()
    );

    let mut results = Vec::new();
    let mut summaries = Vec::new();
    for &n in &config.n_values {
        let seed = derive_seed(config.seeds[0], &format!("embedding/{n}"));
        let sgns = config.embedding.sgns(n, seed, config.deterministic);
        let prepared = cache.get_or_train(&train_tweets, &vocab, &sgns).and_then(|(vocab, table)| {
            let (vectors, report) = vectorize_tweets(corpus.tweets(), &table, &vocab)?;
            summaries.push(VectorizeSummary {
                n,
                vocab_size: vocab.len(),
                tweets: report.tweets_in,
                all_oov_tweets: report.all_oov_tweets,
                used_tokens: report.used_tokens,
                skipped_tokens: report.skipped_tokens,
            });
            Ok(vectors)
        });

        // per L: datasets of every task, or the reason they could not be built
        let per_l: Vec<(usize, Result<LDatasets>)> = config
            .l_values
            .par_iter()
            .map(|&l| {
                let built = match &prepared {
                    Err(e) => Err(Error::Runtime(format!("embedding for N={n} failed: {e}"))),
                    Ok(vectors) => make_role_blocks(&corpus, vectors, l).and_then(|blocks| {
                        let sets = config
                            .tasks
                            .iter()
                            .map(|&task| task_datasets(&corpus, &blocks, task))
                            .collect::<Result<Vec<_>>>()?;
                        Ok((sets, blocks.dropped_tweets))
                    }),
                };
                (l, built)
            })
            .collect();

        let mut cells = Vec::new();
        for (ti, &task) in config.tasks.iter().enumerate() {
            for &algorithm in &config.algorithms {
                for (li, (l, _)) in per_l.iter().enumerate() {
                    for &seed in &config.seeds {
                        cells.push((ti, task, algorithm, li, *l, seed));
                    }
                }
            }
        }
        let mut done: Vec<SweepResult> = cells
            .par_iter()
            .map(|&(ti, task, algorithm, li, l, seed)| {
                let mut result = SweepResult {
                    task,
                    algorithm,
                    n,
                    l,
                    seed,
                    status: CellStatus::Failed,
                    report: None,
                    best_params: None,
                    cv_accuracy: None,
                    train_blocks: 0,
                    test_blocks: 0,
                    dropped_tweets: 0,
                    timing: None,
                    error: None,
                };
                let outcome = match &per_l[li].1 {
                    Err(e) => Err(Error::Runtime(e.to_string())),
                    Ok((sets, dropped)) => {
                        let (train, test) = &sets[ti];
                        result.train_blocks = train.len();
                        result.test_blocks = test.len();
                        result.dropped_tweets = *dropped;
                        config.candidates(algorithm).and_then(|grid| {
                            let cell_seed = derive_seed(seed, &format!("{task}/{algorithm}/{n}/{l}"));
                            run_cell(train, test, &grid, config.folds, cell_seed, n, l)
                        })
                    }
                };
                match outcome {
                    Ok(run) => {
                        result.status = CellStatus::Ok;
                        result.cv_accuracy = Some(run.cv.mean_scores[run.cv.best_index]);
                        result.best_params = Some(run.cv.best);
                        result.report = Some(run.report);
                        result.timing = (!config.deterministic).then_some(run.timing);
                    }
                    Err(e) => {
                        log::warn!("cell {} failed: {e}", result.cell_key());
                        result.error = Some(e.to_string());
                    }
                }
                result
            })
            .collect();
        results.append(&mut done);
    }

    let position = |r: &SweepResult| {
        (
            index_of(&config.tasks, &r.task),
            index_of(&config.algorithms, &r.algorithm),
            index_of(&config.n_values, &r.n),
            index_of(&config.l_values, &r.l),
            index_of(&config.seeds, &r.seed),
        )
    };
    results.sort_by_key(position);
    Ok(SweepOutcome {
        results,
        vectorize: summaries,
        embeddings_trained: cache.trained(),
        embedding_cache_hits: cache.hits(),
    })
}

fn index_of<T: PartialEq>(items: &[T], x: &T) -> usize {
    items.iter().position(|y| y == x).unwrap_or(usize::MAX)
}
