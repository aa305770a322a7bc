use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use attrsense_core::corpus::{write_labels, write_tweets, Corpus, Role, TokenizerSpec};
use attrsense_core::embedding::{build_vocab, load_vectors, save_vectors, train_sgns_with_stats, SgnsConfig};
use attrsense_core::eval::{account_vote, cross_validate, group_votes, MetricsReport, REPORT_CSV_HEADER};
use attrsense_core::models::{self, TrainedModel};
use attrsense_core::seed::derive_seed;
use attrsense_core::sweep::{
    default_grid, emit_report, load_corpus, load_outcome, make_role_blocks, run_sweep, task_datasets, vectorize_corpus,
    SweepConfig,
};
use attrsense_core::synth::{generate, Signal, SynthConfig};
use attrsense_core::vectorize::{Task, TaskDataset};
use serde::{Deserialize, Serialize};

use crate::{
    Cli, Command, EvaluateArgs, IngestArgs, InputArgs, ReportArgs, SweepArgs, SynthArgs, TokenizerArg, TrainArgs,
    TrainEmbeddingsArgs, VectorizeArgs,
};

const DEFAULT_SEED: u64 = 1;

/// Runs one subcommand and returns its one-line summary.
pub fn run(cli: &Cli) -> Result<String> {
    if let Some(threads) = cli.threads {
        if !matches!(cli.command, Command::Sweep(_)) {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build_global()
                .context("configuring worker threads")?;
        }
    }
    match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::TrainEmbeddings(a) => train_embeddings(cli, a),
        Command::Vectorize(a) => vectorize(a),
        Command::Train(a) => train(cli, a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(cli, a),
        Command::Report(a) => report(a),
        Command::Synth(a) => synth(cli, a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| attrsense_core::Error::io(dir, e))?;
    Ok(())
}

fn tokenizer(input: &InputArgs) -> Result<TokenizerSpec> {
    Ok(match input.tokenizer {
        TokenizerArg::Unicode => TokenizerSpec::unicode(),
        TokenizerArg::Pretokenized => TokenizerSpec::pretokenized(),
        TokenizerArg::External => match &input.tokenizer_command {
            Some(cmd) => TokenizerSpec::external(cmd.clone()),
            None => bail!(attrsense_core::Error::Parameter(
                "--tokenizer external needs --tokenizer-command".into()
            )),
        },
    })
}

fn corpus(input: &InputArgs) -> Result<Corpus> {
    Ok(load_corpus(&input.tweets, &input.labels, &tokenizer(input)?, input.min_tokens)?)
}

fn ingest(a: &IngestArgs) -> Result<String> {
    let accounts = attrsense_core::corpus::load_labels(&a.input.labels)?;
    let records = attrsense_core::corpus::ingest_tweets(&a.input.tweets, &tokenizer(&a.input)?)?;
    let total = records.len();
    let corpus = Corpus::join(accounts, records)?.filter_short(a.input.min_tokens)?;
    create_dir(&a.out)?;
    let tweets_path = a.out.join("tweets.jsonl");
    let labels_path = a.out.join("labels.csv");
    write_tweets(&tweets_path, corpus.tweets())?;
    write_labels(&labels_path, corpus.accounts())?;
    Ok(format!(
        "ingested {} posts from {} accounts ({} short posts dropped) -> {}",
        corpus.tweets().len(),
        corpus.accounts().len(),
        total - corpus.tweets().len(),
        a.out.display()
    ))
}

fn train_embeddings(cli: &Cli, a: &TrainEmbeddingsArgs) -> Result<String> {
    let corpus = corpus(&a.input)?;
    let tweets = corpus.tweets_with_role(Role::Train);
    let config = SgnsConfig {
        dim: a.dim,
        window: a.window,
        epochs: a.epochs,
        negatives: a.negatives,
        min_count: a.min_count,
        seed: cli.seed.unwrap_or(DEFAULT_SEED),
        threads: if cli.deterministic { 1 } else { cli.threads.unwrap_or(1).max(1) },
        ..SgnsConfig::default()
    };
    config.validate()?;
    let vocab = build_vocab(&tweets, config.min_count)?;
    let (table, stats) = train_sgns_with_stats(&tweets, &vocab, &config)?;
    create_dir(&a.out)?;
    let path = a.out.join(format!("vectors-{}.vec", a.dim));
    save_vectors(&table, &vocab, &path)?;
    let last_loss = stats.epoch_losses.last().copied().unwrap_or(f64::NAN);
    Ok(format!(
        "trained {}-dim vectors for {} words on {} posts (final epoch loss {:.4}) -> {}",
        a.dim,
        vocab.len(),
        tweets.len(),
        last_loss,
        path.display()
    ))
}

/// Dataset provenance written next to vectorized datasets.
#[derive(Debug, Serialize, Deserialize)]
struct DatasetMeta {
    task: Task,
    n: usize,
    l: usize,
}

fn vectorize(a: &VectorizeArgs) -> Result<String> {
    if a.block_size == 0 {
        bail!(attrsense_core::Error::Parameter("--block-size must be at least 1".into()));
    }
    let corpus = corpus(&a.input)?;
    let (vocab, table) = load_vectors(&a.vectors)?;
    let (vectors, report) = vectorize_corpus(&corpus, &vocab, &table)?;
    let blocks = make_role_blocks(&corpus, &vectors, a.block_size)?;
    let (train, test) = task_datasets(&corpus, &blocks, a.task)?;
    create_dir(&a.out)?;
    train.write_csv(&a.out.join("train.csv"))?;
    test.write_csv(&a.out.join("test.csv"))?;
    let meta = DatasetMeta {
        task: a.task,
        n: table.dim(),
        l: a.block_size,
    };
    let meta_path = a.out.join("meta.json");
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
        .map_err(|e| attrsense_core::Error::io(&meta_path, e))?;
    Ok(format!(
        "{} train and {} test blocks of {} posts ({} posts fully out of vocabulary, {} left over) -> {}",
        train.len(),
        test.len(),
        a.block_size,
        report.all_oov_tweets,
        blocks.dropped_tweets,
        a.out.display()
    ))
}

fn train(cli: &Cli, a: &TrainArgs) -> Result<String> {
    let ds = TaskDataset::read_csv(&a.dataset, a.task)?;
    let grid = match &a.config {
        Some(path) => SweepConfig::load(path)?.candidates(a.algo)?,
        None => default_grid(a.algo),
    };
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let cv = cross_validate(&ds, &grid, a.folds, derive_seed(seed, "cv"))?;
    let model = models::train(&ds, &cv.best, derive_seed(seed, "fit"))?;
    create_dir(&a.out)?;
    let model_path = a.out.join("model.json");
    model.save(&model_path)?;
    let cv_path = a.out.join("cv.json");
    std::fs::write(&cv_path, serde_json::to_string_pretty(&cv)?).map_err(|e| attrsense_core::Error::io(&cv_path, e))?;
    Ok(format!(
        "trained {} on {} blocks (best {}, cv accuracy {:.4}) -> {}",
        a.algo,
        ds.len(),
        cv.best.summary(),
        cv.mean_scores[cv.best_index],
        model_path.display()
    ))
}

fn task_of(model: &TrainedModel) -> Result<Task> {
    Task::ALL
        .into_iter()
        .find(|t| t.class_names() == model.class_names)
        .ok_or_else(|| attrsense_core::Error::Data("model classes match no task; pass --task".into()).into())
}

fn evaluate(a: &EvaluateArgs) -> Result<String> {
    let model = TrainedModel::load(&a.model)?;
    let task = match a.task {
        Some(t) => t,
        None => task_of(&model)?,
    };
    let ds = TaskDataset::read_csv(&a.dataset, task)?;
    let meta_path = a.dataset.parent().unwrap_or(Path::new("")).join("meta.json");
    let l = match a.block_size {
        Some(l) => l,
        None => std::fs::read_to_string(&meta_path)
            .ok()
            .and_then(|t| serde_json::from_str::<DatasetMeta>(&t).ok())
            .map_or(0, |m| m.l),
    };
    let predictions = model.predict(&ds.rows)?;
    let report = MetricsReport::compute(task, model.algorithm, model.dim, l, &ds.labels, &predictions)?;
    let votes = account_vote(&group_votes(&ds.groups, &predictions)?)?;
    let mut truth_by_account = std::collections::BTreeMap::new();
    for (g, &label) in ds.groups.iter().zip(&ds.labels) {
        truth_by_account.insert(g.clone(), label);
    }

    create_dir(&a.out)?;
    let csv_path = a.out.join("metrics.csv");
    let mut csv_text = REPORT_CSV_HEADER.join(",");
    csv_text.push('\n');
    csv_text.push_str(&report.csv_fields().join(","));
    csv_text.push('\n');
    std::fs::write(&csv_path, csv_text).map_err(|e| attrsense_core::Error::io(&csv_path, e))?;
    let json_path = a.out.join("metrics.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&report)?)
        .map_err(|e| attrsense_core::Error::io(&json_path, e))?;
    let votes_path = a.out.join("account_votes.csv");
    let mut votes_text = String::from("account_id,predicted,actual\n");
    let mut correct = 0;
    for (account, &label) in &votes {
        let actual = truth_by_account[account];
        correct += usize::from(actual == label);
        votes_text.push_str(&format!(
            "{account},{},{}\n",
            model.class_names[label], model.class_names[actual]
        ));
    }
    std::fs::write(&votes_path, votes_text).map_err(|e| attrsense_core::Error::io(&votes_path, e))?;

    let auc = report.auc.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"));
    Ok(format!(
        "accuracy {:.4} f1 {:.4} auc {} on {} blocks; account-level accuracy {:.4} over {} accounts -> {}",
        report.accuracy,
        report.f1,
        auc,
        ds.len(),
        if votes.is_empty() { 0.0 } else { correct as f64 / votes.len() as f64 },
        votes.len(),
        a.out.display()
    ))
}

fn sweep(cli: &Cli, a: &SweepArgs) -> Result<String> {
    let mut config = SweepConfig::load(&a.config)?;
    if let Some(out) = &a.out {
        config.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seeds = vec![seed];
    }
    if cli.threads.is_some() {
        config.threads = cli.threads;
    }
    config.deterministic |= cli.deterministic;
    let outcome = run_sweep(&config)?;
    let files = emit_report(&outcome, &config.out)?;
    let failed = outcome.results.iter().filter(|r| !r.is_ok()).count();
    Ok(format!(
        "{} cells ({} failed), {} embeddings trained, {} loaded from cache -> {}",
        outcome.results.len(),
        failed,
        outcome.embeddings_trained,
        outcome.embedding_cache_hits,
        files.results_csv.display()
    ))
}

fn report(a: &ReportArgs) -> Result<String> {
    let source: PathBuf = a.results.clone().unwrap_or_else(|| a.out.join("results.json"));
    let outcome = load_outcome(&source)?;
    let files = emit_report(&outcome, &a.out)?;
    Ok(format!(
        "reported {} cells -> {}",
        outcome.results.len(),
        files.summary.display()
    ))
}

fn synth(cli: &Cli, a: &SynthArgs) -> Result<String> {
    let config = SynthConfig {
        accounts: a.accounts,
        tweets_per_account: a.tweets_per_account,
        signals: Task::ALL.iter().map(|&t| Signal::new(t, a.marker_rate)).collect(),
        test_accounts: a.test_accounts,
        stratify_by: Task::Occupation,
        seed: cli.seed.unwrap_or(DEFAULT_SEED),
        ..SynthConfig::default()
    };
    let corpus = generate(&config)?;
    corpus.write(&a.out)?;
    Ok(format!(
        "wrote {} posts from {} accounts -> {}",
        corpus.tweets.len(),
        corpus.accounts.len(),
        a.out.display()
    ))
}
