//! Skip-gram with negative sampling (SGNS).
//!
//! For a center word with input vector `x`, an observed context with output
//! vector `c`, and sampled noise words with output vectors `n_j`, the pair loss
//! is `-ln σ(c·x) - Σ_j ln σ(-n_j·x)`. Training runs plain SGD on that loss.
//!
//! With `threads > 1` workers update the shared tables without locks
//! (hogwild): each component is an `AtomicU32` holding `f32` bits, read and
//! written with relaxed ordering. Concurrent read-modify-write sequences on
//! the same component may lose an update; that is accepted as an approximate
//! gradient step. With one thread training is fully deterministic.

use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sampler::NegativeSampler;
use super::{Vocabulary, WordVectorTable};
use crate::corpus::TweetRecord;
use crate::seed::{derive_seed, rng_from_seed};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub initial_lr: f64,
    pub min_count: u64,
    pub subsample_threshold: Option<f64>,
    pub seed: u64,
    /// Worker threads; more than one enables lock-free asynchronous updates.
    pub threads: usize,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dim: 100,
            window: 5,
            epochs: 20,
            negatives: 5,
            initial_lr: 0.025,
            min_count: 1,
            subsample_threshold: None,
            seed: 1,
            threads: 1,
        }
    }
}

impl SgnsConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("window", self.window),
            ("epochs", self.epochs),
            ("negatives", self.negatives),
            ("threads", self.threads),
        ];
        for (name, value) in positive {
            if value < 1 {
                return Err(Error::Parameter(format!("{name} must be at least 1")));
            }
        }
        if !(self.initial_lr.is_finite() && self.initial_lr > 0.0) {
            return Err(Error::Parameter("initial_lr must be positive".into()));
        }
        if let Some(t) = self.subsample_threshold {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Parameter("subsample_threshold must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairGradients {
    pub loss: f64,
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// `ln(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Loss of one (center, context) pair with its noise words, and the exact
/// gradients with respect to every input vector.
pub fn sgns_pair_objective<N: AsRef<[f64]>>(center: &[f64], context: &[f64], negatives: &[N]) -> Result<PairGradients> {
    let dim = center.len();
    let check = |v: &[f64]| {
        if v.len() == dim {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: dim,
                got: v.len(),
            })
        }
    };
    check(context)?;
    for n in negatives {
        check(n.as_ref())?;
    }

    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();

    let pos = dot(context, center);
    // d/dz softplus(-z) = σ(z) - 1
    let pos_coef = sigmoid(pos) - 1.0;
    let mut loss = softplus(-pos);
    let mut d_center: Vec<f64> = context.iter().map(|c| pos_coef * c).collect();
    let d_context: Vec<f64> = center.iter().map(|x| pos_coef * x).collect();

    let mut d_negatives = Vec::with_capacity(negatives.len());
    for n in negatives {
        let n = n.as_ref();
        let z = dot(n, center);
        loss += softplus(z);
        let coef = sigmoid(z);
        for (g, v) in d_center.iter_mut().zip(n) {
            *g += coef * v;
        }
        d_negatives.push(center.iter().map(|x| coef * x).collect());
    }

    Ok(PairGradients {
        loss,
        center: d_center,
        context: d_context,
        negatives: d_negatives,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SgnsStats {
    /// Mean pair loss per epoch, measured during the epoch.
    pub epoch_losses: Vec<f64>,
    /// In-vocabulary token positions per epoch, before subsampling.
    pub train_tokens: u64,
    /// Tokens absent from the vocabulary, skipped once per corpus pass.
    pub skipped_tokens: u64,
    pub pair_updates: u64,
}

pub fn train_sgns(tweets: &[TweetRecord], vocab: &Vocabulary, config: &SgnsConfig) -> Result<WordVectorTable> {
    train_sgns_with_stats(tweets, vocab, config).map(|(table, _)| table)
}

/// Trains skip-gram vectors. Context windows never cross post boundaries.
pub fn train_sgns_with_stats(
    tweets: &[TweetRecord],
    vocab: &Vocabulary,
    config: &SgnsConfig,
) -> Result<(WordVectorTable, SgnsStats)> {
    config.validate()?;
    if vocab.is_empty() {
        return Err(Error::Data("empty vocabulary".into()));
    }

    let mut skipped = 0u64;
    let mut sentences: Vec<Vec<u32>> = Vec::with_capacity(tweets.len());
    for tweet in tweets {
        let ids: Vec<u32> = tweet
            .tokens
            .iter()
            .filter_map(|t| {
                let id = vocab.id(t);
                if id.is_none() {
                    skipped += 1;
                }
                id.map(|i| i as u32)
            })
            .collect();
        if !ids.is_empty() {
            sentences.push(ids);
        }
    }
    let train_tokens: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    if train_tokens == 0 {
        return Err(Error::Data("no in-vocabulary tokens to train on".into()));
    }

    let counts: Vec<u64> = if vocab.counts().iter().any(|&c| c > 0) {
        vocab.counts().to_vec()
    } else {
        // vocabulary without counts: recount from the corpus
        let mut c = vec![0u64; vocab.len()];
        for s in &sentences {
            for &id in s {
                c[id as usize] += 1;
            }
        }
        c
    };
    let sampler = NegativeSampler::new(&counts, NegativeSampler::DEFAULT_POWER)?;
    let keep_prob = keep_probabilities(&counts, config.subsample_threshold);

    let dim = config.dim;
    let n_words = vocab.len();
    let mut init_rng = rng_from_seed(derive_seed(config.seed, "sgns/init"));
    let input = SharedRows::new(
        (0..n_words * dim)
            .map(|_| (init_rng.random::<f32>() - 0.5) / dim as f32)
            .collect(),
    );
    let output = SharedRows::new(vec![0.0; n_words * dim]);

    let threads = config.threads.min(sentences.len()).max(1);
    let shards = shard_by_tokens(&sentences, threads);
    let trainer = Trainer {
        input: &input,
        output: &output,
        sampler: &sampler,
        keep_prob: &keep_prob,
        dim,
        window: config.window,
        negatives: config.negatives,
        initial_lr: config.initial_lr as f32,
        scheduled: (config.epochs as u64 * train_tokens) as f64,
        progress: AtomicU64::new(0),
        epochs: config.epochs,
    };

    let worker_results: Vec<WorkerTotals> = if shards.len() == 1 {
        vec![trainer.run(shards[0], rng_from_seed(derive_seed(config.seed, "sgns/worker/0")))]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = shards
                .iter()
                .enumerate()
                .map(|(w, shard)| {
                    let rng = rng_from_seed(derive_seed(config.seed, &format!("sgns/worker/{w}")));
                    let trainer = &trainer;
                    scope.spawn(move || trainer.run(shard, rng))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("sgns worker panicked")).collect()
        })
    };

    let mut epoch_loss = vec![0.0f64; config.epochs];
    let mut epoch_pairs = vec![0u64; config.epochs];
    for totals in &worker_results {
        for e in 0..config.epochs {
            epoch_loss[e] += totals.loss[e];
            epoch_pairs[e] += totals.pairs[e];
        }
    }
    let stats = SgnsStats {
        epoch_losses: epoch_loss
            .iter()
            .zip(&epoch_pairs)
            .map(|(&l, &p)| if p == 0 { 0.0 } else { l / p as f64 })
            .collect(),
        train_tokens,
        skipped_tokens: skipped,
        pair_updates: epoch_pairs.iter().sum(),
    };

    let table = WordVectorTable::with_context(dim, input.into_vec(), output.into_vec());
    if !table.is_finite() {
        return Err(Error::Runtime("training diverged: non-finite vectors".into()));
    }
    Ok((table, stats))
}

fn keep_probabilities(counts: &[u64], threshold: Option<f64>) -> Option<Vec<f32>> {
    let t = threshold?;
    let total: u64 = counts.iter().sum();
    Some(
        counts
            .iter()
            .map(|&c| {
                if c == 0 {
                    return 1.0;
                }
                let f = c as f64 / total as f64;
                (((f / t).sqrt() + 1.0) * t / f).min(1.0) as f32
            })
            .collect(),
    )
}

/// Splits sentences into `n` contiguous shards of roughly equal token mass.
fn shard_by_tokens(sentences: &[Vec<u32>], n: usize) -> Vec<&[Vec<u32>]> {
    if n <= 1 {
        return vec![sentences];
    }
    let total: usize = sentences.iter().map(Vec::len).sum();
    let target = total.div_ceil(n);
    let mut shards = Vec::with_capacity(n);
    let mut start = 0;
    let mut acc = 0;
    for (i, s) in sentences.iter().enumerate() {
        acc += s.len();
        if acc >= target && shards.len() + 1 < n {
            shards.push(&sentences[start..=i]);
            start = i + 1;
            acc = 0;
        }
    }
    if start < sentences.len() {
        shards.push(&sentences[start..]);
    }
    shards
}

/// Row-major `f32` storage that tolerates unsynchronized concurrent updates.
pub(crate) struct SharedRows {
    data: Vec<AtomicU32>,
}

impl SharedRows {
    pub(crate) fn new(values: Vec<f32>) -> Self {
        SharedRows {
            data: values.into_iter().map(|v| AtomicU32::new(v.to_bits())).collect(),
        }
    }

    #[inline]
    fn get(&self, i: usize) -> f32 {
        f32::from_bits(self.data[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn set(&self, i: usize, v: f32) {
        self.data[i].store(v.to_bits(), Ordering::Relaxed);
    }

    pub(crate) fn into_vec(self) -> Vec<f32> {
        self.data.into_iter().map(|a| f32::from_bits(a.into_inner())).collect()
    }
}

/// One SGD step on a center word against `(target, label)` pairs, where the
/// first target is the observed context (label 1) and the rest are noise
/// words (label 0). Returns the pair loss before the update.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn pair_update(
    input: &SharedRows,
    output: &SharedRows,
    dim: usize,
    center: usize,
    targets: &[(usize, f32)],
    lr: f32,
    x: &mut [f32],
    grad: &mut [f32],
) -> f64 {
    let base = center * dim;
    for (k, v) in x.iter_mut().enumerate() {
        *v = input.get(base + k);
    }
    grad.fill(0.0);
    let mut loss = 0.0f64;
    for &(target, label) in targets {
        let tbase = target * dim;
        let mut f = 0.0f32;
        for (k, &xv) in x.iter().enumerate() {
            f += xv * output.get(tbase + k);
        }
        let f64v = f as f64;
        loss += if label > 0.5 { softplus(-f64v) } else { softplus(f64v) };
        let g = (label - sigmoid(f64v) as f32) * lr;
        for (k, &xv) in x.iter().enumerate() {
            let c = output.get(tbase + k);
            grad[k] += g * c;
            output.set(tbase + k, c + g * xv);
        }
    }
    for (k, &gv) in grad.iter().enumerate() {
        input.set(base + k, input.get(base + k) + gv);
    }
    loss
}

struct Trainer<'a> {
    input: &'a SharedRows,
    output: &'a SharedRows,
    sampler: &'a NegativeSampler,
    keep_prob: &'a Option<Vec<f32>>,
    dim: usize,
    window: usize,
    negatives: usize,
    initial_lr: f32,
    scheduled: f64,
    progress: AtomicU64,
    epochs: usize,
}

struct WorkerTotals {
    loss: Vec<f64>,
    pairs: Vec<u64>,
}

const PROGRESS_BATCH: u64 = 1024;
const MIN_LR_FRACTION: f32 = 1e-4;

impl Trainer<'_> {
    fn learning_rate(&self, processed: u64) -> f32 {
        let frac = (processed as f64 / self.scheduled).min(1.0) as f32;
        self.initial_lr * (1.0 - (1.0 - MIN_LR_FRACTION) * frac).max(MIN_LR_FRACTION)
    }

    fn run(&self, shard: &[Vec<u32>], mut rng: ChaCha8Rng) -> WorkerTotals {
        let mut totals = WorkerTotals {
            loss: vec![0.0; self.epochs],
            pairs: vec![0; self.epochs],
        };
        let mut x = vec![0.0f32; self.dim];
        let mut grad = vec![0.0f32; self.dim];
        let mut targets: Vec<(usize, f32)> = Vec::with_capacity(self.negatives + 1);
        let mut kept: Vec<u32> = Vec::new();
        let mut local_progress = 0u64;
        let mut lr = self.learning_rate(self.progress.load(Ordering::Relaxed));

        for epoch in 0..self.epochs {
            for sentence in shard {
                kept.clear();
                match self.keep_prob {
                    Some(p) => kept.extend(sentence.iter().copied().filter(|&w| {
                        let keep = p[w as usize];
                        keep >= 1.0 || rng.random::<f32>() < keep
                    })),
                    None => kept.extend_from_slice(sentence),
                }

                for pos in 0..kept.len() {
                    let center = kept[pos] as usize;
                    let reach = rng.random_range(1..=self.window);
                    let lo = pos.saturating_sub(reach);
                    let hi = (pos + reach).min(kept.len() - 1);
                    for (ctx_pos, &context) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                        if ctx_pos == pos {
                            continue;
                        }
                        let context = context as usize;
                        targets.clear();
                        targets.push((context, 1.0));
                        for _ in 0..self.negatives {
                            let noise = self.sampler.sample(&mut rng);
                            if noise != context {
                                targets.push((noise, 0.0));
                            }
                        }
                        totals.loss[epoch] += pair_update(
                            self.input,
                            self.output,
                            self.dim,
                            center,
                            &targets,
                            lr,
                            &mut x,
                            &mut grad,
                        );
                        totals.pairs[epoch] += 1;
                    }
                }

                local_progress += sentence.len() as u64;
                if local_progress >= PROGRESS_BATCH {
                    let done = self.progress.fetch_add(local_progress, Ordering::Relaxed) + local_progress;
                    local_progress = 0;
                    lr = self.learning_rate(done);
                }
            }
        }
        self.progress.fetch_add(local_progress, Ordering::Relaxed);
        totals
    }
}
