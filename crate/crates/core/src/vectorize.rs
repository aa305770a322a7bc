//! Post vectors, per-account blocks, and labeled task datasets.
//!
//! A post vector is the mean of the word vectors of its in-vocabulary
//! tokens; out-of-vocabulary tokens are skipped and counted. A block is the
//! mean of `L` consecutive post vectors from one account.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AgeGroup, Gender, LabeledAccount, Occupation, Role, TweetRecord};
use crate::embedding::{Vocabulary, WordVectorTable};
use crate::{Error, Matrix, Result};

/// Attribute to predict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Gender,
    Occupation,
    AgeGroup,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Gender, Task::Occupation, Task::AgeGroup];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Gender => "gender",
            Task::Occupation => "occupation",
            Task::AgeGroup => "age_group",
        }
    }

    /// Fixed class order; class ids index into this list.
    pub fn class_names(self) -> Vec<String> {
        match self {
            Task::Gender => Gender::ALL.iter().map(|g| g.as_str().to_string()).collect(),
            Task::Occupation => Occupation::ALL.iter().map(|o| o.as_str().to_string()).collect(),
            Task::AgeGroup => vec![
                AgeGroup::DigitalNative.as_str().to_string(),
                AgeGroup::DigitalImmigrant.as_str().to_string(),
            ],
        }
    }

    /// Class treated as positive for binary metrics.
    pub fn positive_class(self) -> Option<&'static str> {
        match self {
            Task::Gender => Some(Gender::Male.as_str()),
            Task::AgeGroup => Some(AgeGroup::DigitalImmigrant.as_str()),
            Task::Occupation => None,
        }
    }

    /// Class id of an account for this task; `None` when the label is unusable.
    pub fn class_of(self, labels: &AccountLabels) -> Option<usize> {
        match self {
            Task::Gender => Gender::ALL.iter().position(|&g| g == labels.gender),
            Task::Occupation => Occupation::ALL.iter().position(|&o| o == labels.occupation),
            Task::AgeGroup => match labels.age_group {
                AgeGroup::DigitalNative => Some(0),
                AgeGroup::DigitalImmigrant => Some(1),
                AgeGroup::Unknown => None,
            },
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown task '{s}' (expected gender, occupation or age_group)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountLabels {
    pub gender: Gender,
    pub occupation: Occupation,
    pub age_group: AgeGroup,
}

impl From<&LabeledAccount> for AccountLabels {
    fn from(a: &LabeledAccount) -> Self {
        AccountLabels {
            gender: a.gender,
            occupation: a.occupation,
            age_group: a.age_group,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TweetVector {
    pub account_id: String,
    pub seq: u64,
    pub vec: Vec<f64>,
    pub used_tokens: usize,
    pub skipped_tokens: usize,
}

/// Mean of the in-vocabulary word vectors of a post, or `None` when no token
/// is in the vocabulary.
pub fn tweet_vector(record: &TweetRecord, table: &WordVectorTable, vocab: &Vocabulary) -> Option<TweetVector> {
    let mut sum = vec![0.0f64; table.dim()];
    let mut used = 0usize;
    for token in &record.tokens {
        if let Some(id) = vocab.id(token) {
            for (s, &v) in sum.iter_mut().zip(table.row(id)) {
                *s += v as f64;
            }
            used += 1;
        }
    }
    if used == 0 {
        return None;
    }
    let n = used as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Some(TweetVector {
        account_id: record.account_id.clone(),
        seq: record.seq,
        vec: sum,
        used_tokens: used,
        skipped_tokens: record.tokens.len() - used,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorizeReport {
    pub tweets_in: usize,
    pub tweets_out: usize,
    /// Posts dropped because every token was out of vocabulary.
    pub all_oov_tweets: usize,
    pub used_tokens: usize,
    pub skipped_tokens: usize,
}

/// Vectorizes posts in parallel, preserving input order.
pub fn vectorize_tweets(
    records: &[TweetRecord],
    table: &WordVectorTable,
    vocab: &Vocabulary,
) -> Result<(Vec<TweetVector>, VectorizeReport)> {
    if table.len() != vocab.len() {
        return Err(Error::Data(format!(
            "vector table has {} rows, vocabulary has {} words",
            table.len(),
            vocab.len()
        )));
    }
    let out: Vec<Option<TweetVector>> = records.par_iter().map(|r| tweet_vector(r, table, vocab)).collect();
    let mut report = VectorizeReport {
        tweets_in: records.len(),
        ..Default::default()
    };
    let mut vectors = Vec::with_capacity(out.len());
    for (record, v) in records.iter().zip(out) {
        match v {
            Some(v) => {
                report.used_tokens += v.used_tokens;
                report.skipped_tokens += v.skipped_tokens;
                vectors.push(v);
            }
            None => {
                report.all_oov_tweets += 1;
                report.skipped_tokens += record.tokens.len();
            }
        }
    }
    report.tweets_out = vectors.len();
    Ok((vectors, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSample {
    pub account_id: String,
    pub block_index: usize,
    pub vec: Vec<f64>,
    pub size: usize,
    pub labels: AccountLabels,
}

/// Groups one account's post vectors (sorted by `seq`) into consecutive,
/// non-overlapping blocks of exactly `block_size`. Returns the blocks and the
/// number of trailing posts dropped.
pub fn make_blocks(
    account: &LabeledAccount,
    vectors: &[&TweetVector],
    block_size: usize,
) -> Result<(Vec<BlockSample>, usize)> {
    if block_size < 1 {
        return Err(Error::Parameter("block size must be at least 1".into()));
    }
    for v in vectors {
        if v.account_id != account.account_id {
            return Err(Error::Data(format!(
                "post of '{}' passed to blocks of '{}'",
                v.account_id, account.account_id
            )));
        }
    }
    if vectors.windows(2).any(|w| w[0].seq >= w[1].seq) {
        return Err(Error::Data(format!(
            "posts of '{}' are not sorted by seq",
            account.account_id
        )));
    }
    let labels = AccountLabels::from(account);
    let blocks = vectors
        .chunks_exact(block_size)
        .enumerate()
        .map(|(block_index, members)| {
            let dim = members[0].vec.len();
            let mut mean = vec![0.0f64; dim];
            for m in members {
                for (acc, &x) in mean.iter_mut().zip(&m.vec) {
                    *acc += x;
                }
            }
            mean.iter_mut().for_each(|x| *x /= block_size as f64);
            BlockSample {
                account_id: account.account_id.clone(),
                block_index,
                vec: mean,
                size: block_size,
                labels,
            }
        })
        .collect();
    Ok((blocks, vectors.len() % block_size))
}

#[derive(Debug, Clone, Default)]
pub struct BlockSet {
    pub blocks: Vec<BlockSample>,
    pub dropped_tweets: usize,
}

/// Builds blocks for every account in `accounts` order. Vectors must belong
/// to listed accounts; they are sorted by `seq` per account first.
pub fn build_blocks(accounts: &[LabeledAccount], vectors: &[TweetVector], block_size: usize) -> Result<BlockSet> {
    let position: HashMap<&str, usize> = accounts
        .iter()
        .enumerate()
        .map(|(i, a)| (a.account_id.as_str(), i))
        .collect();
    let mut grouped: Vec<Vec<&TweetVector>> = vec![Vec::new(); accounts.len()];
    for v in vectors {
        let i = *position
            .get(v.account_id.as_str())
            .ok_or_else(|| Error::Data(format!("post vector for unknown account '{}'", v.account_id)))?;
        grouped[i].push(v);
    }
    for g in &mut grouped {
        g.sort_by_key(|v| v.seq);
    }
    let per_account: Vec<(Vec<BlockSample>, usize)> = accounts
        .par_iter()
        .zip(grouped.par_iter())
        .map(|(account, vs)| make_blocks(account, vs, block_size))
        .collect::<Result<_>>()?;

    let mut set = BlockSet::default();
    for (blocks, dropped) in per_account {
        set.blocks.extend(blocks);
        set.dropped_tweets += dropped;
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset {
    pub task: Task,
    pub rows: Matrix,
    pub labels: Vec<usize>,
    /// Owning account of each row.
    pub groups: Vec<String>,
    pub block_index: Vec<usize>,
    pub class_names: Vec<String>,
}

impl TaskDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Sorted ids of the classes that occur in `labels`.
    pub fn present_classes(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n_classes()];
        for &l in &self.labels {
            seen[l] = true;
        }
        (0..seen.len()).filter(|&c| seen[c]).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> TaskDataset {
        TaskDataset {
            task: self.task,
            rows: self.rows.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            groups: indices.iter().map(|&i| self.groups[i].clone()).collect(),
            block_index: indices.iter().map(|&i| self.block_index[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn class_id(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    /// Writes `account_id,block_index,label,v0..v{N-1}`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        let mut header = String::from("account_id,block_index,label");
        for j in 0..self.dim() {
            header.push_str(&format!(",v{j}"));
        }
        writeln!(out, "{header}").map_err(io)?;
        for i in 0..self.len() {
            let mut line = format!(
                "{},{},{}",
                csv_field(&self.groups[i]),
                self.block_index[i],
                self.class_names[self.labels[i]]
            );
            for v in self.rows.row(i) {
                line.push_str(&format!(",{v}"));
            }
            writeln!(out, "{line}").map_err(io)?;
        }
        out.flush().map_err(io)
    }

    /// Reads a dump written by [`TaskDataset::write_csv`].
    pub fn read_csv(path: &Path, task: Task) -> Result<TaskDataset> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| Error::parse(path, 1, e.to_string()))?;
        let header = reader
            .headers()
            .map_err(|e| Error::parse(path, 1, e.to_string()))?
            .clone();
        let dim = header.len().saturating_sub(3);
        if header.len() < 4 || &header[0] != "account_id" || &header[1] != "block_index" || &header[2] != "label" {
            return Err(Error::parse(path, 1, "expected header account_id,block_index,label,v0,…"));
        }
        let class_names = task.class_names();
        let mut data = Vec::new();
        let (mut labels, mut groups, mut block_index) = (Vec::new(), Vec::new(), Vec::new());
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| Error::parse(path, line, e.to_string()))?;
            if record.len() != dim + 3 {
                return Err(Error::parse(path, line, format!("expected {} fields", dim + 3)));
            }
            groups.push(record[0].to_string());
            block_index.push(
                record[1]
                    .parse()
                    .map_err(|_| Error::parse(path, line, "invalid block_index"))?,
            );
            labels.push(
                class_names
                    .iter()
                    .position(|c| c == &record[2])
                    .ok_or_else(|| Error::parse(path, line, format!("unknown {task} label '{}'", &record[2])))?,
            );
            for field in record.iter().skip(3) {
                data.push(
                    field
                        .parse::<f64>()
                        .map_err(|_| Error::parse(path, line, format!("invalid number '{field}'")))?,
                );
            }
        }
        Ok(TaskDataset {
            task,
            rows: Matrix::from_vec(labels.len(), dim, data)?,
            labels,
            groups,
            block_index,
            class_names,
        })
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per block of accounts with the requested role. Blocks of accounts
/// whose label is unusable for `task` (unknown age group) are left out.
pub fn assemble_dataset(blocks: &[BlockSample], accounts: &[LabeledAccount], task: Task, role: Role) -> Result<TaskDataset> {
    let by_id: HashMap<&str, &LabeledAccount> = accounts.iter().map(|a| (a.account_id.as_str(), a)).collect();
    let dim = blocks.first().map_or(0, |b| b.vec.len());
    let mut data = Vec::with_capacity(blocks.len() * dim);
    let (mut labels, mut groups, mut block_index) = (Vec::new(), Vec::new(), Vec::new());
    for block in blocks {
        let account = by_id
            .get(block.account_id.as_str())
            .ok_or_else(|| Error::Data(format!("block references missing account '{}'", block.account_id)))?;
        if account.role != role {
            return Err(Error::Data(format!(
                "block of {} account '{}' in a {} dataset",
                account.role, account.account_id, role
            )));
        }
        if block.vec.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: block.vec.len(),
            });
        }
        let Some(label) = task.class_of(&AccountLabels::from(*account)) else {
            continue;
        };
        data.extend_from_slice(&block.vec);
        labels.push(label);
        groups.push(block.account_id.clone());
        block_index.push(block.block_index);
    }
    Ok(TaskDataset {
        task,
        rows: Matrix::from_vec(labels.len(), dim, data)?,
        labels,
        groups,
        block_index,
        class_names: task.class_names(),
    })
}
