use std::collections::HashMap;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tokenize::{tokenize_default, ExternalTokenizer};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub account_id: String,
    /// Position within the account's timeline, starting at 0.
    pub seq: u64,
    pub text: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerMode {
    #[default]
    UnicodeDefault,
    Pretokenized,
    ExternalCommand,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenizerSpec {
    #[serde(default)]
    pub mode: TokenizerMode,
    #[serde(default)]
    pub external_command: Option<String>,
}

impl TokenizerSpec {
    pub fn unicode() -> Self {
        TokenizerSpec::default()
    }

    pub fn pretokenized() -> Self {
        TokenizerSpec {
            mode: TokenizerMode::Pretokenized,
            external_command: None,
        }
    }

    pub fn external(command: impl Into<String>) -> Self {
        TokenizerSpec {
            mode: TokenizerMode::ExternalCommand,
            external_command: Some(command.into()),
        }
    }
}

#[derive(Deserialize)]
struct RawTweet {
    account_id: String,
    text: String,
    #[serde(default)]
    tokens: Option<Vec<String>>,
    #[serde(default)]
    timestamp: Option<i64>,
}

#[derive(Serialize)]
struct OutTweet<'a> {
    account_id: &'a str,
    text: &'a str,
    tokens: &'a [String],
    seq: u64,
}

/// Reads a JSON-lines post file and tokenizes every record.
pub fn ingest_tweets(path: &Path, tokenizer: &TokenizerSpec) -> Result<Vec<TweetRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_tweets(file, path, tokenizer)
}

/// Parses JSON-lines posts from a reader; `origin` is used in error messages.
///
/// Records come back in file order with per-account `seq` numbers 0, 1, 2, ….
/// When every post of an account carries a timestamp, the account's posts are
/// ordered by timestamp instead (stable on ties) and its file slots are
/// refilled in that order, so `seq` still increases along the output.
pub fn parse_tweets<R: Read>(mut reader: R, origin: &Path, tokenizer: &TokenizerSpec) -> Result<Vec<TweetRecord>> {
    if tokenizer.mode == TokenizerMode::ExternalCommand && tokenizer.external_command.is_none() {
        return Err(Error::Parameter("external_command tokenizer requires a command".into()));
    }
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes).map_err(|e| Error::io(origin, e))?;

    let lines: Vec<(usize, &[u8])> = bytes
        .split(|&b| b == b'\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix(b"\r").unwrap_or(l)))
        .filter(|(_, l)| !l.iter().all(u8::is_ascii_whitespace))
        .collect();

    let pretokenized = tokenizer.mode == TokenizerMode::Pretokenized;
    let parsed: Vec<(RawTweet, Vec<String>, usize)> = lines
        .par_iter()
        .map(|&(line, raw)| {
            let text = std::str::from_utf8(raw)
                .map_err(|e| Error::parse(origin, line, format!("invalid UTF-8: {e}")))?;
            let mut record: RawTweet = serde_json::from_str(text)
                .map_err(|e| Error::parse(origin, line, format!("malformed record: {e}")))?;
            let tokens = match tokenizer.mode {
                TokenizerMode::UnicodeDefault => tokenize_default(&record.text),
                TokenizerMode::Pretokenized => record
                    .tokens
                    .take()
                    .ok_or_else(|| Error::parse(origin, line, "pretokenized mode requires a tokens field"))?,
                TokenizerMode::ExternalCommand => Vec::new(),
            };
            if pretokenized && tokens.iter().any(|t| t.is_empty() || t.chars().any(char::is_whitespace)) {
                return Err(Error::parse(origin, line, "tokens must be non-empty and whitespace-free"));
            }
            Ok((record, tokens, line))
        })
        .collect::<Result<_>>()?;

    let mut parsed = parsed;
    if tokenizer.mode == TokenizerMode::ExternalCommand {
        let command = tokenizer.external_command.as_deref().unwrap_or_default();
        let texts: Vec<&str> = parsed.iter().map(|(r, _, _)| r.text.as_str()).collect();
        let tokenized = ExternalTokenizer::new(command).tokenize_batch(&texts)?;
        for (entry, tokens) in parsed.iter_mut().zip(tokenized) {
            entry.1 = tokens;
        }
    }

    // Per account: file slots, and whether every record is timestamped.
    let mut slots: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, (record, _, _)) in parsed.iter().enumerate() {
        slots.entry(record.account_id.as_str()).or_default().push(i);
    }
    let mut order: Vec<usize> = (0..parsed.len()).collect();
    let mut seqs = vec![0u64; parsed.len()];
    for positions in slots.values() {
        let mut members = positions.clone();
        if members.iter().all(|&i| parsed[i].0.timestamp.is_some()) {
            members.sort_by_key(|&i| parsed[i].0.timestamp);
        }
        for (seq, (&slot, &member)) in positions.iter().zip(&members).enumerate() {
            order[slot] = member;
            seqs[member] = seq as u64;
        }
    }

    let mut taken: Vec<Option<(RawTweet, Vec<String>, usize)>> = parsed.into_iter().map(Some).collect();
    Ok(order
        .into_iter()
        .map(|i| {
            let (raw, tokens, _) = taken[i].take().expect("each record placed once");
            TweetRecord {
                account_id: raw.account_id,
                seq: seqs[i],
                text: raw.text,
                tokens,
            }
        })
        .collect())
}

/// Keeps records with at least `min_tokens` tokens, preserving order and `seq`.
pub fn filter_short(tweets: Vec<TweetRecord>, min_tokens: usize) -> Result<Vec<TweetRecord>> {
    if min_tokens < 1 {
        return Err(Error::Parameter("min_tokens must be at least 1".into()));
    }
    Ok(tweets.into_iter().filter(|t| t.tokens.len() >= min_tokens).collect())
}

/// Writes records as JSON lines carrying their tokens, readable back in
/// pretokenized mode.
pub fn write_tweets(path: &Path, tweets: &[TweetRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for t in tweets {
        let line = serde_json::to_string(&OutTweet {
            account_id: &t.account_id,
            text: &t.text,
            tokens: &t.tokens,
            seq: t.seq,
        })
        .map_err(|e| Error::Runtime(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
