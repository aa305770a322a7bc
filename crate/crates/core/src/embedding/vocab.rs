use std::collections::HashMap;

use crate::corpus::TweetRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
    counts: Vec<u64>,
    total_tokens: u64,
}

impl Vocabulary {
    /// Vocabulary without counts, as recovered from a vector file.
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate word '{w}'")));
            }
        }
        let counts = vec![0; words.len()];
        Ok(Vocabulary {
            words,
            index,
            counts,
            total_tokens: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, word: &str) -> u64 {
        self.id(word).map_or(0, |i| self.counts[i])
    }

    /// Token count before `min_count` pruning.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }
}

/// Counts tokens and keeps words seen at least `min_count` times, ordered by
/// descending count with lexicographic tie-breaking.
pub fn build_vocab(tweets: &[TweetRecord], min_count: u64) -> Result<Vocabulary> {
    let mut counter: HashMap<&str, u64> = HashMap::new();
    let mut total = 0u64;
    for tweet in tweets {
        for token in &tweet.tokens {
            *counter.entry(token.as_str()).or_default() += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::Data("cannot build a vocabulary from an empty corpus".into()));
    }
    let mut entries: Vec<(&str, u64)> = counter.into_iter().filter(|&(_, c)| c >= min_count).collect();
    entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let words: Vec<String> = entries.iter().map(|(w, _)| w.to_string()).collect();
    let counts = entries.iter().map(|&(_, c)| c).collect();
    let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    Ok(Vocabulary {
        words,
        index,
        counts,
        total_tokens: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn tweet(tokens: &[&str]) -> TweetRecord {
        TweetRecord {
            account_id: "a".into(),
            seq: 0,
            text: String::new(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn counts_and_orders() {
        let v = build_vocab(&[tweet(&["a", "a", "b"])], 1).unwrap();
        assert_eq!(v.words(), ["a", "b"]);
        assert_eq!(v.counts(), [2, 1]);
        assert_eq!(v.total_tokens(), 3);

        let v = build_vocab(&[tweet(&["a", "a", "b"])], 2).unwrap();
        assert_eq!(v.words(), ["a"]);
        assert_eq!(v.total_tokens(), 3);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(build_vocab(&[], 1).is_err());
        assert!(build_vocab(&[tweet(&[])], 1).is_err());
    }

    #[test]
    fn matches_brute_force_counter() {
        let tweets = [
            tweet(&["the", "cat", "sat", "on", "the", "mat"]),
            tweet(&["a", "dog", "sat"]),
            tweet(&["the", "dog", "ran"]),
            tweet(&["cat", "and", "dog"]),
            tweet(&["zebra"]),
            tweet(&["the", "end", "the", "end"]),
        ];
        // independent pass: ordered map counts, then a stable sort by count
        let mut oracle: BTreeMap<String, u64> = BTreeMap::new();
        for t in &tweets {
            for tok in &t.tokens {
                *oracle.entry(tok.clone()).or_insert(0) += 1;
            }
        }
        let mut expected: Vec<(String, u64)> = oracle.into_iter().collect();
        expected.sort_by_key(|e| std::cmp::Reverse(e.1));

        let v = build_vocab(&tweets, 1).unwrap();
        let got: Vec<(String, u64)> = v.words().iter().cloned().zip(v.counts().iter().copied()).collect();
        assert_eq!(got, expected);
        assert_eq!(v.total_tokens(), expected.iter().map(|e| e.1).sum::<u64>());
        for (i, w) in v.words().iter().enumerate() {
            assert_eq!(v.id(w), Some(i));
        }
    }
}
