//! Post and account ingestion.
//!
//! Posts arrive as JSON lines, account labels as CSV. Tokenization is
//! pluggable through [`TokenizerSpec`]; the default splits on Unicode
//! whitespace and normalizes URLs and mentions to sentinel tokens.

mod labels;
mod tokenize;
mod tweets;

pub use labels::{load_labels, read_labels, write_labels, AgeGroup, Gender, LabeledAccount, Occupation, Role};
pub use tokenize::{tokenize_default, ExternalTokenizer, Tokenizer, UnicodeTokenizer, MENTION_TOKEN, URL_TOKEN};
pub use tweets::{
    filter_short, ingest_tweets, parse_tweets, write_tweets, TokenizerMode, TokenizerSpec, TweetRecord,
};

use std::collections::{HashMap, HashSet};

use crate::{Error, Result};

/// Default minimum token count for a post to be kept.
pub const DEFAULT_MIN_TOKENS: usize = 4;

/// Posts joined with the labels of their authors.
#[derive(Debug, Clone)]
pub struct Corpus {
    accounts: Vec<LabeledAccount>,
    tweets: Vec<TweetRecord>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    /// Joins posts to accounts. Every post must belong to a labeled account.
    pub fn join(accounts: Vec<LabeledAccount>, tweets: Vec<TweetRecord>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(accounts.len());
        for (i, account) in accounts.iter().enumerate() {
            if by_id.insert(account.account_id.clone(), i).is_some() {
                return Err(Error::Data(format!(
                    "duplicate account_id '{}'",
                    account.account_id
                )));
            }
        }
        let mut missing = HashSet::new();
        for tweet in &tweets {
            if !by_id.contains_key(&tweet.account_id) {
                missing.insert(tweet.account_id.as_str());
            }
        }
        if !missing.is_empty() {
            let mut missing: Vec<_> = missing.into_iter().collect();
            missing.sort_unstable();
            return Err(Error::Data(format!(
                "posts reference unlabeled accounts: {}",
                missing.join(", ")
            )));
        }
        Ok(Corpus {
            accounts,
            tweets,
            by_id,
        })
    }

    pub fn accounts(&self) -> &[LabeledAccount] {
        &self.accounts
    }

    pub fn tweets(&self) -> &[TweetRecord] {
        &self.tweets
    }

    pub fn account(&self, id: &str) -> Option<&LabeledAccount> {
        self.by_id.get(id).map(|&i| &self.accounts[i])
    }

    /// Posts whose author has the given role, in corpus order.
    pub fn tweets_with_role(&self, role: Role) -> Vec<TweetRecord> {
        self.tweets
            .iter()
            .filter(|t| self.account(&t.account_id).map(|a| a.role) == Some(role))
            .cloned()
            .collect()
    }

    pub fn accounts_with_role(&self, role: Role) -> Vec<LabeledAccount> {
        self.accounts
            .iter()
            .filter(|a| a.role == role)
            .cloned()
            .collect()
    }

    /// Drops posts shorter than `min_tokens` across both roles.
    pub fn filter_short(self, min_tokens: usize) -> Result<Self> {
        let tweets = filter_short(self.tweets, min_tokens)?;
        Ok(Corpus { tweets, ..self })
    }
}
