//! Planted-signal corpora for demos and tests.
//!
//! Every post mixes words from a shared vocabulary with marker words owned
//! by the author's class. Marker words are `<task>_<class>_<j>`, shared words
//! `w<j>`. Class labels are balanced per attribute and assigned through a
//! seeded shuffle, so attributes are independent of each other.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{write_labels, write_tweets, AgeGroup, Gender, LabeledAccount, Occupation, Role, TweetRecord};
use crate::seed::{derive_seed, rng_from_seed};
use crate::vectorize::{AccountLabels, Task};
use crate::{Error, Result};

/// Marker words for one attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub task: Task,
    /// Probability that a token is a marker of the author's class.
    pub rate: f64,
    /// Per-class overrides of `rate`, keyed by class name.
    pub class_rates: BTreeMap<String, f64>,
}

impl Signal {
    pub fn new(task: Task, rate: f64) -> Self {
        Signal {
            task,
            rate,
            class_rates: BTreeMap::new(),
        }
    }

    pub fn with_class_rate(mut self, class: &str, rate: f64) -> Self {
        self.class_rates.insert(class.to_string(), rate);
        self
    }

    fn rate_for(&self, class: &str) -> f64 {
        self.class_rates.get(class).copied().unwrap_or(self.rate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub accounts: usize,
    pub tweets_per_account: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub shared_vocab: usize,
    pub markers_per_class: usize,
    pub signals: Vec<Signal>,
    pub test_accounts: usize,
    /// Test accounts are spread evenly over this attribute's classes.
    pub stratify_by: Task,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            accounts: 40,
            tweets_per_account: 300,
            min_tokens: 8,
            max_tokens: 15,
            shared_vocab: 500,
            markers_per_class: 50,
            signals: vec![Signal::new(Task::Gender, 0.2)],
            test_accounts: 8,
            stratify_by: Task::Gender,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub accounts: Vec<LabeledAccount>,
    pub tweets: Vec<TweetRecord>,
}

impl SynthCorpus {
    /// Writes `tweets.jsonl` and `labels.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_tweets(&dir.join("tweets.jsonl"), &self.tweets)?;
        write_labels(&dir.join("labels.csv"), &self.accounts)
    }
}

fn class_count(task: Task) -> usize {
    task.class_names().len()
}

/// Balanced class ids `0..k` over `n` slots, shuffled.
fn balanced(n: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..n).map(|i| i % k).collect();
    ids.shuffle(rng);
    ids
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    if config.accounts == 0 || config.tweets_per_account == 0 {
        return Err(Error::Parameter("accounts and tweets_per_account must be positive".into()));
    }
    if config.min_tokens == 0 || config.min_tokens > config.max_tokens || config.shared_vocab == 0 {
        return Err(Error::Parameter("need 1 <= min_tokens <= max_tokens and a shared vocabulary".into()));
    }
    if config.test_accounts >= config.accounts {
        return Err(Error::Parameter("test_accounts must leave some training accounts".into()));
    }
    let mut rng = rng_from_seed(derive_seed(config.seed, "synth/labels"));
    let gender = balanced(config.accounts, class_count(Task::Gender), &mut rng);
    let occupation = balanced(config.accounts, class_count(Task::Occupation), &mut rng);
    let age = balanced(config.accounts, class_count(Task::AgeGroup), &mut rng);
    let age_of = |c: usize| if c == 0 { AgeGroup::DigitalNative } else { AgeGroup::DigitalImmigrant };

    let mut accounts: Vec<LabeledAccount> = (0..config.accounts)
        .map(|i| LabeledAccount {
            account_id: format!("acct{i:03}"),
            gender: Gender::ALL[gender[i]],
            occupation: Occupation::ALL[occupation[i]],
            age_group: age_of(age[i]),
            role: Role::Train,
        })
        .collect();

    // the last accounts of each class become test accounts, round-robin
    let k = class_count(config.stratify_by);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, a) in accounts.iter().enumerate() {
        let class = config
            .stratify_by
            .class_of(&AccountLabels::from(a))
            .expect("generated labels are known");
        by_class[class].push(i);
    }
    let mut remaining = config.test_accounts;
    while remaining > 0 {
        let before = remaining;
        for members in by_class.iter_mut() {
            if remaining == 0 {
                break;
            }
            if let Some(i) = members.pop() {
                accounts[i].role = Role::Test;
                remaining -= 1;
            }
        }
        if remaining == before {
            break;
        }
    }

    let tweets = accounts
        .iter()
        .flat_map(|a| account_tweets(config, a))
        .collect();
    Ok(SynthCorpus { accounts, tweets })
}

fn account_tweets(config: &SynthConfig, account: &LabeledAccount) -> Vec<TweetRecord> {
    let mut rng = rng_from_seed(derive_seed(config.seed, &format!("synth/tweets/{}", account.account_id)));
    let labels = AccountLabels::from(account);
    let markers: Vec<(String, f64)> = config
        .signals
        .iter()
        .filter_map(|s| {
            let class = s.task.class_of(&labels)?;
            let name = &s.task.class_names()[class];
            Some((format!("{}_{}", s.task, name), s.rate_for(name)))
        })
        .collect();
    (0..config.tweets_per_account)
        .map(|seq| {
            let len = rng.random_range(config.min_tokens..=config.max_tokens);
            let tokens: Vec<String> = (0..len)
                .map(|_| {
                    let mut u: f64 = rng.random();
                    for (prefix, rate) in &markers {
                        if u < *rate {
                            return format!("{prefix}_{}", rng.random_range(0..config.markers_per_class.max(1)));
                        }
                        u -= rate;
                    }
                    format!("w{}", rng.random_range(0..config.shared_vocab))
                })
                .collect();
            TweetRecord {
                account_id: account.account_id.clone(),
                seq: seq as u64,
                text: tokens.join(" "),
                tokens,
            }
        })
        .collect()
}

/// Posts in which `a` and `b` always co-occur, as do `c` and `d`, never
/// across the pairs. Each post also carries four filler words from its
/// cluster's pool: `f0..f14` with `a b`, `f15..f29` with `c d`.
pub fn two_cluster_tweets(posts: usize, seed: u64) -> Vec<TweetRecord> {
    let mut rng = rng_from_seed(derive_seed(seed, "synth/two-cluster"));
    (0..posts)
        .map(|seq| {
            let (mut tokens, fillers): (Vec<String>, _) = if seq % 2 == 0 {
                (vec!["a".into(), "b".into()], 0..15)
            } else {
                (vec!["c".into(), "d".into()], 15..30)
            };
            tokens.extend((0..4).map(|_| format!("f{}", rng.random_range(fillers.clone()))));
            tokens.shuffle(&mut rng);
            TweetRecord {
                account_id: format!("u{}", seq % 10),
                seq: (seq / 10) as u64,
                text: tokens.join(" "),
                tokens,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_balance() {
        let corpus = generate(&SynthConfig::default()).unwrap();
        assert_eq!(corpus.accounts.len(), 40);
        assert_eq!(corpus.tweets.len(), 40 * 300);
        let test: Vec<&LabeledAccount> = corpus.accounts.iter().filter(|a| a.role == Role::Test).collect();
        assert_eq!(test.len(), 8);
        assert_eq!(test.iter().filter(|a| a.gender == Gender::Male).count(), 4);
        assert_eq!(corpus.accounts.iter().filter(|a| a.gender == Gender::Male).count(), 20);
        assert!(corpus.tweets.iter().all(|t| (8..=15).contains(&t.tokens.len())));
    }

    #[test]
    fn marker_rate_is_respected() {
        let corpus = generate(&SynthConfig::default()).unwrap();
        let tokens: Vec<&String> = corpus.tweets.iter().flat_map(|t| &t.tokens).collect();
        let markers = tokens.iter().filter(|t| t.starts_with("gender_")).count();
        let rate = markers as f64 / tokens.len() as f64;
        assert!((rate - 0.2).abs() < 0.01, "{rate}");
        for t in &corpus.tweets {
            let a = corpus.accounts.iter().find(|a| a.account_id == t.account_id).unwrap();
            let own = format!("gender_{}_", a.gender);
            assert!(t.tokens.iter().filter(|w| w.starts_with("gender_")).all(|w| w.starts_with(&own)));
        }
    }

    #[test]
    fn class_rate_overrides() {
        let config = SynthConfig {
            signals: vec![Signal::new(Task::Gender, 0.05).with_class_rate("female", 0.15)],
            ..SynthConfig::default()
        };
        let corpus = generate(&config).unwrap();
        let count = |prefix: &str| {
            corpus
                .tweets
                .iter()
                .flat_map(|t| &t.tokens)
                .filter(|w| w.starts_with(prefix))
                .count() as f64
        };
        let ratio = count("gender_female_") / count("gender_male_");
        assert!((ratio - 3.0).abs() < 0.3, "{ratio}");
    }

    #[test]
    fn generation_is_seeded() {
        let a = generate(&SynthConfig::default()).unwrap();
        let b = generate(&SynthConfig::default()).unwrap();
        assert_eq!(a.tweets, b.tweets);
        assert_eq!(a.accounts, b.accounts);
        let c = generate(&SynthConfig {
            seed: 2,
            ..SynthConfig::default()
        })
        .unwrap();
        assert_ne!(a.tweets, c.tweets);
    }

    #[test]
    fn two_cluster_pairs_never_mix() {
        for t in two_cluster_tweets(200, 1) {
            let has = |w: &str| t.tokens.iter().any(|x| x == w);
            assert_eq!(has("a"), has("b"));
            assert_eq!(has("c"), has("d"));
            assert_ne!(has("a"), has("c"));
            let filler = |w: &String| w.strip_prefix('f').map(|n| n.parse::<usize>().unwrap());
            for n in t.tokens.iter().filter_map(filler) {
                assert_eq!(n < 15, has("a"));
            }
        }
    }
}
