use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{TokenizerSpec, DEFAULT_MIN_TOKENS};
use crate::embedding::SgnsConfig;
use crate::models::{Algorithm, HyperParams};
use crate::vectorize::Task;
use crate::{Error, Result};

/// Embedding settings shared by every `N`; `dim` and `seed` are set per `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSettings {
    pub window: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub initial_lr: f64,
    pub min_count: u64,
    pub subsample_threshold: Option<f64>,
    /// Training threads when not in deterministic mode.
    pub threads: usize,
}

impl Default for EmbeddingSettings {
    fn default() -> Self {
        let d = SgnsConfig::default();
        EmbeddingSettings {
            window: d.window,
            epochs: d.epochs,
            negatives: d.negatives,
            initial_lr: d.initial_lr,
            min_count: d.min_count,
            subsample_threshold: d.subsample_threshold,
            threads: 1,
        }
    }
}

impl EmbeddingSettings {
    pub fn sgns(&self, dim: usize, seed: u64, deterministic: bool) -> SgnsConfig {
        SgnsConfig {
            dim,
            window: self.window,
            epochs: self.epochs,
            negatives: self.negatives,
            initial_lr: self.initial_lr,
            min_count: self.min_count,
            subsample_threshold: self.subsample_threshold,
            seed,
            threads: if deterministic { 1 } else { self.threads.max(1) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub tweets: PathBuf,
    pub labels: PathBuf,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Defaults to `<out>/cache`; the `ATTRSENSE_CACHE` variable overrides both.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<Task>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_n_values")]
    pub n_values: Vec<usize>,
    #[serde(default = "default_l_values")]
    pub l_values: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_min_tokens")]
    pub min_tokens: usize,
    #[serde(default)]
    pub tokenizer: TokenizerSpec,
    #[serde(default)]
    pub deterministic: bool,
    /// Worker threads for cells; `None` uses every core.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub embedding: EmbeddingSettings,
    /// Per-algorithm lists of candidate values, keyed by parameter name.
    #[serde(default)]
    pub grid: BTreeMap<Algorithm, toml::Table>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_tasks() -> Vec<Task> {
    Task::ALL.to_vec()
}
fn default_algorithms() -> Vec<Algorithm> {
    Algorithm::ALL.to_vec()
}
fn default_n_values() -> Vec<usize> {
    vec![50, 200, 500]
}
fn default_l_values() -> Vec<usize> {
    vec![1, 50, 100, 200, 300]
}
fn default_seeds() -> Vec<u64> {
    vec![1]
}
fn default_folds() -> usize {
    crate::eval::DEFAULT_FOLDS
}
fn default_min_tokens() -> usize {
    DEFAULT_MIN_TOKENS
}

impl SweepConfig {
    /// Minimal configuration with every default.
    pub fn new(tweets: impl Into<PathBuf>, labels: impl Into<PathBuf>) -> Self {
        SweepConfig {
            tweets: tweets.into(),
            labels: labels.into(),
            out: default_out(),
            cache_dir: None,
            tasks: default_tasks(),
            algorithms: default_algorithms(),
            n_values: default_n_values(),
            l_values: default_l_values(),
            seeds: default_seeds(),
            folds: default_folds(),
            min_tokens: default_min_tokens(),
            tokenizer: TokenizerSpec::default(),
            deterministic: false,
            threads: None,
            embedding: EmbeddingSettings::default(),
            grid: BTreeMap::new(),
        }
    }

    /// Reads a TOML file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse(&text, path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.tweets, &mut config.labels, &mut config.out] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(dir) = config.cache_dir.as_mut() {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(config)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let config: SweepConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            Error::parse(origin, line, e.message().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("tasks", self.tasks.is_empty()),
            ("algorithms", self.algorithms.is_empty()),
            ("n_values", self.n_values.is_empty()),
            ("l_values", self.l_values.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ];
        for (name, empty) in lists {
            if empty {
                return Err(Error::Parameter(format!("{name} must not be empty")));
            }
        }
        let duplicated = has_duplicates(&self.tasks)
            || has_duplicates(&self.algorithms)
            || has_duplicates(&self.n_values)
            || has_duplicates(&self.l_values)
            || has_duplicates(&self.seeds);
        if duplicated {
            return Err(Error::Parameter("tasks, algorithms, n_values, l_values and seeds must not repeat".into()));
        }
        if self.n_values.contains(&0) || self.l_values.contains(&0) {
            return Err(Error::Parameter("n_values and l_values must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(Error::Parameter("folds must be at least 2".into()));
        }
        for algorithm in &self.algorithms {
            self.candidates(*algorithm)?;
        }
        self.embedding.sgns(self.n_values[0], 0, true).validate()
    }

    /// Resolved embedding cache directory.
    pub fn cache_dir(&self) -> PathBuf {
        if let Some(dir) = std::env::var_os("ATTRSENSE_CACHE").filter(|v| !v.is_empty()) {
            return PathBuf::from(dir);
        }
        self.cache_dir.clone().unwrap_or_else(|| self.out.join("cache"))
    }

    /// Hyperparameter candidates of `algorithm`, in grid order.
    pub fn candidates(&self, algorithm: Algorithm) -> Result<Vec<HyperParams>> {
        match self.grid.get(&algorithm) {
            Some(table) => expand_grid(algorithm, table),
            None => Ok(default_grid(algorithm)),
        }
    }
}

fn has_duplicates<T: PartialEq>(items: &[T]) -> bool {
    items.iter().enumerate().any(|(i, x)| items[..i].contains(x))
}

/// Built-in candidate lists used when the configuration gives none.
pub fn default_grid(algorithm: Algorithm) -> Vec<HyperParams> {
    let table: toml::Table = match algorithm {
        Algorithm::LinearSvc => toml::toml! { c = [0.1, 1.0, 10.0] },
        Algorithm::Knn => toml::toml! { k = [1, 5, 15] },
        Algorithm::Adaboost => toml::toml! { rounds = [50, 100] },
        Algorithm::RandomForest => toml::toml! { trees = [100] },
        Algorithm::NeuralNet => toml::Table::new(),
    };
    expand_grid(algorithm, &table).expect("built-in grids are valid")
}

/// Cartesian product over the listed values, keys in sorted order with the
/// last key varying fastest. A scalar counts as a one-element list;
/// unlisted parameters keep their defaults.
pub fn expand_grid(algorithm: Algorithm, table: &toml::Table) -> Result<Vec<HyperParams>> {
    let axes: Vec<(&String, Vec<serde_json::Value>)> = table
        .iter()
        .map(|(key, value)| {
            let values = match value {
                toml::Value::Array(items) => items.clone(),
                other => vec![other.clone()],
            };
            if values.is_empty() {
                return Err(Error::Parameter(format!("grid.{algorithm}.{key} is an empty list")));
            }
            let values = values
                .into_iter()
                .map(|v| serde_json::to_value(v).map_err(|e| Error::Parameter(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            Ok((key, values))
        })
        .collect::<Result<_>>()?;

    let base = serde_json::to_value(algorithm.default_params()).expect("params serialize");
    let mut combos: Vec<serde_json::Value> = vec![base];
    for (key, values) in &axes {
        let mut next = Vec::with_capacity(combos.len() * values.len());
        for combo in &combos {
            for v in values {
                let mut c = combo.clone();
                c[key.as_str()] = v.clone();
                next.push(c);
            }
        }
        combos = next;
    }
    combos
        .into_iter()
        .map(|c| {
            serde_json::from_value(c).map_err(|e| Error::Parameter(format!("grid.{algorithm}: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{KnnParams, SvcParams};

    fn parse(text: &str) -> Result<SweepConfig> {
        SweepConfig::parse(text, Path::new("sweep.toml"))
    }

    #[test]
    fn defaults_fill_in() {
        let c = parse("tweets = \"t.jsonl\"\nlabels = \"l.csv\"\n").unwrap();
        assert_eq!(c.n_values, vec![50, 200, 500]);
        assert_eq!(c.l_values, vec![1, 50, 100, 200, 300]);
        assert_eq!(c.tasks.len() * c.algorithms.len() * c.n_values.len() * c.l_values.len(), 225);
        assert_eq!(c.folds, 10);
        assert_eq!(c.embedding.window, 5);
        assert_eq!(c.embedding.epochs, 20);
    }

    #[test]
    fn grid_product_and_scalars() {
        let c = parse(
            "tweets = \"t\"\nlabels = \"l\"\n[grid.linear_svc]\nc = [0.001, 1.0]\nepochs = 5\n[grid.knn]\nk = [1, 3]\n",
        )
        .unwrap();
        let svc = c.candidates(Algorithm::LinearSvc).unwrap();
        assert_eq!(
            svc,
            vec![
                HyperParams::LinearSvc(SvcParams { c: 0.001, epochs: 5, ..SvcParams::default() }),
                HyperParams::LinearSvc(SvcParams { c: 1.0, epochs: 5, ..SvcParams::default() }),
            ]
        );
        assert_eq!(c.candidates(Algorithm::Knn).unwrap()[1], HyperParams::Knn(KnnParams { k: 3 }));
        assert_eq!(c.candidates(Algorithm::NeuralNet).unwrap().len(), 1);
    }

    #[test]
    fn typos_and_empty_lists_are_rejected() {
        assert!(parse("tweets = \"t\"\nlabels = \"l\"\n[grid.knn]\nkk = [1]\n").is_err());
        assert!(parse("tweets = \"t\"\nlabels = \"l\"\nn_values = []\n").is_err());
        assert!(parse("tweets = \"t\"\nlabels = \"l\"\nl_values = [0]\n").is_err());
        assert!(parse("tweets = \"t\"\nlabels = \"l\"\nbogus = 1\n").is_err());
        let err = parse("tweets = \"t\"\nlabels = \"l\"\nfolds = \"x\"\n").unwrap_err();
        assert!(err.to_string().contains("sweep.toml:3:"), "{err}");
    }

    #[test]
    fn paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.toml");
        std::fs::write(&path, "tweets = \"data/t.jsonl\"\nlabels = \"/abs/l.csv\"\ncache_dir = \"c\"\n").unwrap();
        let c = SweepConfig::load(&path).unwrap();
        assert_eq!(c.tweets, dir.path().join("data/t.jsonl"));
        assert_eq!(c.labels, PathBuf::from("/abs/l.csv"));
        assert_eq!(c.out, dir.path().join("out"));
        assert_eq!(c.cache_dir, Some(dir.path().join("c")));
    }

    #[test]
    fn built_in_grids_are_valid() {
        for a in Algorithm::ALL {
            assert!(!default_grid(a).is_empty());
            assert!(default_grid(a).iter().all(|p| p.algorithm() == a));
        }
    }
}
