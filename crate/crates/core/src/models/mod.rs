//! Five classifier families behind one train/predict contract.
//!
//! Linear SVC, k-NN and the neural net standardize features with statistics
//! fit on the training rows; AdaBoost and the random forest use raw features.
//! Every family breaks ties explicitly (lowest class id or lowest row index)
//! so results are reproducible across implementations.

mod adaboost;
mod forest;
mod knn;
mod mlp;
mod standardize;
mod svc;

pub use adaboost::{AdaBoostModel, AdaBoostParams, Stump};
pub use forest::{DecisionTree, ForestModel, ForestParams};
pub use knn::{KnnModel, KnnParams};
pub use mlp::{Activation, Mlp, MlpModel, MlpParams};
pub use standardize::Standardizer;
pub use svc::{LinearSvcModel, SvcParams};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::vectorize::TaskDataset;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    LinearSvc,
    Knn,
    Adaboost,
    RandomForest,
    NeuralNet,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::LinearSvc,
        Algorithm::Knn,
        Algorithm::Adaboost,
        Algorithm::RandomForest,
        Algorithm::NeuralNet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::LinearSvc => "linear_svc",
            Algorithm::Knn => "knn",
            Algorithm::Adaboost => "adaboost",
            Algorithm::RandomForest => "random_forest",
            Algorithm::NeuralNet => "neural_net",
        }
    }

    pub fn default_params(self) -> HyperParams {
        match self {
            Algorithm::LinearSvc => HyperParams::LinearSvc(SvcParams::default()),
            Algorithm::Knn => HyperParams::Knn(KnnParams::default()),
            Algorithm::Adaboost => HyperParams::Adaboost(AdaBoostParams::default()),
            Algorithm::RandomForest => HyperParams::RandomForest(ForestParams::default()),
            Algorithm::NeuralNet => HyperParams::NeuralNet(MlpParams::default()),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                Error::Parameter(format!(
                    "unknown algorithm '{s}' (expected linear_svc, knn, adaboost, random_forest or neural_net)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum HyperParams {
    LinearSvc(SvcParams),
    Knn(KnnParams),
    Adaboost(AdaBoostParams),
    RandomForest(ForestParams),
    NeuralNet(MlpParams),
}

impl HyperParams {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            HyperParams::LinearSvc(_) => Algorithm::LinearSvc,
            HyperParams::Knn(_) => Algorithm::Knn,
            HyperParams::Adaboost(_) => Algorithm::Adaboost,
            HyperParams::RandomForest(_) => Algorithm::RandomForest,
            HyperParams::NeuralNet(_) => Algorithm::NeuralNet,
        }
    }

    /// Compact single-line rendering, used in reports.
    pub fn summary(&self) -> String {
        match self {
            HyperParams::LinearSvc(p) => format!("C={} epochs={}", p.c, p.epochs),
            HyperParams::Knn(p) => format!("k={}", p.k),
            HyperParams::Adaboost(p) => format!("rounds={}", p.rounds),
            HyperParams::RandomForest(p) => format!(
                "trees={} max_depth={}",
                p.trees,
                p.max_depth.map_or("none".to_string(), |d| d.to_string())
            ),
            HyperParams::NeuralNet(p) => format!(
                "hidden={:?} activation={} lr={}",
                p.hidden,
                p.activation.as_str(),
                p.lr
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelState {
    LinearSvc(LinearSvcModel),
    Knn(KnnModel),
    Adaboost(AdaBoostModel),
    RandomForest(ForestModel),
    NeuralNet(MlpModel),
}

/// A trained classifier. Immutable after training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub algorithm: Algorithm,
    pub params: HyperParams,
    pub class_names: Vec<String>,
    pub dim: usize,
    pub seed: u64,
    pub state: ModelState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub labels: Vec<usize>,
    /// One row per input, one column per class.
    pub scores: Matrix,
}

impl Predictions {
    /// Single ranking score per row for binary tasks: the positive class
    /// score minus the other class score.
    pub fn positive_scores(&self, positive: usize) -> Result<Vec<f64>> {
        if self.scores.cols() != 2 || positive > 1 {
            return Err(Error::Parameter("positive scores need exactly two classes".into()));
        }
        let other = 1 - positive;
        Ok(self
            .scores
            .iter_rows()
            .map(|r| r[positive] - r[other])
            .collect())
    }
}

/// Checks training preconditions and returns the sorted present classes.
pub(crate) fn check_training_set(ds: &TaskDataset) -> Result<Vec<usize>> {
    if ds.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    if ds.rows.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("training rows contain non-finite values".into()));
    }
    if ds.labels.iter().any(|&l| l >= ds.n_classes()) {
        return Err(Error::Data("label outside class_names".into()));
    }
    let present = ds.present_classes();
    if present.len() < 2 {
        return Err(Error::Data(format!(
            "need at least two classes to train, found {}",
            present.len()
        )));
    }
    Ok(present)
}

pub fn train(ds: &TaskDataset, params: &HyperParams, seed: u64) -> Result<TrainedModel> {
    let state = match params {
        HyperParams::LinearSvc(p) => ModelState::LinearSvc(svc::train(ds, p, seed)?),
        HyperParams::Knn(p) => ModelState::Knn(knn::train(ds, p)?),
        HyperParams::Adaboost(p) => ModelState::Adaboost(adaboost::train(ds, p)?),
        HyperParams::RandomForest(p) => ModelState::RandomForest(forest::train(ds, p, seed)?),
        HyperParams::NeuralNet(p) => ModelState::NeuralNet(mlp::train(ds, p, seed)?),
    };
    Ok(TrainedModel {
        algorithm: params.algorithm(),
        params: params.clone(),
        class_names: ds.class_names.clone(),
        dim: ds.dim(),
        seed,
        state,
    })
}

pub fn train_linear_svc(ds: &TaskDataset, params: &SvcParams, seed: u64) -> Result<TrainedModel> {
    train(ds, &HyperParams::LinearSvc(params.clone()), seed)
}

pub fn train_knn(ds: &TaskDataset, params: &KnnParams) -> Result<TrainedModel> {
    train(ds, &HyperParams::Knn(params.clone()), 0)
}

pub fn train_adaboost(ds: &TaskDataset, params: &AdaBoostParams) -> Result<TrainedModel> {
    train(ds, &HyperParams::Adaboost(params.clone()), 0)
}

pub fn train_random_forest(ds: &TaskDataset, params: &ForestParams, seed: u64) -> Result<TrainedModel> {
    train(ds, &HyperParams::RandomForest(params.clone()), seed)
}

pub fn train_neural_net(ds: &TaskDataset, params: &MlpParams, seed: u64) -> Result<TrainedModel> {
    train(ds, &HyperParams::NeuralNet(params.clone()), seed)
}

impl TrainedModel {
    /// Per-class scores and the predicted class of one row.
    fn score_row(&self, row: &[f64]) -> (Vec<f64>, usize) {
        match &self.state {
            ModelState::LinearSvc(m) => m.score(row),
            ModelState::Knn(m) => m.score(row),
            ModelState::Adaboost(m) => m.score(row),
            ModelState::RandomForest(m) => m.score(row),
            ModelState::NeuralNet(m) => m.score(row),
        }
    }

    pub fn predict(&self, rows: &Matrix) -> Result<Predictions> {
        if rows.rows() > 0 && rows.cols() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: rows.cols(),
            });
        }
        let k = self.class_names.len();
        let mut scores = Matrix::zeros(rows.rows(), k);
        let mut labels = Vec::with_capacity(rows.rows());
        for i in 0..rows.rows() {
            let (s, label) = self.score_row(rows.row(i));
            scores.row_mut(i).copy_from_slice(&s);
            labels.push(label);
        }
        Ok(Predictions { labels, scores })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        let json = serde_json::to_string(&file).map_err(|e| Error::Runtime(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<TrainedModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(Error::parse(path, 1, format!("not a model file (format '{}')", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::parse(path, 1, format!("unsupported model version {}", file.version)));
        }
        Ok(file.model)
    }
}

pub const MODEL_FORMAT: &str = "attrsense-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: TrainedModel,
}

#[cfg(test)]
pub(crate) mod testutil {
    use rand_distr::{Distribution, Normal};

    use crate::seed::rng_from_seed;
    use crate::vectorize::{Task, TaskDataset};
    use crate::Matrix;

    pub fn dataset(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> TaskDataset {
        let dim = rows.first().map_or(0, Vec::len);
        let n = labels.len();
        TaskDataset {
            task: Task::Gender,
            rows: Matrix::from_rows(&rows, dim).unwrap(),
            labels,
            groups: (0..n).map(|i| format!("g{i}")).collect(),
            block_index: vec![0; n],
            class_names: Task::Gender.class_names(),
        }
    }

    pub fn xor() -> TaskDataset {
        dataset(
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            vec![0, 1, 1, 0],
        )
    }

    /// Two isotropic Gaussian blobs in `dim` dimensions whose means sit
    /// `separation` standard deviations apart along the first axis.
    pub fn blobs(n: usize, dim: usize, separation: f64, seed: u64) -> TaskDataset {
        let mut rng = rng_from_seed(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let label = i % 2;
            let mut row: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
            row[0] += if label == 0 { -separation / 2.0 } else { separation / 2.0 };
            rows.push(row);
            labels.push(label);
        }
        dataset(rows, labels)
    }

    pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
        pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
    }
}
