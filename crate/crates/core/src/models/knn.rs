use serde::{Deserialize, Serialize};

use super::check_training_set;
use super::standardize::Standardizer;
use crate::vectorize::TaskDataset;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

/// Stores standardized training rows; predicts by majority vote among the
/// `k` nearest rows (Euclidean). Distance ties go to the lower row index;
/// vote ties go to the tied class whose member is nearest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    k: usize,
    standardizer: Standardizer,
    rows: Matrix,
    labels: Vec<usize>,
    n_classes: usize,
}

pub(super) fn train(ds: &TaskDataset, params: &KnnParams) -> Result<KnnModel> {
    if params.k < 1 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    check_training_set(ds)?;
    if params.k > ds.len() {
        return Err(Error::Parameter(format!(
            "k = {} exceeds the training set size {}",
            params.k,
            ds.len()
        )));
    }
    let standardizer = Standardizer::fit(&ds.rows);
    Ok(KnnModel {
        k: params.k,
        rows: standardizer.transform(&ds.rows),
        standardizer,
        labels: ds.labels.clone(),
        n_classes: ds.n_classes(),
    })
}

impl KnnModel {
    /// Indices of the `k` nearest training rows, nearest first.
    pub fn neighbors(&self, row: &[f64]) -> Vec<usize> {
        let z = self.standardizer.transform_row(row);
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter_rows()
            .enumerate()
            .map(|(i, r)| {
                let d: f64 = r.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        let k = self.k;
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
            dist.truncate(k);
        }
        dist.sort_unstable_by(cmp);
        dist.into_iter().map(|(_, i)| i).collect()
    }

    pub(super) fn score(&self, row: &[f64]) -> (Vec<f64>, usize) {
        let neighbors = self.neighbors(row);
        let mut votes = vec![0usize; self.n_classes];
        for &i in &neighbors {
            votes[self.labels[i]] += 1;
        }
        let max = *votes.iter().max().expect("at least one class");
        let label = neighbors
            .iter()
            .map(|&i| self.labels[i])
            .find(|&c| votes[c] == max)
            .expect("a neighbor holds the winning class");
        let scores = votes.iter().map(|&v| v as f64 / neighbors.len() as f64).collect();
        (scores, label)
    }
}
