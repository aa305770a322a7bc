//! Random forest of CART trees with Gini splits and hard majority voting.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_training_set;
use crate::seed::{derive_seed, rng_from_seed};
use crate::vectorize::TaskDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub trees: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    /// Features tried per node; `None` means `floor(sqrt(N))`.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            bootstrap: true,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
enum Node {
    Leaf {
        label: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Flat node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { label } => return label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        let mut deepest = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((at, d)) = stack.pop() {
            deepest = deepest.max(d);
            if let Node::Split { left, right, .. } = self.nodes[at] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        deepest
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    trees: Vec<DecisionTree>,
    n_classes: usize,
}

pub(super) fn train(ds: &TaskDataset, params: &ForestParams, seed: u64) -> Result<ForestModel> {
    if params.trees < 1 || params.min_samples_leaf < 1 {
        return Err(Error::Parameter("trees and min_samples_leaf must be at least 1".into()));
    }
    if params.max_features == Some(0) {
        return Err(Error::Parameter("max_features must be at least 1".into()));
    }
    check_training_set(ds)?;
    let dim = ds.dim();
    let mtry = params
        .max_features
        .unwrap_or_else(|| (dim as f64).sqrt().floor() as usize)
        .clamp(1, dim.max(1));
    let trees = (0..params.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, &format!("tree/{t}")));
            let sample: Vec<usize> = if params.bootstrap {
                (0..ds.len()).map(|_| rng.random_range(0..ds.len())).collect()
            } else {
                (0..ds.len()).collect()
            };
            grow(ds, sample, params, mtry, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        trees,
        n_classes: ds.n_classes(),
    })
}

fn counts(ds: &TaskDataset, idx: &[usize]) -> Vec<usize> {
    let mut c = vec![0; ds.n_classes()];
    for &i in idx {
        c[ds.labels[i]] += 1;
    }
    c
}

fn majority(counts: &[usize]) -> usize {
    let max = *counts.iter().max().expect("non-empty class list");
    counts.iter().position(|&c| c == max).expect("max exists")
}

fn gini_sum(counts: &[usize], n: usize) -> f64 {
    // n * gini(node) = n - sum(c²)/n
    if n == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    n as f64 - sq / n as f64
}

fn grow(ds: &TaskDataset, sample: Vec<usize>, params: &ForestParams, mtry: usize, rng: &mut impl Rng) -> DecisionTree {
    let mut nodes = vec![Node::Leaf { label: 0 }];
    let mut stack = vec![(0usize, sample, 0usize)];
    let mut features: Vec<usize> = (0..ds.dim()).collect();
    while let Some((at, idx, depth)) = stack.pop() {
        let class_counts = counts(ds, &idx);
        let label = majority(&class_counts);
        let pure = class_counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || idx.len() < 2 * params.min_samples_leaf {
            nodes[at] = Node::Leaf { label };
            continue;
        }
        match find_split(ds, &idx, &class_counts, &mut features, mtry, params.min_samples_leaf, rng) {
            None => nodes[at] = Node::Leaf { label },
            Some((feature, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    idx.into_iter().partition(|&i| ds.rows.get(i, feature) <= threshold);
                let left = nodes.len();
                nodes.push(Node::Leaf { label: 0 });
                nodes.push(Node::Leaf { label: 0 });
                nodes[at] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right: left + 1,
                };
                stack.push((left + 1, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
        }
    }
    DecisionTree { nodes }
}

/// Visits features in random order. Once `mtry` features have been tried,
/// stops at the first that yields a valid split; keeps going otherwise.
fn find_split(
    ds: &TaskDataset,
    idx: &[usize],
    totals: &[usize],
    features: &mut [usize],
    mtry: usize,
    min_leaf: usize,
    rng: &mut impl Rng,
) -> Option<(usize, f64)> {
    features.shuffle(rng);
    let n = idx.len();
    let mut best: Option<(f64, usize, f64)> = None;
    let mut sorted = idx.to_vec();
    let mut left = vec![0usize; totals.len()];
    for (tried, &f) in features.iter().enumerate() {
        if tried >= mtry && best.is_some() {
            break;
        }
        sorted.sort_by(|&a, &b| ds.rows.get(a, f).total_cmp(&ds.rows.get(b, f)));
        left.iter_mut().for_each(|c| *c = 0);
        for pos in 0..n - 1 {
            left[ds.labels[sorted[pos]]] += 1;
            let here = ds.rows.get(sorted[pos], f);
            let next = ds.rows.get(sorted[pos + 1], f);
            let n_left = pos + 1;
            if here == next || n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let right: Vec<usize> = totals.iter().zip(&left).map(|(t, l)| t - l).collect();
            let impurity = gini_sum(&left, n_left) + gini_sum(&right, n - n_left);
            if best.is_none_or(|(b, _, _)| impurity < b - 1e-12) {
                best = Some((impurity, f, here + (next - here) / 2.0));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

impl ForestModel {
    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn votes(&self, row: &[f64]) -> Vec<usize> {
        let mut votes = vec![0; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict(row)] += 1;
        }
        votes
    }

    pub(super) fn score(&self, row: &[f64]) -> (Vec<f64>, usize) {
        let votes = self.votes(row);
        let label = majority(&votes);
        let n = self.trees.len() as f64;
        (votes.iter().map(|&v| v as f64 / n).collect(), label)
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;

    fn predict_all(m: &ForestModel, ds: &TaskDataset) -> Vec<usize> {
        (0..ds.len()).map(|i| m.score(ds.rows.row(i)).1).collect()
    }

    #[test]
    fn single_unbootstrapped_tree_memorizes_distinct_rows() {
        let ds = blobs(120, 5, 0.0, 2);
        let params = ForestParams {
            trees: 1,
            bootstrap: false,
            ..ForestParams::default()
        };
        let m = train(&ds, &params, 3).unwrap();
        assert_eq!(accuracy(&predict_all(&m, &ds), &ds.labels), 1.0);
    }

    #[test]
    fn same_seed_same_forest() {
        let ds = blobs(80, 4, 1.0, 5);
        let p = ForestParams {
            trees: 20,
            ..ForestParams::default()
        };
        assert_eq!(train(&ds, &p, 9).unwrap(), train(&ds, &p, 9).unwrap());
        assert_ne!(train(&ds, &p, 9).unwrap(), train(&ds, &p, 10).unwrap());
    }

    #[test]
    fn separated_blobs_generalize() {
        let ds = blobs(400, 10, 4.0, 6);
        let test = blobs(400, 10, 4.0, 7);
        let m = train(&ds, &ForestParams::default(), 1).unwrap();
        assert!(accuracy(&predict_all(&m, &test), &test.labels) >= 0.95);
    }

    #[test]
    fn votes_sum_to_tree_count() {
        let ds = blobs(60, 3, 1.0, 8);
        let m = train(&ds, &ForestParams { trees: 7, ..ForestParams::default() }, 2).unwrap();
        for i in 0..ds.len() {
            assert_eq!(m.votes(ds.rows.row(i)).iter().sum::<usize>(), 7);
        }
    }

    #[test]
    fn depth_limit_is_respected() {
        let ds = blobs(100, 4, 0.5, 1);
        let p = ForestParams {
            trees: 5,
            max_depth: Some(2),
            ..ForestParams::default()
        };
        let m = train(&ds, &p, 4).unwrap();
        assert!(m.trees().iter().all(|t| t.depth() <= 2));
    }

    #[test]
    fn gini_matches_definition() {
        // node with counts [3, 1]: gini = 1 - (9 + 1) / 16 = 0.375
        assert!((gini_sum(&[3, 1], 4) / 4.0 - 0.375).abs() < 1e-12);
        assert_eq!(gini_sum(&[5, 0], 5), 0.0);
    }

    #[test]
    fn vote_ties_go_to_lowest_class() {
        assert_eq!(majority(&[2, 2]), 0);
        assert_eq!(majority(&[1, 3, 3]), 1);
    }
}
