//! SAMME boosting over depth-1 threshold stumps on raw features.

use serde::{Deserialize, Serialize};

use super::check_training_set;
use crate::matrix::argmax;
use crate::vectorize::TaskDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaBoostParams {
    pub rounds: usize,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams { rounds: 50 }
    }
}

/// `x[feature] <= threshold` goes left. A stump with `left == right` is a
/// constant predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

impl Stump {
    pub fn predict(&self, row: &[f64]) -> usize {
        if row[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    stumps: Vec<Stump>,
    alphas: Vec<f64>,
    /// Weighted error of every accepted round, in order.
    errors: Vec<f64>,
    /// Majority class, used when no round was accepted.
    prior: usize,
    n_classes: usize,
}

pub(super) fn train(ds: &TaskDataset, params: &AdaBoostParams) -> Result<AdaBoostModel> {
    if params.rounds < 1 {
        return Err(Error::Parameter("rounds must be at least 1".into()));
    }
    let present = check_training_set(ds)?;
    let k = ds.n_classes();
    let big_k = present.len() as f64;
    let m = ds.len();
    let order = presort(ds);

    let mut weights = vec![1.0 / m as f64; m];
    let prior = argmax(&class_weights(&ds.labels, &weights, k));
    let mut model = AdaBoostModel {
        stumps: Vec::new(),
        alphas: Vec::new(),
        errors: Vec::new(),
        prior,
        n_classes: k,
    };

    for _ in 0..params.rounds {
        let (stump, eps) = best_stump(ds, &order, &weights, k);
        if eps >= 1.0 - 1.0 / big_k {
            break;
        }
        if eps <= 0.0 {
            let alpha = model.alphas.iter().sum::<f64>() + 1.0;
            model.stumps.push(stump);
            model.alphas.push(alpha);
            model.errors.push(0.0);
            break;
        }
        let alpha = ((1.0 - eps) / eps).ln() + (big_k - 1.0).ln();
        let boost = alpha.exp();
        for (i, w) in weights.iter_mut().enumerate() {
            if stump.predict(ds.rows.row(i)) != ds.labels[i] {
                *w *= boost;
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        model.stumps.push(stump);
        model.alphas.push(alpha);
        model.errors.push(eps);
    }
    Ok(model)
}

fn class_weights(labels: &[usize], weights: &[f64], k: usize) -> Vec<f64> {
    let mut acc = vec![0.0; k];
    for (&l, &w) in labels.iter().zip(weights) {
        acc[l] += w;
    }
    acc
}

/// Row indices sorted by each feature value.
fn presort(ds: &TaskDataset) -> Vec<Vec<usize>> {
    (0..ds.dim())
        .map(|f| {
            let mut idx: Vec<usize> = (0..ds.len()).collect();
            idx.sort_by(|&a, &b| ds.rows.get(a, f).total_cmp(&ds.rows.get(b, f)).then(a.cmp(&b)));
            idx
        })
        .collect()
}

/// Exhaustive scan over features and midpoints between consecutive distinct
/// values. Returns the stump with the lowest weighted error; earlier
/// features and thresholds win ties.
fn best_stump(ds: &TaskDataset, order: &[Vec<usize>], weights: &[f64], k: usize) -> (Stump, f64) {
    let totals = class_weights(&ds.labels, weights, k);
    let total: f64 = totals.iter().sum();
    let majority = argmax(&totals);
    let mut best = Stump {
        feature: 0,
        threshold: 0.0,
        left: majority,
        right: majority,
    };
    let mut best_err = total - totals[majority];

    let mut left = vec![0.0; k];
    for (f, idx) in order.iter().enumerate() {
        left.iter_mut().for_each(|v| *v = 0.0);
        for pos in 0..idx.len().saturating_sub(1) {
            let i = idx[pos];
            left[ds.labels[i]] += weights[i];
            let here = ds.rows.get(i, f);
            let next = ds.rows.get(idx[pos + 1], f);
            if here == next {
                continue;
            }
            let l = argmax(&left);
            let mut r = 0;
            let mut r_best = f64::NEG_INFINITY;
            for c in 0..k {
                let v = totals[c] - left[c];
                if v > r_best {
                    r_best = v;
                    r = c;
                }
            }
            let err = total - left[l] - r_best;
            if err < best_err - 1e-15 {
                best_err = err;
                best = Stump {
                    feature: f,
                    threshold: here + (next - here) / 2.0,
                    left: l,
                    right: r,
                };
            }
        }
    }
    (best, (best_err / total).max(0.0))
}

impl AdaBoostModel {
    pub fn stumps(&self) -> &[Stump] {
        &self.stumps
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Weighted training error ε_t of each accepted round.
    pub fn round_errors(&self) -> &[f64] {
        &self.errors
    }

    fn votes(&self, row: &[f64], rounds: usize) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        for (stump, alpha) in self.stumps.iter().zip(&self.alphas).take(rounds) {
            votes[stump.predict(row)] += alpha;
        }
        votes
    }

    /// Predicted class after each of the first 1..=T rounds.
    pub fn staged_labels(&self, row: &[f64]) -> Vec<usize> {
        let mut votes = vec![0.0; self.n_classes];
        self.stumps
            .iter()
            .zip(&self.alphas)
            .map(|(stump, alpha)| {
                votes[stump.predict(row)] += alpha;
                argmax(&votes)
            })
            .collect()
    }

    pub(super) fn score(&self, row: &[f64]) -> (Vec<f64>, usize) {
        if self.stumps.is_empty() {
            let mut scores = vec![0.0; self.n_classes];
            scores[self.prior] = 1.0;
            return (scores, self.prior);
        }
        let mut votes = self.votes(row, self.stumps.len());
        let total: f64 = self.alphas.iter().sum();
        votes.iter_mut().for_each(|v| *v /= total);
        let label = argmax(&votes);
        (votes, label)
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use crate::seed::rng_from_seed;
    use rand::Rng;

    fn training_labels(m: &AdaBoostModel, ds: &TaskDataset) -> Vec<usize> {
        (0..ds.len()).map(|i| m.score(ds.rows.row(i)).1).collect()
    }

    #[test]
    fn threshold_data_needs_one_round() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let labels: Vec<usize> = (0..20).map(|i| usize::from(i >= 7)).collect();
        let ds = dataset(rows, labels);
        let m = train(&ds, &AdaBoostParams { rounds: 50 }).unwrap();
        assert_eq!(m.stumps().len(), 1);
        assert_eq!(m.stumps()[0].threshold, 6.5);
        assert_eq!(accuracy(&training_labels(&m, &ds), &ds.labels), 1.0);
    }

    #[test]
    fn stump_scan_matches_brute_force() {
        let mut rng = rng_from_seed(4);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..3).map(|_| rng.random_range(0..6) as f64).collect())
            .collect();
        let labels: Vec<usize> = (0..30).map(|_| rng.random_range(0..2)).collect();
        let weights: Vec<f64> = (0..30).map(|_| rng.random::<f64>() + 0.1).collect();
        let ds = dataset(rows, labels);
        let (_, eps) = best_stump(&ds, &presort(&ds), &weights, 2);

        let total: f64 = weights.iter().sum();
        let mut oracle = f64::INFINITY;
        for f in 0..3 {
            for t in -1..6 {
                let thr = t as f64 + 0.5;
                for l in 0..2 {
                    for r in 0..2 {
                        let err: f64 = (0..30)
                            .filter(|&i| {
                                let p = if ds.rows.get(i, f) <= thr { l } else { r };
                                p != ds.labels[i]
                            })
                            .map(|i| weights[i])
                            .sum();
                        oracle = oracle.min(err / total);
                    }
                }
            }
        }
        assert!((eps - oracle).abs() < 1e-12, "{eps} vs {oracle}");
    }

    #[test]
    fn round_errors_stay_below_chance() {
        let ds = blobs(80, 3, 1.0, 9);
        let m = train(&ds, &AdaBoostParams { rounds: 40 }).unwrap();
        assert!(!m.round_errors().is_empty());
        for &e in m.round_errors() {
            assert!(e < 0.5);
        }
    }

    #[test]
    fn training_error_respects_the_product_bound() {
        let ds = blobs(50, 2, 1.5, 11);
        let m = train(&ds, &AdaBoostParams { rounds: 30 }).unwrap();
        let staged: Vec<Vec<usize>> = (0..ds.len()).map(|i| m.staged_labels(ds.rows.row(i))).collect();
        let mut bound = 1.0;
        for (t, &eps) in m.round_errors().iter().enumerate() {
            bound *= 2.0 * (eps * (1.0 - eps)).sqrt();
            let wrong = staged.iter().zip(&ds.labels).filter(|(s, &l)| s[t] != l).count();
            assert!(wrong as f64 / ds.len() as f64 <= bound + 1e-12, "round {t}");
        }
    }

    #[test]
    fn identical_rows_with_mixed_labels_fall_back_to_majority() {
        let ds = dataset(vec![vec![1.0, 1.0]; 5], vec![0, 1, 1, 0, 1]);
        let m = train(&ds, &AdaBoostParams::default()).unwrap();
        let pred = training_labels(&m, &ds);
        assert!(pred.iter().all(|&p| p == 1));
        assert_eq!(accuracy(&pred, &ds.labels), 0.6);
    }

    #[test]
    fn multiclass_uses_present_class_count() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let labels: Vec<usize> = (0..30).map(|i| i / 10).collect();
        let mut ds = dataset(rows, labels);
        ds.class_names = vec!["a".into(), "b".into(), "c".into(), "d".into()];
        let m = train(&ds, &AdaBoostParams { rounds: 20 }).unwrap();
        for &e in m.round_errors() {
            assert!(e < 1.0 - 1.0 / 3.0);
        }
        assert_eq!(accuracy(&training_labels(&m, &ds), &ds.labels), 1.0);
    }
}
