//! Linear SVC trained by primal SGD on the L2-regularized hinge loss
//!
//! `λ/2 ‖w‖² + (1/M) Σ max(0, 1 − y (w·x + b))` with `λ = 1/(C·M)`. The step
//! size follows `η_t = η₀ / (1 + η₀ λ t)` and the returned weights are the
//! average of the iterates after the first epoch. Two-class problems train a
//! single machine; more classes use one-vs-rest.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::standardize::Standardizer;
use super::check_training_set;
use crate::matrix::{argmax, dot};
use crate::seed::{derive_seed, rng_from_seed};
use crate::vectorize::TaskDataset;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvcParams {
    pub c: f64,
    pub epochs: usize,
    pub eta0: f64,
}

impl Default for SvcParams {
    fn default() -> Self {
        SvcParams {
            c: 1.0,
            epochs: 30,
            eta0: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvcModel {
    standardizer: Standardizer,
    /// One row per machine: a single row for two classes, else one per class.
    weights: Matrix,
    bias: Vec<f64>,
    n_classes: usize,
}

pub(super) fn train(ds: &TaskDataset, params: &SvcParams, seed: u64) -> Result<LinearSvcModel> {
    if !(params.c.is_finite() && params.c > 0.0) {
        return Err(Error::Parameter("C must be positive".into()));
    }
    if params.epochs < 1 || !(params.eta0.is_finite() && params.eta0 > 0.0) {
        return Err(Error::Parameter("epochs and eta0 must be positive".into()));
    }
    check_training_set(ds)?;

    let standardizer = Standardizer::fit(&ds.rows);
    let x = standardizer.transform(&ds.rows);
    let k = ds.n_classes();
    let machines: Vec<usize> = if k == 2 { vec![1] } else { (0..k).collect() };

    let mut weights = Matrix::zeros(machines.len(), ds.dim());
    let mut bias = vec![0.0; machines.len()];
    for (m, &positive) in machines.iter().enumerate() {
        let targets: Vec<f64> = ds
            .labels
            .iter()
            .map(|&l| if l == positive { 1.0 } else { -1.0 })
            .collect();
        let rng_seed = derive_seed(seed, &format!("svc/machine/{positive}"));
        let (w, b) = fit_machine(&x, &targets, params, rng_seed);
        weights.row_mut(m).copy_from_slice(&w);
        bias[m] = b;
    }
    Ok(LinearSvcModel {
        standardizer,
        weights,
        bias,
        n_classes: k,
    })
}

fn fit_machine(x: &Matrix, y: &[f64], params: &SvcParams, seed: u64) -> (Vec<f64>, f64) {
    let (n, d) = (x.rows(), x.cols());
    let lambda = 1.0 / (params.c * n as f64);
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..n).collect();

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut avg_w = vec![0.0; d];
    let mut avg_b = 0.0;
    let mut averaged = 0u64;
    let average_from = if params.epochs > 1 { 1 } else { 0 };
    let mut t = 0u64;

    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = params.eta0 / (1.0 + params.eta0 * lambda * t as f64);
            let xi = x.row(i);
            let margin = y[i] * (dot(&w, xi) + b);
            let shrink = 1.0 - eta * lambda;
            if margin < 1.0 {
                for (wj, &xj) in w.iter_mut().zip(xi) {
                    *wj = *wj * shrink + eta * y[i] * xj;
                }
                b += eta * y[i];
            } else {
                w.iter_mut().for_each(|wj| *wj *= shrink);
            }
            t += 1;
            if epoch >= average_from {
                averaged += 1;
                let r = 1.0 / averaged as f64;
                for (a, &wj) in avg_w.iter_mut().zip(&w) {
                    *a += (wj - *a) * r;
                }
                avg_b += (b - avg_b) * r;
            }
        }
    }
    (avg_w, avg_b)
}

impl LinearSvcModel {
    /// Signed margins per class.
    pub fn margins(&self, row: &[f64]) -> Vec<f64> {
        let z = self.standardizer.transform_row(row);
        if self.n_classes == 2 {
            let f = dot(self.weights.row(0), &z) + self.bias[0];
            vec![-f, f]
        } else {
            (0..self.n_classes)
                .map(|c| dot(self.weights.row(c), &z) + self.bias[c])
                .collect()
        }
    }

    pub(super) fn score(&self, row: &[f64]) -> (Vec<f64>, usize) {
        let m = self.margins(row);
        let label = argmax(&m);
        (m, label)
    }
}
