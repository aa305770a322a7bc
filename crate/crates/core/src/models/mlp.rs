//! Fully connected network with softmax output, trained by minibatch SGD
//! with momentum on cross-entropy, with early stopping on a held-out split.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::check_training_set;
use super::standardize::Standardizer;
use crate::matrix::argmax;
use crate::seed::{derive_seed, rng_from_seed};
use crate::vectorize::TaskDataset;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }

    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub lr: f64,
    pub momentum: f64,
    pub batch: usize,
    pub epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: vec![128, 64],
            activation: Activation::Relu,
            lr: 0.01,
            momentum: 0.9,
            batch: 32,
            epochs: 100,
            patience: 10,
            validation_fraction: 0.1,
        }
    }
}

/// Network weights as one flat vector: for each layer, the `out × in`
/// weight matrix row-major followed by `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
}

impl Mlp {
    pub fn new(sizes: &[usize], activation: Activation, seed: u64) -> Result<Mlp> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Parameter(format!("invalid layer sizes {sizes:?}")));
        }
        let mut rng = rng_from_seed(seed);
        let mut params = Vec::new();
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let hidden_layer = l + 2 < sizes.len();
            let gain = if hidden_layer && activation == Activation::Relu { 2.0 } else { 1.0 };
            let normal = Normal::new(0.0, (gain / fan_in as f64).sqrt()).expect("positive sd");
            params.extend((0..fan_in * fan_out).map(|_| normal.sample(&mut rng)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Ok(Mlp {
            sizes: sizes.to_vec(),
            activation,
            params,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Dimension {
                expected: self.params.len(),
                got: params.len(),
            });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    fn layer_offsets(&self) -> Vec<usize> {
        let mut offsets = vec![0];
        for l in 0..self.sizes.len() - 1 {
            let last = *offsets.last().expect("non-empty");
            offsets.push(last + self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1]);
        }
        offsets
    }

    /// Activations of every layer; the last entry holds softmax probabilities.
    fn forward_all(&self, x: &[f64], offsets: &[usize]) -> Vec<Vec<f64>> {
        let layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(layers + 1);
        acts.push(x.to_vec());
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offsets[l]..offsets[l] + n_in * n_out];
            let b = &self.params[offsets[l] + n_in * n_out..offsets[l + 1]];
            let input = &acts[l];
            let mut z: Vec<f64> = (0..n_out)
                .map(|o| b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(input).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            if l + 1 < layers {
                z.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            } else {
                softmax(&mut z);
            }
            acts.push(z);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let offsets = self.layer_offsets();
        self.forward_all(x, &offsets).pop().expect("output layer")
    }

    /// Mean cross-entropy over the rows and its gradient with respect to
    /// the flat parameter vector.
    pub fn loss_and_gradients(&self, x: &Matrix, y: &[usize]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let loss = self.accumulate(x, y, &(0..y.len()).collect::<Vec<_>>(), &mut grad);
        (loss, grad)
    }

    fn accumulate(&self, x: &Matrix, y: &[usize], rows: &[usize], grad: &mut [f64]) -> f64 {
        let offsets = self.layer_offsets();
        let layers = self.sizes.len() - 1;
        let scale = 1.0 / rows.len().max(1) as f64;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for &i in rows {
            let acts = self.forward_all(x.row(i), &offsets);
            let probs = &acts[layers];
            loss -= probs[y[i]].max(f64::MIN_POSITIVE).ln();
            let mut delta: Vec<f64> = probs.clone();
            delta[y[i]] -= 1.0;
            for l in (0..layers).rev() {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let w_off = offsets[l];
                let b_off = w_off + n_in * n_out;
                let input = &acts[l];
                for o in 0..n_out {
                    let d = delta[o] * scale;
                    grad[b_off + o] += d;
                    let row = &mut grad[w_off + o * n_in..w_off + (o + 1) * n_in];
                    for (g, &a) in row.iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                if l > 0 {
                    let w = &self.params[w_off..b_off];
                    let mut back = vec![0.0; n_in];
                    for o in 0..n_out {
                        let d = delta[o];
                        for (bk, &wv) in back.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                            *bk += d * wv;
                        }
                    }
                    for (bk, &a) in back.iter_mut().zip(input) {
                        *bk *= self.activation.derivative(a);
                    }
                    delta = back;
                }
            }
        }
        loss * scale
    }

    fn mean_loss(&self, x: &Matrix, y: &[usize], rows: &[usize]) -> f64 {
        let offsets = self.layer_offsets();
        let layers = self.sizes.len() - 1;
        let total: f64 = rows
            .iter()
            .map(|&i| -self.forward_all(x.row(i), &offsets)[layers][y[i]].max(f64::MIN_POSITIVE).ln())
            .sum();
        total / rows.len().max(1) as f64
    }
}

fn softmax(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    standardizer: Standardizer,
    net: Mlp,
    epochs_run: usize,
}

pub(super) fn train(ds: &TaskDataset, params: &MlpParams, seed: u64) -> Result<MlpModel> {
    if !(params.lr.is_finite() && params.lr > 0.0) || params.batch < 1 || params.epochs < 1 {
        return Err(Error::Parameter("lr, batch and epochs must be positive".into()));
    }
    if !(0.0..1.0).contains(&params.momentum) || !(0.0..1.0).contains(&params.validation_fraction) {
        return Err(Error::Parameter("momentum and validation_fraction must lie in [0, 1)".into()));
    }
    check_training_set(ds)?;

    let standardizer = Standardizer::fit(&ds.rows);
    let x = standardizer.transform(&ds.rows);
    let mut sizes = vec![ds.dim()];
    sizes.extend(&params.hidden);
    sizes.push(ds.n_classes());
    let mut net = Mlp::new(&sizes, params.activation, derive_seed(seed, "mlp/init"))?;

    let mut rng = rng_from_seed(derive_seed(seed, "mlp/shuffle"));
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut rng);
    let n_val = (params.validation_fraction * ds.len() as f64).floor() as usize;
    let (val, mut fit): (Vec<usize>, Vec<usize>) = if n_val > 0 && n_val < ds.len() {
        (order[..n_val].to_vec(), order[n_val..].to_vec())
    } else {
        (Vec::new(), order)
    };

    let mut velocity = vec![0.0; net.params.len()];
    let mut grad = vec![0.0; net.params.len()];
    let mut best = (f64::INFINITY, net.params.clone());
    let mut since_best = 0;
    let mut epochs_run = 0;
    for _ in 0..params.epochs {
        epochs_run += 1;
        fit.shuffle(&mut rng);
        for batch in fit.chunks(params.batch) {
            net.accumulate(&x, &ds.labels, batch, &mut grad);
            for ((p, v), g) in net.params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = params.momentum * *v - params.lr * g;
                *p += *v;
            }
        }
        if net.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Runtime("neural net diverged (non-finite weights)".into()));
        }
        if val.is_empty() {
            continue;
        }
        let loss = net.mean_loss(&x, &ds.labels, &val);
        if loss < best.0 {
            best = (loss, net.params.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= params.patience {
                break;
            }
        }
    }
    if !val.is_empty() {
        net.params = best.1;
    }
    Ok(MlpModel {
        standardizer,
        net,
        epochs_run,
    })
}

impl MlpModel {
    pub fn network(&self) -> &Mlp {
        &self.net
    }

    pub fn epochs_run(&self) -> usize {
        self.epochs_run
    }

    pub(super) fn score(&self, row: &[f64]) -> (Vec<f64>, usize) {
        let probs = self.net.forward(&self.standardizer.transform_row(row));
        let label = argmax(&probs);
        (probs, label)
    }
}
