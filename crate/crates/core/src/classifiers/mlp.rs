//! Fully connected ReLU network with a softmax output, trained on mean
//! cross-entropy with Adam and optional early stopping.
//!
//! Sparse inputs are consumed directly by the first layer (only nonzero
//! columns touch the weight matrix); everything after that is dense.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{softmax3, Hyperparams};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Row};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_in x n_out`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        DenseLayer {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            bias: vec![0.0; n_out],
        }
    }

    fn w(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.n_in, self.n_out), &self.weights).expect("layer shape")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<DenseLayer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradients of the mean cross-entropy, one entry per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub loss: f64,
    pub layers: Vec<LayerGradient>,
}

/// Training trace.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpFit {
    pub epochs_run: usize,
    /// Epoch (0-based) with the lowest validation loss; its weights are the
    /// ones returned. `None` without early stopping.
    pub best_epoch: Option<usize>,
    pub validation_losses: Vec<f64>,
    pub patience: usize,
}

struct Forward {
    /// Dense copy of the input when the input is dense (needed for backprop).
    input: Option<Array2<f64>>,
    /// Pre-activations per layer.
    pre: Vec<Array2<f64>>,
    /// Post-ReLU activations of the hidden layers.
    hidden: Vec<Array2<f64>>,
    probs: Array2<f64>,
}

impl MlpParams {
    pub fn init(sizes: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let bound = (6.0 / (n_in + n_out) as f64).sqrt();
                DenseLayer {
                    n_in,
                    n_out,
                    weights: (0..n_in * n_out).map(|_| rng.random_range(-bound..bound)).collect(),
                    bias: vec![0.0; n_out],
                }
            })
            .collect();
        MlpParams { layers }
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in
    }

    fn first_layer(&self, x: &FeatureMatrix, idx: &[usize]) -> (Option<Array2<f64>>, Array2<f64>) {
        let l0 = &self.layers[0];
        let b = idx.len();
        if x.is_sparse() {
            let w = l0.w();
            let mut z = Array2::zeros((b, l0.n_out));
            for (r, &i) in idx.iter().enumerate() {
                let mut zr = z.row_mut(r);
                zr.assign(&ndarray::aview1(&l0.bias));
                x.row(i).for_each(|j, v| zr.scaled_add(v, &w.row(j)));
            }
            (None, z)
        } else {
            let mut input = Array2::zeros((b, l0.n_in));
            for (r, &i) in idx.iter().enumerate() {
                if let Row::Dense(v) = x.row(i) {
                    input.row_mut(r).assign(&ndarray::aview1(v));
                }
            }
            let z = input.dot(&l0.w()) + &ndarray::aview1(&l0.bias);
            (Some(input), z)
        }
    }

    fn forward(&self, x: &FeatureMatrix, idx: &[usize]) -> Forward {
        let (input, z0) = self.first_layer(x, idx);
        let mut pre = vec![z0];
        let mut hidden = Vec::new();
        for layer in &self.layers[1..] {
            let a = pre.last().expect("layer").mapv(|v| v.max(0.0));
            let z = a.dot(&layer.w()) + &ndarray::aview1(&layer.bias);
            hidden.push(a);
            pre.push(z);
        }
        let logits = pre.last().expect("output layer");
        let mut probs = Array2::zeros(logits.raw_dim());
        for (r, row) in logits.outer_iter().enumerate() {
            let p = softmax3([row[0], row[1], row[2]]);
            probs.row_mut(r).assign(&ndarray::aview1(&p));
        }
        Forward { input, pre, hidden, probs }
    }

    fn mean_loss(&self, x: &FeatureMatrix, idx: &[usize], y: &[Label]) -> f64 {
        let mut total = 0.0;
        for chunk in idx.chunks(256) {
            let f = self.forward(x, chunk);
            for (r, &i) in chunk.iter().enumerate() {
                total += row_loss(&f.pre.last().expect("logits").row(r).to_vec(), y[i]);
            }
        }
        total / idx.len() as f64
    }

    fn gradient(&self, x: &FeatureMatrix, idx: &[usize], y: &[Label]) -> MlpGradients {
        let f = self.forward(x, idx);
        let b = idx.len() as f64;
        let logits = f.pre.last().expect("logits");
        let mut loss = 0.0;
        let mut delta = f.probs.clone();
        for (r, &i) in idx.iter().enumerate() {
            loss += row_loss(&logits.row(r).to_vec(), y[i]);
            delta[[r, y[i].index()]] -= 1.0;
        }
        delta /= b;

        let n_layers = self.layers.len();
        let mut grads: Vec<LayerGradient> = Vec::with_capacity(n_layers);
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            let db = delta.sum_axis(Axis(0)).to_vec();
            let dw: Vec<f64> = if l > 0 {
                f.hidden[l - 1].t().dot(&delta).iter().copied().collect()
            } else if let Some(input) = &f.input {
                input.t().dot(&delta).iter().copied().collect()
            } else {
                let mut dw = Array2::<f64>::zeros((layer.n_in, layer.n_out));
                for (r, &i) in idx.iter().enumerate() {
                    let dr = delta.row(r);
                    x.row(i).for_each(|j, v| dw.row_mut(j).scaled_add(v, &dr));
                }
                dw.iter().copied().collect()
            };
            grads.push(LayerGradient { weights: dw, bias: db });
            if l > 0 {
                let mut next = delta.dot(&layer.w().t());
                next.zip_mut_with(&f.pre[l - 1], |d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = next;
            }
        }
        grads.reverse();
        MlpGradients {
            loss: loss / b,
            layers: grads,
        }
    }

    pub(crate) fn scores(&self, x: &FeatureMatrix) -> Vec<[f64; 3]> {
        let idx: Vec<usize> = (0..x.n_rows()).collect();
        let mut out = Vec::with_capacity(idx.len());
        for chunk in idx.chunks(256) {
            let f = self.forward(x, chunk);
            out.extend(f.probs.outer_iter().map(|r| [r[0], r[1], r[2]]));
        }
        out
    }
}

fn row_loss(z: &[f64], label: Label) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    lse - z[label.index()]
}

/// Gradient of the mean cross-entropy over every row of `x`.
pub fn mlp_gradient(params: &MlpParams, x: &FeatureMatrix, y: &[Label]) -> Result<MlpGradients> {
    if x.n_rows() == 0 {
        return Err(Error::invalid("gradient batch is empty"));
    }
    if x.n_rows() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.n_rows(), actual: y.len() });
    }
    if x.n_cols() != params.n_inputs() {
        return Err(Error::DimensionMismatch { expected: params.n_inputs(), actual: x.n_cols() });
    }
    if params.layers.last().map(|l| l.n_out) != Some(3) {
        return Err(Error::Model("output layer must have 3 units".into()));
    }
    let idx: Vec<usize> = (0..x.n_rows()).collect();
    Ok(params.gradient(x, &idx, y))
}

struct Adam {
    m: Vec<(Vec<f64>, Vec<f64>)>,
    v: Vec<(Vec<f64>, Vec<f64>)>,
    t: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(p: &MlpParams, lr: f64) -> Self {
        let zeros = || {
            p.layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
                .collect::<Vec<_>>()
        };
        Adam { m: zeros(), v: zeros(), t: 0, lr }
    }

    fn step(&mut self, p: &mut MlpParams, g: &MlpGradients) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let lr = self.lr;
        let update = |w: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for (((w, &g), m), v) in w.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
                *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
                *w -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
            }
        };
        for (l, layer) in p.layers.iter_mut().enumerate() {
            let (mw, mb) = &mut self.m[l];
            let (vw, vb) = &mut self.v[l];
            update(&mut layer.weights, &g.layers[l].weights, mw, vw);
            update(&mut layer.bias, &g.layers[l].bias, mb, vb);
        }
    }
}

/// Per-label shuffled split; returns `(train, validation)` row indices.
fn stratified_holdout(y: &[Label], fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for label in Label::ALL {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == label).collect();
        members.shuffle(rng);
        let mut n_val = (members.len() as f64 * fraction).round() as usize;
        if n_val >= members.len() {
            n_val = members.len().saturating_sub(1);
        }
        val.extend_from_slice(&members[..n_val]);
        train.extend_from_slice(&members[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

pub fn fit(x: &FeatureMatrix, y: &[Label], hp: &Hyperparams, seed: u64) -> Result<(MlpParams, MlpFit)> {
    let Hyperparams::Mlp {
        hidden,
        early_stopping,
        learning_rate,
        batch_size,
        max_epochs,
        validation_fraction,
        patience,
    } = hp
    else {
        return Err(Error::invalid("mlp fit called with non-mlp hyperparameters"));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sizes = vec![x.n_cols()];
    sizes.extend_from_slice(hidden);
    sizes.push(3);
    let mut params = MlpParams::init(&sizes, &mut rng);

    let (mut train, val) = if *early_stopping {
        stratified_holdout(y, *validation_fraction, &mut rng)
    } else {
        ((0..y.len()).collect(), Vec::new())
    };
    let use_val = !val.is_empty();

    let mut adam = Adam::new(&params, *learning_rate);
    let mut best: Option<(f64, usize, MlpParams)> = None;
    let mut val_losses = Vec::new();
    let mut epochs_run = 0;
    for epoch in 0..*max_epochs {
        train.shuffle(&mut rng);
        for batch in train.chunks(*batch_size) {
            let g = params.gradient(x, batch, y);
            adam.step(&mut params, &g);
        }
        epochs_run = epoch + 1;
        if use_val {
            let vl = params.mean_loss(x, &val, y);
            if !vl.is_finite() {
                return Err(Error::NotConverged(format!("mlp validation loss diverged at epoch {epoch}")));
            }
            val_losses.push(vl);
            if best.as_ref().is_none_or(|(b, _, _)| vl < *b) {
                best = Some((vl, epoch, params.clone()));
            } else if let Some((_, be, _)) = &best {
                if epoch - be >= *patience {
                    break;
                }
            }
        }
    }
    let best_epoch = best.as_ref().map(|(_, e, _)| *e);
    if let Some((_, _, p)) = best {
        params = p;
    }
    Ok((
        params,
        MlpFit {
            epochs_run,
            best_epoch,
            validation_losses: val_losses,
            patience: *patience,
        },
    ))
}
