//! Multinomial logistic regression with an L2 penalty, fitted by full-batch
//! gradient descent with a backtracking (Armijo) line search.
//!
//! The objective is `sum_i CE_i + ||W||^2 / (2C)`, divided by `n` for
//! numerical scale; intercepts are not penalized.

use serde::{Deserialize, Serialize};

use super::softmax3;
use crate::corpus::Label;
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    /// Row-major `3 x n_features` weight matrix.
    pub weights: Vec<f64>,
    pub intercepts: [f64; 3],
}

/// Optimizer trace for one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegFit {
    /// Objective value at every accepted iterate, starting from zero weights.
    pub loss_history: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LogRegParams {
    pub fn zeros(n_features: usize) -> Self {
        LogRegParams {
            weights: vec![0.0; 3 * n_features],
            intercepts: [0.0; 3],
        }
    }

    fn n_features(&self) -> usize {
        self.weights.len() / 3
    }

    fn logits(&self, row: &crate::features::Row<'_>) -> [f64; 3] {
        let d = self.n_features();
        std::array::from_fn(|k| row.dot_dense(&self.weights[k * d..(k + 1) * d]) + self.intercepts[k])
    }

    pub(crate) fn scores(&self, x: &FeatureMatrix) -> Vec<[f64; 3]> {
        x.rows().map(|row| softmax3(self.logits(&row))).collect()
    }
}

fn objective(p: &LogRegParams, x: &FeatureMatrix, y: &[Label], c: f64) -> f64 {
    let n = x.n_rows() as f64;
    let mut loss = 0.0;
    for (row, &label) in x.rows().zip(y) {
        let z = p.logits(&row);
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        loss += lse - z[label.index()];
    }
    let penalty: f64 = p.weights.iter().map(|w| w * w).sum();
    loss / n + penalty / (2.0 * c * n)
}

fn gradient(p: &LogRegParams, x: &FeatureMatrix, y: &[Label], c: f64) -> LogRegParams {
    let d = p.n_features();
    let n = x.n_rows() as f64;
    let mut g = LogRegParams::zeros(d);
    for (row, &label) in x.rows().zip(y) {
        let prob = softmax3(p.logits(&row));
        for k in 0..3 {
            let r = prob[k] - if label.index() == k { 1.0 } else { 0.0 };
            g.intercepts[k] += r;
            let gw = &mut g.weights[k * d..(k + 1) * d];
            row.for_each(|j, v| gw[j] += r * v);
        }
    }
    for (gw, w) in g.weights.iter_mut().zip(&p.weights) {
        *gw = *gw / n + w / (c * n);
    }
    g.intercepts.iter_mut().for_each(|b| *b /= n);
    g
}

fn sq_norm(p: &LogRegParams) -> f64 {
    p.weights.iter().chain(p.intercepts.iter()).map(|v| v * v).sum()
}

fn step(p: &LogRegParams, g: &LogRegParams, t: f64) -> LogRegParams {
    LogRegParams {
        weights: p.weights.iter().zip(&g.weights).map(|(w, gw)| w - t * gw).collect(),
        intercepts: std::array::from_fn(|k| p.intercepts[k] - t * g.intercepts[k]),
    }
}

pub fn fit(
    x: &FeatureMatrix,
    y: &[Label],
    c: f64,
    max_iter: usize,
    grad_tol: f64,
) -> (LogRegParams, LogRegFit) {
    let mut params = LogRegParams::zeros(x.n_cols());
    let mut f = objective(&params, x, y, c);
    let mut history = vec![f];
    let mut t: f64 = 1.0;
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        let g = gradient(&params, x, y, c);
        let gn2 = sq_norm(&g);
        grad_norm = gn2.sqrt();
        if grad_norm <= grad_tol {
            converged = true;
            break;
        }
        t = (t * 2.0).min(1e6);
        let (next, f_next) = loop {
            let trial = step(&params, &g, t);
            let ft = objective(&trial, x, y, c);
            if ft <= f - 0.5 * t * gn2 {
                break (Some(trial), ft);
            }
            t *= 0.5;
            if t < 1e-16 {
                break (None, f);
            }
        };
        let Some(next) = next else {
            // no descent possible at machine precision
            break;
        };
        params = next;
        f = f_next;
        history.push(f);
        iterations += 1;
    }
    if !converged && iterations >= max_iter {
        grad_norm = sq_norm(&gradient(&params, x, y, c)).sqrt();
        converged = grad_norm <= grad_tol;
    }
    (
        params,
        LogRegFit {
            loss_history: history,
            grad_norm,
            iterations,
            converged,
        },
    )
}
