//! RBF-kernel support vector machine trained with SMO.
//!
//! Binary problems solve the soft-margin dual
//! `min 1/2 a'Qa - e'a  s.t.  0 <= a_i <= C, y'a = 0` with `Q_ij = y_i y_j K_ij`,
//! choosing at each step the pair that maximally violates the KKT conditions.
//! Three classes are handled one-vs-rest and decided by the largest margin.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Row};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma {
    /// `1 / (d * var)` over all entries of the training matrix.
    Scale,
    Value(f64),
}

pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma must be positive"));
    }
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((-gamma * d2).exp())
}

pub fn scale_gamma(x: &FeatureMatrix) -> f64 {
    let d = x.n_cols() as f64;
    let count = x.n_rows() as f64 * d;
    let (sum, sumsq) = x.entry_moments();
    let mean = sum / count;
    let var = sumsq / count - mean * mean;
    if var > 0.0 {
        1.0 / (d * var)
    } else {
        1.0 / d
    }
}

fn row_kernel(a: &Row<'_>, a_sq: f64, b: &Row<'_>, b_sq: f64, gamma: f64) -> f64 {
    let d2 = match (a, b) {
        (Row::Dense(p), Row::Dense(q)) => p.iter().zip(q.iter()).map(|(x, y)| (x - y) * (x - y)).sum(),
        _ => (a_sq + b_sq - 2.0 * a.dot(b)).max(0.0),
    };
    (-gamma * d2).exp()
}

/// Access to rows of a symmetric kernel matrix.
pub trait KernelSource {
    fn size(&self) -> usize;
    fn diag(&self, i: usize) -> f64;
    fn row(&mut self, i: usize) -> Arc<[f64]>;
}

struct Precomputed<'a>(&'a [Vec<f64>]);

impl KernelSource for Precomputed<'_> {
    fn size(&self) -> usize {
        self.0.len()
    }
    fn diag(&self, i: usize) -> f64 {
        self.0[i][i]
    }
    fn row(&mut self, i: usize) -> Arc<[f64]> {
        Arc::from(self.0[i].as_slice())
    }
}

/// Kernel rows computed on demand with a bounded first-in-first-out cache.
struct RowCache<'a> {
    x: &'a FeatureMatrix,
    sq: Vec<f64>,
    gamma: f64,
    rows: Vec<Option<Arc<[f64]>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

const CACHE_BYTES: usize = 256 << 20;

impl<'a> RowCache<'a> {
    fn new(x: &'a FeatureMatrix, gamma: f64) -> Self {
        let n = x.n_rows();
        RowCache {
            x,
            sq: x.rows().map(|r| r.sq_norm()).collect(),
            gamma,
            rows: vec![None; n],
            order: VecDeque::new(),
            capacity: (CACHE_BYTES / (8 * n.max(1))).max(2),
        }
    }
}

impl KernelSource for RowCache<'_> {
    fn size(&self) -> usize {
        self.x.n_rows()
    }
    fn diag(&self, _i: usize) -> f64 {
        1.0
    }
    fn row(&mut self, i: usize) -> Arc<[f64]> {
        if let Some(r) = &self.rows[i] {
            return r.clone();
        }
        let xi = self.x.row(i);
        let row: Arc<[f64]> = (0..self.x.n_rows())
            .map(|t| row_kernel(&xi, self.sq[i], &self.x.row(t), self.sq[t], self.gamma))
            .collect();
        if self.order.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.rows[old] = None;
            }
        }
        self.order.push_back(i);
        self.rows[i] = Some(row.clone());
        row
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmSolution {
    pub alpha: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit; `alpha` is then the last iterate.
    pub converged: bool,
}

/// Dual objective `1/2 a'Qa - sum(a)` for a precomputed kernel matrix.
pub fn dual_objective(k: &[Vec<f64>], y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[i][j];
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

/// SMO on a precomputed kernel matrix with `+1/-1` labels.
pub fn solve_binary_svm(
    k: &[Vec<f64>],
    y: &[f64],
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SvmSolution> {
    let n = k.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: y.len() });
    }
    if let Some(row) = k.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, actual: row.len() });
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::invalid("binary SVM labels must be +1 or -1"));
    }
    if !(c > 0.0) || !(tol > 0.0) {
        return Err(Error::invalid("C and tol must be positive"));
    }
    Ok(smo(&mut Precomputed(k), y, c, tol, max_iter))
}

fn smo<K: KernelSource>(k: &mut K, y: &[f64], c: f64, tol: f64, max_iter: usize) -> SvmSolution {
    const TAU: f64 = 1e-12;
    let n = k.size();
    let mut a = vec![0.0; n];
    let mut g = vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;

    loop {
        let (mut gmax, mut i) = (f64::NEG_INFINITY, usize::MAX);
        let (mut gmin, mut j) = (f64::INFINITY, usize::MAX);
        for t in 0..n {
            let v = -y[t] * g[t];
            let up = if y[t] > 0.0 { a[t] < c } else { a[t] > 0.0 };
            let low = if y[t] > 0.0 { a[t] > 0.0 } else { a[t] < c };
            if up && v > gmax {
                gmax = v;
                i = t;
            }
            if low && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let ki = k.row(i);
        let kj = k.row(j);
        let (old_ai, old_aj) = (a[i], a[j]);
        let eta = (k.diag(i) + k.diag(j) - 2.0 * ki[j]).max(TAU);
        if y[i] != y[j] {
            let delta = (-g[i] - g[j]) / eta;
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > 0.0 {
                if a[i] > c {
                    a[i] = c;
                    a[j] = c - diff;
                }
            } else if a[j] > c {
                a[j] = c;
                a[i] = c + diff;
            }
        } else {
            let delta = (g[i] - g[j]) / eta;
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > c {
                if a[i] > c {
                    a[i] = c;
                    a[j] = sum - c;
                }
                if a[j] > c {
                    a[j] = c;
                    a[i] = sum - c;
                }
            } else {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = sum;
                }
                if a[i] < 0.0 {
                    a[i] = 0.0;
                    a[j] = sum;
                }
            }
        }
        let (di, dj) = (a[i] - old_ai, a[j] - old_aj);
        for t in 0..n {
            g[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }

    // b = -rho; rho averages y*G over free vectors, else the feasible midpoint
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_n) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * g[t];
        if a[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if a[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free_n += 1;
        }
    }
    let rho = if free_n > 0 {
        free_sum / free_n as f64
    } else if ub.is_finite() && lb.is_finite() {
        0.5 * (ub + lb)
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    };
    SvmSolution {
        alpha: a,
        intercept: -rho,
        iterations,
        converged,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    /// `alpha_i * y_i` for every support row (zero where this machine does
    /// not use the row).
    pub dual_coef: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub gamma: f64,
    pub c: f64,
    /// Training rows with a nonzero dual coefficient in any machine.
    pub support: FeatureMatrix,
    pub machines: Vec<BinaryMachine>,
}

impl SvmParams {
    pub(crate) fn scores(&self, x: &FeatureMatrix) -> Vec<[f64; 3]> {
        let sv_sq: Vec<f64> = self.support.rows().map(|r| r.sq_norm()).collect();
        x.rows()
            .map(|row| {
                let sq = row.sq_norm();
                let kv: Vec<f64> = self
                    .support
                    .rows()
                    .zip(&sv_sq)
                    .map(|(sv, &s)| row_kernel(&sv, s, &row, sq, self.gamma))
                    .collect();
                std::array::from_fn(|c| {
                    let m = &self.machines[c];
                    m.dual_coef.iter().zip(&kv).map(|(a, k)| a * k).sum::<f64>() + m.intercept
                })
            })
            .collect()
    }
}

/// Trains the three one-vs-rest machines, returning the model and the raw
/// dual solution of every binary problem (aligned with the training rows).
pub fn fit_one_vs_rest(
    x: &FeatureMatrix,
    y: &[Label],
    c: f64,
    gamma: Gamma,
    tol: f64,
    max_iter: usize,
) -> (SvmParams, Vec<SvmSolution>) {
    let gamma = match gamma {
        Gamma::Scale => scale_gamma(x),
        Gamma::Value(g) => g,
    };
    let mut cache = RowCache::new(x, gamma);
    let solutions: Vec<SvmSolution> = Label::ALL
        .iter()
        .map(|&class| {
            let yk: Vec<f64> = y.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
            smo(&mut cache, &yk, c, tol, max_iter)
        })
        .collect();

    let support_idx: Vec<usize> = (0..x.n_rows())
        .filter(|&t| solutions.iter().any(|s| s.alpha[t] > 0.0))
        .collect();
    let machines = Label::ALL
        .iter()
        .zip(&solutions)
        .map(|(&class, s)| BinaryMachine {
            dual_coef: support_idx
                .iter()
                .map(|&t| if y[t] == class { s.alpha[t] } else { -s.alpha[t] })
                .collect(),
            intercept: s.intercept,
            converged: s.converged,
        })
        .collect();
    (
        SvmParams {
            gamma,
            c,
            support: x.select_rows(&support_idx),
            machines,
        },
        solutions,
    )
}

/// Largest KKT violation of a binary solution, measured on `y * f(x) - 1`.
pub fn max_kkt_violation(k: &[Vec<f64>], y: &[f64], sol: &SvmSolution, c: f64) -> f64 {
    let n = y.len();
    let mut worst: f64 = 0.0;
    for t in 0..n {
        let f: f64 = (0..n).map(|s| sol.alpha[s] * y[s] * k[s][t]).sum::<f64>() + sol.intercept;
        let m = y[t] * f - 1.0;
        let a = sol.alpha[t];
        let v = if a <= 0.0 {
            (-m).max(0.0)
        } else if a >= c {
            m.max(0.0)
        } else {
            m.abs()
        };
        worst = worst.max(v);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        assert_eq!(rbf_kernel(&[0.3, -1.0], &[0.3, -1.0], 2.0).unwrap(), 1.0);
        let v = rbf_kernel(&[0.0, 0.0], &[1.0, 1.0], 0.5).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.367879).abs() < 1e-6);
        assert!(rbf_kernel(&[0.0], &[1.0, 1.0], 0.5).is_err());
        assert!(rbf_kernel(&[0.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn two_point_linear_dual() {
        // x = +1, -1 with a linear kernel: alpha = (0.5, 0.5), b = 0
        let k = vec![vec![1.0, -1.0], vec![-1.0, 1.0]];
        let sol = solve_binary_svm(&k, &[1.0, -1.0], 100.0, 1e-3, 1000).unwrap();
        assert!((sol.alpha[0] - 0.5).abs() < 1e-12);
        assert!((sol.alpha[1] - 0.5).abs() < 1e-12);
        assert!(sol.intercept.abs() < 1e-12);
        assert!(sol.converged);
    }

    #[test]
    fn iteration_cap_is_flagged() {
        let k: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..6).map(|j| (-0.1 * ((i as f64) - (j as f64)).powi(2)).exp()).collect())
            .collect();
        let y = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let sol = solve_binary_svm(&k, &y, 10.0, 1e-9, 1).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 1);
        let s: f64 = sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let k = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(solve_binary_svm(&k, &[1.0], 1.0, 1e-3, 10).is_err());
        assert!(solve_binary_svm(&k, &[1.0, 0.0], 1.0, 1e-3, 10).is_err());
        assert!(solve_binary_svm(&k, &[1.0, -1.0], 0.0, 1e-3, 10).is_err());
    }
}
