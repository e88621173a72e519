use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use crate::error::{Error, Result};

/// Per-column z-score parameters using the population deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    pub fn n_cols(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    /// Columns that had no spread in the fitting rows; they map to 0.
    pub fn zero_variance(&self) -> Vec<bool> {
        self.std.iter().map(|&s| s == 0.0).collect()
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_cols() {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols(),
                actual: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&x, (&m, &s))| (x - m) / if s == 0.0 { 1.0 } else { s })
            .collect())
    }
}

pub fn fit_standardizer(x: &FeatureMatrix) -> Result<Standardizer> {
    let (n, d) = (x.n_rows(), x.n_cols());
    if n == 0 || d == 0 {
        return Err(Error::invalid("cannot fit a standardizer on an empty matrix"));
    }
    let mut mean = vec![0.0; d];
    for row in x.rows() {
        row.for_each(|j, v| mean[j] += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for row in x.rows() {
        for (j, v) in row.to_dense(d).into_iter().enumerate() {
            let c = v - mean[j];
            var[j] += c * c;
        }
    }
    let std = var
        .into_iter()
        .map(|s| {
            let sd = (s / n as f64).sqrt();
            // spread at rounding level counts as constant
            if sd <= 1e-12 * (1.0 + sd.abs()) { 0.0 } else { sd }
        })
        .collect();
    Ok(Standardizer { mean, std })
}

pub fn apply_standardizer(s: &Standardizer, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    if x.n_cols() != s.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: s.n_cols(),
            actual: x.n_cols(),
        });
    }
    let mut values = Vec::with_capacity(x.n_rows() * x.n_cols());
    for row in x.rows() {
        values.extend(s.apply_row(&row.to_dense(x.n_cols()))?);
    }
    FeatureMatrix::dense(x.ids().to_vec(), x.n_cols(), values, x.kind())
}
