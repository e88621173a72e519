use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Tfidf,
    Embedding,
    Structural,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 3] = [FeatureKind::Tfidf, FeatureKind::Embedding, FeatureKind::Structural];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Tfidf => "tfidf",
            FeatureKind::Embedding => "embedding",
            FeatureKind::Structural => "structural",
        }
    }

    /// Column heading used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            FeatureKind::Tfidf => "TF-IDF",
            FeatureKind::Embedding => "Embedding",
            FeatureKind::Structural => "Structural",
        }
    }
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tfidf" | "tf-idf" => Ok(FeatureKind::Tfidf),
            "embedding" | "embeddings" | "minilm" => Ok(FeatureKind::Embedding),
            "structural" => Ok(FeatureKind::Structural),
            other => Err(Error::invalid(format!(
                "unknown feature regime {other:?}; expected one of tfidf, embedding, structural"
            ))),
        }
    }
}

/// Compressed sparse rows. Column indices within a row are strictly
/// increasing and no stored value is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseRows {
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Storage {
    Sparse(SparseRows),
    Dense(Vec<f64>),
}

/// Row-aligned feature values with the ids of the rows they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    ids: Vec<String>,
    n_cols: usize,
    kind: FeatureKind,
    storage: Storage,
}

/// Borrowed view of one row.
#[derive(Debug, Clone, Copy)]
pub enum Row<'a> {
    Sparse { indices: &'a [u32], values: &'a [f64] },
    Dense(&'a [f64]),
}

impl<'a> Row<'a> {
    pub fn dot(&self, other: &Row<'_>) -> f64 {
        match (self, other) {
            (Row::Dense(a), Row::Dense(b)) => a.iter().zip(b.iter()).map(|(x, y)| x * y).sum(),
            (Row::Sparse { indices, values }, Row::Dense(d))
            | (Row::Dense(d), Row::Sparse { indices, values }) => indices
                .iter()
                .zip(values.iter())
                .map(|(&j, v)| v * d[j as usize])
                .sum(),
            (
                Row::Sparse { indices: ia, values: va },
                Row::Sparse { indices: ib, values: vb },
            ) => {
                let (mut p, mut q, mut acc) = (0, 0, 0.0);
                while p < ia.len() && q < ib.len() {
                    match ia[p].cmp(&ib[q]) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            acc += va[p] * vb[q];
                            p += 1;
                            q += 1;
                        }
                    }
                }
                acc
            }
        }
    }

    /// Dot product with a dense weight slice.
    pub fn dot_dense(&self, w: &[f64]) -> f64 {
        self.dot(&Row::Dense(w))
    }

    pub fn sq_norm(&self) -> f64 {
        match self {
            Row::Dense(a) => a.iter().map(|x| x * x).sum(),
            Row::Sparse { values, .. } => values.iter().map(|x| x * x).sum(),
        }
    }

    /// Calls `f(column, value)` for every stored entry (all entries for dense rows).
    pub fn for_each(&self, mut f: impl FnMut(usize, f64)) {
        match self {
            Row::Dense(a) => a.iter().enumerate().for_each(|(j, &v)| f(j, v)),
            Row::Sparse { indices, values } => indices
                .iter()
                .zip(values.iter())
                .for_each(|(&j, &v)| f(j as usize, v)),
        }
    }

    pub fn get(&self, col: usize) -> f64 {
        match self {
            Row::Dense(a) => a[col],
            Row::Sparse { indices, values } => indices
                .binary_search(&(col as u32))
                .map(|p| values[p])
                .unwrap_or(0.0),
        }
    }

    pub fn to_dense(&self, n_cols: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_cols];
        self.for_each(|j, v| out[j] = v);
        out
    }
}

impl FeatureMatrix {
    /// Dense row-major matrix. Rejects non-finite values.
    pub fn dense(ids: Vec<String>, n_cols: usize, values: Vec<f64>, kind: FeatureKind) -> Result<Self> {
        if values.len() != ids.len() * n_cols {
            return Err(Error::DimensionMismatch {
                expected: ids.len() * n_cols,
                actual: values.len(),
            });
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite feature value in row {:?}",
                ids[p / n_cols.max(1)]
            )));
        }
        Ok(FeatureMatrix {
            ids,
            n_cols,
            kind,
            storage: Storage::Dense(values),
        })
    }

    /// Sparse matrix from per-row `(column, value)` lists. Zeros are dropped,
    /// entries are sorted by column and duplicate columns are summed.
    pub fn sparse(
        ids: Vec<String>,
        n_cols: usize,
        rows: Vec<Vec<(u32, f64)>>,
        kind: FeatureKind,
    ) -> Result<Self> {
        if rows.len() != ids.len() {
            return Err(Error::DimensionMismatch {
                expected: ids.len(),
                actual: rows.len(),
            });
        }
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            let mut merged: Vec<(u32, f64)> = Vec::with_capacity(row.len());
            for (j, v) in row {
                if j as usize >= n_cols {
                    return Err(Error::invalid(format!(
                        "column {j} out of range for {n_cols} columns in row {:?}",
                        ids[r]
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::invalid(format!("non-finite feature value in row {:?}", ids[r])));
                }
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += v,
                    _ => merged.push((j, v)),
                }
            }
            for (j, v) in merged {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(FeatureMatrix {
            ids,
            n_cols,
            kind,
            storage: Storage::Sparse(SparseRows {
                indptr,
                indices,
                values,
            }),
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn row(&self, i: usize) -> Row<'_> {
        match &self.storage {
            Storage::Dense(v) => Row::Dense(&v[i * self.n_cols..(i + 1) * self.n_cols]),
            Storage::Sparse(s) => {
                let (a, b) = (s.indptr[i], s.indptr[i + 1]);
                Row::Sparse {
                    indices: &s.indices[a..b],
                    values: &s.values[a..b],
                }
            }
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = Row<'_>> + '_ {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    /// Dense row-major values, densifying sparse storage.
    pub fn to_dense_values(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(v) => v.clone(),
            Storage::Sparse(_) => {
                let mut out = vec![0.0; self.n_rows() * self.n_cols];
                for (i, row) in self.rows().enumerate() {
                    let base = i * self.n_cols;
                    row.for_each(|j, v| out[base + j] = v);
                }
                out
            }
        }
    }

    /// Borrow dense values without copying, if stored densely.
    pub fn dense_values(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Dense(v) => Some(v),
            Storage::Sparse(_) => None,
        }
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let ids = indices.iter().map(|&i| self.ids[i].clone()).collect();
        let storage = match &self.storage {
            Storage::Dense(v) => {
                let mut out = Vec::with_capacity(indices.len() * self.n_cols);
                for &i in indices {
                    out.extend_from_slice(&v[i * self.n_cols..(i + 1) * self.n_cols]);
                }
                Storage::Dense(out)
            }
            Storage::Sparse(s) => {
                let mut indptr = vec![0];
                let mut idx = Vec::new();
                let mut vals = Vec::new();
                for &i in indices {
                    let (a, b) = (s.indptr[i], s.indptr[i + 1]);
                    idx.extend_from_slice(&s.indices[a..b]);
                    vals.extend_from_slice(&s.values[a..b]);
                    indptr.push(idx.len());
                }
                Storage::Sparse(SparseRows {
                    indptr,
                    indices: idx,
                    values: vals,
                })
            }
        };
        FeatureMatrix {
            ids,
            n_cols: self.n_cols,
            kind: self.kind,
            storage,
        }
    }

    /// Sum and sum of squares over every entry, zeros included.
    pub fn entry_moments(&self) -> (f64, f64) {
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for row in self.rows() {
            row.for_each(|_, v| {
                sum += v;
                sumsq += v * v;
            });
        }
        (sum, sumsq)
    }

    pub fn check_finite(&self) -> Result<()> {
        let vals = match &self.storage {
            Storage::Dense(v) => v,
            Storage::Sparse(s) => &s.values,
        };
        if vals.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("feature matrix contains non-finite values"))
        }
    }
}
