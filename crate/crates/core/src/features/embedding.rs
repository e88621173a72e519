//! Precomputed sentence embeddings and a deterministic hashing substitute.
//!
//! File format: a header line `n<TAB>dim`, then `n` lines of
//! `id<TAB>v1<TAB>...<TAB>vdim` with decimal floats.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::matrix::{FeatureKind, FeatureMatrix};
use super::tokenize::tokenize;
use crate::corpus::Dataset;
use crate::error::{Error, Result};

/// Vectors keyed by record id, as read from an embedding file.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    ids: Vec<String>,
    values: Vec<f64>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index
            .get(id)
            .map(|&i| &self.values[i * self.dim..(i + 1) * self.dim])
    }

    /// Dense matrix with one row per requested id, in the requested order.
    pub fn matrix_for<S: AsRef<str>>(&self, ids: &[S]) -> Result<FeatureMatrix> {
        let mut values = Vec::with_capacity(ids.len() * self.dim);
        for id in ids {
            let v = self.get(id.as_ref()).ok_or_else(|| {
                Error::invalid(format!("id {:?} missing from embedding file", id.as_ref()))
            })?;
            values.extend_from_slice(v);
        }
        FeatureMatrix::dense(
            ids.iter().map(|s| s.as_ref().to_string()).collect(),
            self.dim,
            values,
            FeatureKind::Embedding,
        )
    }
}

pub fn parse_embeddings(content: &str) -> Result<EmbeddingTable> {
    let mut lines = content.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, message: "missing header".into() })?;
    let mut parts = header.split('\t');
    let parse_usize = |s: Option<&str>, what: &str| -> Result<usize> {
        s.and_then(|v| v.trim().parse().ok()).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("header must be `n<TAB>dim`; bad {what}"),
        })
    };
    let n = parse_usize(parts.next(), "n")?;
    let dim = parse_usize(parts.next(), "dim")?;
    if dim == 0 {
        return Err(Error::Parse { line: 1, message: "dimension must be positive".into() });
    }

    let mut ids = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n * dim);
    let mut index = HashMap::with_capacity(n);
    for (i, line) in lines {
        let line_no = i + 1;
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or_default().to_string();
        let row: Vec<&str> = fields.collect();
        if row.len() != dim {
            return Err(Error::Parse {
                line: line_no,
                message: format!("row {id:?} has {} values, expected dimension {dim}", row.len()),
            });
        }
        for field in row {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("row {id:?}: bad value {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("row {id:?}: non-finite value {field:?}"),
                });
            }
            values.push(v);
        }
        if index.insert(id.clone(), ids.len()).is_some() {
            return Err(Error::Parse { line: line_no, message: format!("duplicate id {id:?}") });
        }
        ids.push(id);
    }
    if ids.len() != n {
        return Err(Error::invalid(format!(
            "embedding header declares {n} rows but file has {}",
            ids.len()
        )));
    }
    Ok(EmbeddingTable { dim, ids, values, index })
}

/// Reads an embedding file and aligns its rows with `ds` record order.
pub fn load_embeddings(path: impl AsRef<Path>, ds: &Dataset) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let table = parse_embeddings(&content)?;
    let ids: Vec<&str> = ds.records().iter().map(|r| r.id.as_str()).collect();
    table.matrix_for(&ids)
}

pub fn write_embeddings(path: impl AsRef<Path>, m: &FeatureMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let _ = writeln!(out, "{}\t{}", m.n_rows(), m.n_cols());
    for (id, row) in m.ids().iter().zip(m.rows()) {
        out.push_str(id);
        for v in row.to_dense(m.n_cols()) {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn token_basis(token: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(token.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    let mut rng = ChaCha8Rng::from_seed(key);
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Hash-based stand-in for a sentence encoder: the L2-normalized sum of one
/// seeded pseudo-random basis vector per token. Empty text maps to zeros.
pub fn fallback_embed(text: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for token in tokenize(text) {
        for (acc, b) in v.iter_mut().zip(token_basis(&token, dim, seed)) {
            *acc += b;
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, QueryRecord};

    fn ds(ids: &[&str]) -> Dataset {
        Dataset::from_records(
            ids.iter()
                .map(|id| QueryRecord {
                    id: id.to_string(),
                    text: format!("text {id}"),
                    domain: "wiki".into(),
                    label: Label::SingleHop,
                })
                .collect(),
        )
        .unwrap()
    }

    fn file(rows: &[(&str, usize)], dim: usize) -> String {
        let mut s = format!("{}\t{dim}\n", rows.len());
        for (id, n) in rows {
            s.push_str(id);
            for j in 0..*n {
                s.push_str(&format!("\t{}", j as f64 * 0.5));
            }
            s.push('\n');
        }
        s
    }

    #[test]
    fn aligns_rows_with_dataset_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.tsv");
        fs::write(&path, file(&[("q3", 384), ("q1", 384), ("q2", 384)], 384)).unwrap();
        let m = load_embeddings(&path, &ds(&["q1", "q2", "q3"])).unwrap();
        assert_eq!((m.n_rows(), m.n_cols()), (3, 384));
        assert_eq!(m.ids(), ["q1", "q2", "q3"]);
    }

    #[test]
    fn missing_id_is_named() {
        let table = parse_embeddings(&file(&[("q1", 4)], 4)).unwrap();
        let err = table.matrix_for(&["q1", "q9"]).unwrap_err().to_string();
        assert!(err.contains("q9"), "{err}");
    }

    #[test]
    fn short_row_is_named() {
        let err = parse_embeddings(&file(&[("q1", 384), ("q2", 383)], 384))
            .unwrap_err()
            .to_string();
        assert!(err.contains("q2") && err.contains("383"), "{err}");
    }

    #[test]
    fn non_finite_and_header_errors() {
        assert!(parse_embeddings("1\t2\nq1\t0.5\tNaN\n").is_err());
        assert!(parse_embeddings("1\t2\nq1\t0.5\tinf\n").is_err());
        assert!(parse_embeddings("two\t2\n").is_err());
        assert!(parse_embeddings("2\t1\nq1\t0.5\n").is_err());
    }

    #[test]
    fn write_then_parse_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.tsv");
        let m = FeatureMatrix::dense(
            vec!["a".into(), "b".into()],
            3,
            vec![0.1, -2.5e-7, 3.0, 1.0 / 3.0, 0.0, -1.0],
            FeatureKind::Embedding,
        )
        .unwrap();
        write_embeddings(&path, &m).unwrap();
        let back = parse_embeddings(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back.matrix_for(&["a", "b"]).unwrap(), m);
    }

    #[test]
    fn fallback_is_deterministic_and_normalized() {
        let a = fallback_embed("What is the capital of France?", 64, 3);
        assert_eq!(a, fallback_embed("What is the capital of France?", 64, 3));
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
        assert!(fallback_embed("", 64, 3).iter().all(|&x| x == 0.0));
        assert_ne!(a, fallback_embed("What is the capital of France?", 64, 4));
    }
}
