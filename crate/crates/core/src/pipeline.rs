//! Feature pipelines: the fitted state that turns raw query text (or a
//! precomputed vector) into the matrix a classifier was trained on.
//!
//! A pipeline is always fitted on training rows only and then applied
//! unchanged to held-out or live queries.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::features::{
    apply_standardizer, extract_structural, fallback_embed, fit_standardizer, fit_tfidf,
    transform_tfidf, EmbeddingTable, FeatureKind, FeatureMatrix, Standardizer, TfidfVocabulary,
    STRUCTURAL_DIM,
};

/// Where embedding vectors come from.
#[derive(Debug, Clone)]
pub enum EmbeddingInput {
    /// Vectors read from an embedding file, looked up by record id.
    Table(Arc<EmbeddingTable>),
    /// The deterministic hashing embedder.
    Fallback { dim: usize, seed: u64 },
}

/// A feature regime together with whatever raw input it needs.
#[derive(Debug, Clone)]
pub enum RegimeInput {
    Tfidf,
    Structural,
    Embedding(EmbeddingInput),
}

impl RegimeInput {
    pub fn regime(&self) -> FeatureKind {
        match self {
            RegimeInput::Tfidf => FeatureKind::Tfidf,
            RegimeInput::Structural => FeatureKind::Structural,
            RegimeInput::Embedding(_) => FeatureKind::Embedding,
        }
    }

    pub fn is_fallback(&self) -> bool {
        matches!(self, RegimeInput::Embedding(EmbeddingInput::Fallback { .. }))
    }

    fn table(&self) -> Option<&EmbeddingTable> {
        match self {
            RegimeInput::Embedding(EmbeddingInput::Table(t)) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Encoder {
    /// Vectors must be supplied by the caller (embedding file or request).
    Precomputed { dim: usize },
    Fallback { dim: usize, seed: u64 },
}

impl Encoder {
    pub fn dim(&self) -> usize {
        match *self {
            Encoder::Precomputed { dim } | Encoder::Fallback { dim, .. } => dim,
        }
    }
}

/// Fitted feature-pipeline state, stored in the model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum FeaturePipeline {
    Tfidf { vocabulary: TfidfVocabulary },
    Structural { standardizer: Standardizer },
    Embedding { encoder: Encoder, standardizer: Standardizer },
}

fn structural_matrix(ids: Vec<String>, texts: &[&str]) -> Result<FeatureMatrix> {
    let mut values = Vec::with_capacity(texts.len() * STRUCTURAL_DIM);
    for t in texts {
        values.extend_from_slice(extract_structural(t).values());
    }
    FeatureMatrix::dense(ids, STRUCTURAL_DIM, values, FeatureKind::Structural)
}

fn fallback_matrix(ids: Vec<String>, texts: &[&str], dim: usize, seed: u64) -> Result<FeatureMatrix> {
    let mut values = Vec::with_capacity(texts.len() * dim);
    for t in texts {
        values.extend(fallback_embed(t, dim, seed));
    }
    FeatureMatrix::dense(ids, dim, values, FeatureKind::Embedding)
}

/// Fit a pipeline on `train` and return it with the transformed training
/// matrix.
pub fn fit_pipeline(input: &RegimeInput, train: &Dataset) -> Result<(FeaturePipeline, FeatureMatrix)> {
    let ids: Vec<String> = train.records().iter().map(|r| r.id.clone()).collect();
    let texts = train.texts();
    match input {
        RegimeInput::Tfidf => {
            let vocabulary = fit_tfidf(&texts)?;
            let x = transform_tfidf(&vocabulary, ids, &texts)?;
            Ok((FeaturePipeline::Tfidf { vocabulary }, x))
        }
        RegimeInput::Structural => {
            let raw = structural_matrix(ids, &texts)?;
            let standardizer = fit_standardizer(&raw)?;
            let x = apply_standardizer(&standardizer, &raw)?;
            Ok((FeaturePipeline::Structural { standardizer }, x))
        }
        RegimeInput::Embedding(source) => {
            let (encoder, raw) = match source {
                EmbeddingInput::Table(table) => {
                    (Encoder::Precomputed { dim: table.dim() }, table.matrix_for(&ids)?)
                }
                &EmbeddingInput::Fallback { dim, seed } => {
                    (Encoder::Fallback { dim, seed }, fallback_matrix(ids, &texts, dim, seed)?)
                }
            };
            let standardizer = fit_standardizer(&raw)?;
            let x = apply_standardizer(&standardizer, &raw)?;
            Ok((FeaturePipeline::Embedding { encoder, standardizer }, x))
        }
    }
}

impl FeaturePipeline {
    pub fn regime(&self) -> FeatureKind {
        match self {
            FeaturePipeline::Tfidf { .. } => FeatureKind::Tfidf,
            FeaturePipeline::Structural { .. } => FeatureKind::Structural,
            FeaturePipeline::Embedding { .. } => FeatureKind::Embedding,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            FeaturePipeline::Tfidf { vocabulary } => vocabulary.len(),
            FeaturePipeline::Structural { standardizer } | FeaturePipeline::Embedding { standardizer, .. } => {
                standardizer.n_cols()
            }
        }
    }

    /// True when the pipeline can featurize raw text without outside vectors.
    pub fn accepts_text(&self) -> bool {
        !matches!(
            self,
            FeaturePipeline::Embedding { encoder: Encoder::Precomputed { .. }, .. }
        )
    }

    /// Featurize held-out records. For precomputed embeddings the vectors come
    /// from `input`'s table.
    pub fn transform_dataset(&self, input: &RegimeInput, ds: &Dataset) -> Result<FeatureMatrix> {
        let ids: Vec<String> = ds.records().iter().map(|r| r.id.clone()).collect();
        if let FeaturePipeline::Embedding { encoder: Encoder::Precomputed { dim }, standardizer } = self {
            let table = input
                .table()
                .ok_or_else(|| Error::invalid("precomputed-embedding pipeline needs an embedding file"))?;
            if table.dim() != *dim {
                return Err(Error::DimensionMismatch { expected: *dim, actual: table.dim() });
            }
            return apply_standardizer(standardizer, &table.matrix_for(&ids)?);
        }
        self.transform_texts(ids, &ds.texts())
    }

    /// Featurize raw query texts; `ids` label the rows.
    pub fn transform_texts(&self, ids: Vec<String>, texts: &[&str]) -> Result<FeatureMatrix> {
        match self {
            FeaturePipeline::Tfidf { vocabulary } => transform_tfidf(vocabulary, ids, texts),
            FeaturePipeline::Structural { standardizer } => {
                apply_standardizer(standardizer, &structural_matrix(ids, texts)?)
            }
            FeaturePipeline::Embedding { encoder: Encoder::Fallback { dim, seed }, standardizer } => {
                apply_standardizer(standardizer, &fallback_matrix(ids, texts, *dim, *seed)?)
            }
            FeaturePipeline::Embedding { encoder: Encoder::Precomputed { .. }, .. } => Err(Error::invalid(
                "this model was trained on precomputed embeddings; send a vector instead of text",
            )),
        }
    }

    /// Featurize raw embedding vectors (one per row). Only valid for the
    /// embedding regime.
    pub fn transform_vectors(&self, ids: Vec<String>, vectors: &[Vec<f64>]) -> Result<FeatureMatrix> {
        let FeaturePipeline::Embedding { encoder, standardizer } = self else {
            return Err(Error::invalid(format!(
                "vector input requires an embedding model, this one uses {}",
                self.regime()
            )));
        };
        let dim = encoder.dim();
        let mut values = Vec::with_capacity(vectors.len() * dim);
        for v in vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: v.len() });
            }
            values.extend_from_slice(v);
        }
        let raw = FeatureMatrix::dense(ids, dim, values, FeatureKind::Embedding)?;
        raw.check_finite()?;
        apply_standardizer(standardizer, &raw)
    }
}
