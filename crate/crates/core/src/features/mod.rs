//! Feature regimes: sparse TF-IDF, dense sentence embeddings and 23
//! hand-crafted structural features, plus z-score standardization for the
//! dense sets.

mod embedding;
mod matrix;
mod standardize;
mod structural;
mod tfidf;
mod tokenize;

pub use embedding::{
    fallback_embed, load_embeddings, parse_embeddings, write_embeddings, EmbeddingTable,
};
pub use matrix::{FeatureKind, FeatureMatrix, Row, SparseRows};
pub use standardize::{apply_standardizer, fit_standardizer, Standardizer};
pub use structural::{extract_structural, StructuralFeatureVector, STRUCTURAL_DIM, STRUCTURAL_NAMES};
pub use tfidf::{fit_tfidf, fit_tfidf_with_cap, term_ngrams, transform_tfidf, TfidfVocabulary, MAX_VOCAB, MIN_DF};
pub use tokenize::tokenize;
