//! Query-type routing for retrieval-augmented generation.
//!
//! The crate predicts whether a query is a factual lookup (`single_hop`),
//! a cross-document reasoning question (`multi_hop`) or a corpus-level
//! aggregation request (`summary`) from the query text alone, and turns those
//! predictions into a recommended RAG paradigm with a relative token cost.
//!
//! Layout:
//!
//! - [`corpus`]: dataset schema, loading, label statistics, stratified folds
//!   and a synthetic corpus generator.
//! - [`features`]: TF-IDF, structural and embedding feature regimes plus
//!   z-score standardization.
//! - [`classifiers`]: logistic regression, RBF SVM, random forest, KNN and
//!   MLP behind one train/predict contract.
//! - [`eval`]: stratified cross-validation and classification metrics.
//! - [`cost`]: paradigm cost table, routing policy and savings simulation.
//! - [`pipeline`]: per-regime feature pipelines fitted on training rows.
//! - [`routing`]: the serialized model file and single-query routing used by
//!   both the CLI and the HTTP service.
//! - [`report`]: aligned text and CSV tables.

pub mod classifiers;
pub mod corpus;
pub mod cost;
pub mod error;
pub mod eval;
pub mod features;
pub mod pipeline;
pub mod report;
pub mod routing;

pub use corpus::{Dataset, Label, QueryRecord};
pub use error::{Error, Result};
