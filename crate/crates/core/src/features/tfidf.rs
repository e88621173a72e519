//! Unigram + bigram TF-IDF with sublinear term frequency.
//!
//! Weights: `(1 + ln tf) * idf` with `idf = ln((1 + N) / (1 + df)) + 1`,
//! then each row is scaled to unit L2 norm. The vocabulary keeps terms seen in
//! at least [`MIN_DF`] documents, capped at [`MAX_VOCAB`] by document
//! frequency (ties broken lexicographically). Columns are the retained terms in
//! lexicographic order.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::matrix::{FeatureKind, FeatureMatrix};
use super::tokenize::tokenize;
use crate::error::{Error, Result};

pub const MAX_VOCAB: usize = 3000;
pub const MIN_DF: usize = 2;

/// Unigrams followed by bigrams of adjacent tokens (joined by one space).
pub fn term_ngrams(text: &str) -> Vec<String> {
    let tokens = tokenize(text);
    let mut terms = Vec::with_capacity(tokens.len() * 2);
    for w in tokens.windows(2) {
        terms.push(format!("{} {}", w[0], w[1]));
    }
    terms.splice(0..0, tokens);
    terms
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct TfidfVocabulary {
    terms: Vec<String>,
    df: Vec<usize>,
    idf: Vec<f64>,
    n_docs: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    n_docs: usize,
    terms: Vec<String>,
    df: Vec<usize>,
    idf: Vec<f64>,
}

impl From<VocabRepr> for TfidfVocabulary {
    fn from(r: VocabRepr) -> Self {
        let index = r.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        TfidfVocabulary {
            terms: r.terms,
            df: r.df,
            idf: r.idf,
            n_docs: r.n_docs,
            index,
        }
    }
}

impl From<TfidfVocabulary> for VocabRepr {
    fn from(v: TfidfVocabulary) -> Self {
        VocabRepr {
            n_docs: v.n_docs,
            terms: v.terms,
            df: v.df,
            idf: v.idf,
        }
    }
}

impl TfidfVocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, term: &str) -> Option<usize> {
        self.column(term).map(|c| self.df[c])
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.column(term).map(|c| self.idf[c])
    }

    pub fn idf_values(&self) -> &[f64] {
        &self.idf
    }
}

pub fn fit_tfidf<S: AsRef<str>>(texts: &[S]) -> Result<TfidfVocabulary> {
    fit_tfidf_with_cap(texts, MAX_VOCAB)
}

pub fn fit_tfidf_with_cap<S: AsRef<str>>(texts: &[S], cap: usize) -> Result<TfidfVocabulary> {
    if texts.len() < 2 {
        return Err(Error::invalid(format!(
            "TF-IDF needs at least 2 documents, got {}",
            texts.len()
        )));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for text in texts {
        let unique: HashSet<String> = term_ngrams(text.as_ref()).into_iter().collect();
        for t in unique {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    // BTreeMap iteration is lexicographic, and the sort is stable, so equal
    // document frequencies stay in ascending term order.
    let mut kept: Vec<(String, usize)> = df.into_iter().filter(|&(_, d)| d >= MIN_DF).collect();
    if kept.is_empty() {
        return Err(Error::invalid(
            "TF-IDF vocabulary is empty: no term appears in at least 2 documents",
        ));
    }
    if kept.len() > cap {
        kept.sort_by(|a, b| b.1.cmp(&a.1));
        kept.truncate(cap);
        kept.sort_by(|a, b| a.0.cmp(&b.0));
    }

    let n = texts.len();
    let idf = kept
        .iter()
        .map(|&(_, d)| ((1.0 + n as f64) / (1.0 + d as f64)).ln() + 1.0)
        .collect();
    let (terms, df): (Vec<String>, Vec<usize>) = kept.into_iter().unzip();
    let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    Ok(TfidfVocabulary {
        terms,
        df,
        idf,
        n_docs: n,
        index,
    })
}

/// TF-IDF rows for `texts`; `ids` label the rows.
pub fn transform_tfidf<S: AsRef<str>>(
    vocab: &TfidfVocabulary,
    ids: Vec<String>,
    texts: &[S],
) -> Result<FeatureMatrix> {
    let rows = texts
        .iter()
        .map(|text| {
            let mut tf: BTreeMap<usize, u32> = BTreeMap::new();
            for term in term_ngrams(text.as_ref()) {
                if let Some(c) = vocab.column(&term) {
                    *tf.entry(c).or_insert(0) += 1;
                }
            }
            let mut row: Vec<(u32, f64)> = tf
                .into_iter()
                .map(|(c, n)| (c as u32, (1.0 + f64::from(n).ln()) * vocab.idf[c]))
                .collect();
            let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for (_, v) in row.iter_mut() {
                    *v /= norm;
                }
            }
            row
        })
        .collect();
    FeatureMatrix::sparse(ids, vocab.len(), rows, FeatureKind::Tfidf)
}
