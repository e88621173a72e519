//! Benchmark query records and dataset-level statistics.
//!
//! The on-disk format is line-delimited JSON, one flat object per line with
//! the string fields `id`, `query`, `domain` and `label`.

mod folds;
mod synth;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use folds::{stratified_kfold, FoldAssignment};
pub use synth::{generate_synthetic, SynthConfig, CANONICAL_DOMAINS};

/// Query type used as the routing target.
///
/// The declaration order is the class order used everywhere: score columns,
/// confusion matrix rows and the tie-break when two classes score equally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    SingleHop,
    MultiHop,
    Summary,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::SingleHop, Label::MultiHop, Label::Summary];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Label::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::SingleHop => "single_hop",
            Label::MultiHop => "multi_hop",
            Label::Summary => "summary",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single_hop" => Ok(Label::SingleHop),
            "multi_hop" => Ok(Label::MultiHop),
            "summary" => Ok(Label::Summary),
            other => Err(Error::invalid(format!(
                "unknown label {other:?}; expected one of single_hop, multi_hop, summary"
            ))),
        }
    }
}

/// Index of the largest score; earlier classes win ties.
pub fn argmax_label(scores: &[f64]) -> Label {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    Label::ALL[best]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub id: String,
    #[serde(rename = "query")]
    pub text: String,
    pub domain: String,
    pub label: Label,
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    query: String,
    domain: String,
    label: String,
}

/// An ordered, validated collection of query records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<QueryRecord>,
    label_counts: [usize; 3],
    domain_counts: BTreeMap<String, usize>,
}

impl Dataset {
    /// Validates ids and texts and computes tallies.
    pub fn from_records(records: Vec<QueryRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if r.text.trim().is_empty() {
                return Err(Error::invalid(format!("record {:?} has empty query text", r.id)));
            }
            if !seen.insert(r.id.as_str()) {
                return Err(Error::invalid(format!("duplicate id {:?}", r.id)));
            }
        }
        Ok(Self::tally(records))
    }

    fn tally(records: Vec<QueryRecord>) -> Self {
        let mut label_counts = [0usize; 3];
        let mut domain_counts = BTreeMap::new();
        for r in &records {
            label_counts[r.label.index()] += 1;
            *domain_counts.entry(r.domain.clone()).or_insert(0) += 1;
        }
        Dataset {
            records,
            label_counts,
            domain_counts,
        }
    }

    pub fn records(&self) -> &[QueryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn label_counts(&self) -> [usize; 3] {
        self.label_counts
    }

    pub fn domain_counts(&self) -> &BTreeMap<String, usize> {
        &self.domain_counts
    }

    pub fn labels(&self) -> Vec<Label> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.records.iter().map(|r| r.text.as_str()).collect()
    }

    /// Records at the given indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Self::tally(indices.iter().map(|&i| self.records[i].clone()).collect())
    }

    /// Serializes to the line-delimited format read by [`load_dataset`].
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&content)
}

/// Parses line-delimited records. Blank lines are skipped; every other line
/// must be a complete record.
pub fn parse_dataset(content: &str) -> Result<Dataset> {
    let mut records = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: line_no,
            message: format!("malformed record: {e}"),
        })?;
        let label = raw.label.parse::<Label>().map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if raw.query.trim().is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("record {:?} has empty query text", raw.id),
            });
        }
        if !seen.insert(raw.id.clone()) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate id {:?}", raw.id),
            });
        }
        records.push(QueryRecord {
            id: raw.id,
            text: raw.query,
            domain: raw.domain,
            label,
        });
    }
    Ok(Dataset::tally(records))
}

/// Share of each label in a dataset, in class order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    proportions: [f64; 3],
}

impl LabelDistribution {
    pub fn new(proportions: [f64; 3]) -> Result<Self> {
        if proportions.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("label proportions must lie in [0, 1]"));
        }
        let sum: f64 = proportions.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("label proportions sum to {sum}, not 1")));
        }
        Ok(Self { proportions })
    }

    pub fn from_counts(counts: [usize; 3]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::invalid("label distribution of an empty dataset"));
        }
        let n = total as f64;
        Ok(Self {
            proportions: counts.map(|c| c as f64 / n),
        })
    }

    pub fn proportions(&self) -> [f64; 3] {
        self.proportions
    }

    pub fn get(&self, label: Label) -> f64 {
        self.proportions[label.index()]
    }
}

pub fn label_distribution(ds: &Dataset) -> Result<LabelDistribution> {
    LabelDistribution::from_counts(ds.label_counts())
}
