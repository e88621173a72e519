//! Twenty-three hand-crafted structural features.
//!
//! Word-level rules operate on whitespace-separated words with leading and
//! trailing punctuation stripped. Keyword lookups use the lowercased word up
//! to its first apostrophe, so "what's" matches "what".

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

pub const STRUCTURAL_DIM: usize = 23;

pub const STRUCTURAL_NAMES: [&str; STRUCTURAL_DIM] = [
    "word_count",
    "char_count",
    "mean_word_length",
    "qword_who",
    "qword_what",
    "qword_when",
    "qword_where",
    "qword_why",
    "qword_how",
    "qword_which",
    "negation",
    "entity_count",
    "clause_count",
    "comparative",
    "temporal",
    "aggregation",
    "causal",
    "procedural",
    "question_mark",
    "has_digit",
    "comma_count",
    "coord_conj_count",
    "type_token_ratio",
];

const QUESTION_WORDS: [&str; 7] = ["who", "what", "when", "where", "why", "how", "which"];
const QWORD_OFFSET: usize = 3;

const NEGATION: &[&str] = &["not", "no", "never", "none"];

// Subordinating conjunctions and relative pronouns; each non-initial
// occurrence opens one more clause.
const CLAUSE_MARKERS: &[&str] = &[
    "after", "although", "because", "before", "if", "once", "since", "though", "unless", "until",
    "when", "whenever", "where", "whereas", "wherever", "whether", "while", "that", "which", "who",
    "whom", "whose",
];

const COMPARATIVE: &[&str] = &[
    "more", "less", "than", "compare", "compared", "comparing", "comparison", "versus", "vs",
    "differ", "difference", "differences", "different", "similar", "similarity", "better", "worse",
    "greater", "fewer",
];
const TEMPORAL: &[&str] = &[
    "when", "before", "after", "during", "year", "years", "date", "dates", "century", "decade",
    "since", "until", "period", "later", "earlier",
];
const AGGREGATION: &[&str] = &[
    "summarize", "summarise", "summary", "summarization", "overall", "all", "total", "list",
    "overview", "entire", "whole", "every", "themes", "aggregate",
];
const CAUSAL: &[&str] = &[
    "why", "because", "cause", "causes", "caused", "causing", "lead", "leads", "led", "result",
    "results", "effect", "effects", "due", "consequence", "reason", "impact",
];
const PROCEDURAL: &[&str] = &[
    "how", "steps", "step", "process", "procedure", "procedures", "method", "instructions",
];
const COORDINATING: &[&str] = &["for", "and", "nor", "but", "or", "yet", "so"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralFeatureVector(pub [f64; STRUCTURAL_DIM]);

impl StructuralFeatureVector {
    pub fn values(&self) -> &[f64; STRUCTURAL_DIM] {
        &self.0
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        STRUCTURAL_NAMES.iter().position(|&n| n == name).map(|i| self.0[i])
    }
}

struct Word<'a> {
    original: &'a str,
    lower: String,
    base: String,
    sentence_initial: bool,
}

fn words(text: &str) -> Vec<Word<'_>> {
    let mut out = Vec::new();
    let mut next_initial = true;
    for raw in text.split_whitespace() {
        let stripped = raw.trim_matches(|c: char| !c.is_alphanumeric());
        let ends_sentence = raw
            .trim_end_matches(|c: char| matches!(c, '"' | '\'' | ')' | ']'))
            .ends_with(['.', '!', '?']);
        if stripped.is_empty() {
            next_initial |= ends_sentence;
            continue;
        }
        let lower = stripped.to_lowercase();
        let base = lower
            .split(['\'', '\u{2019}'])
            .next()
            .unwrap_or_default()
            .to_string();
        out.push(Word {
            original: stripped,
            lower,
            base,
            sentence_initial: next_initial,
        });
        next_initial = ends_sentence;
    }
    out
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn extract_structural(text: &str) -> StructuralFeatureVector {
    let mut v = [0.0; STRUCTURAL_DIM];
    let ws = words(text);
    let n = ws.len();

    v[0] = n as f64;
    v[1] = text.trim().chars().count() as f64;
    if n > 0 {
        v[2] = ws.iter().map(|w| w.original.chars().count()).sum::<usize>() as f64 / n as f64;
    }

    if let Some(q) = ws
        .iter()
        .find_map(|w| QUESTION_WORDS.iter().position(|&q| q == w.base))
    {
        v[QWORD_OFFSET + q] = 1.0;
    }

    let has = |list: &[&str]| ws.iter().any(|w| list.contains(&w.base.as_str()));

    v[10] = flag(
        has(NEGATION)
            || ws
                .iter()
                .any(|w| w.lower.ends_with("n't") || w.lower.ends_with("n\u{2019}t")),
    );
    v[11] = ws
        .iter()
        .filter(|w| {
            !w.sentence_initial
                && w.original != "I"
                && w.original.chars().next().is_some_and(char::is_uppercase)
        })
        .count() as f64;
    if n > 0 {
        let markers = ws
            .iter()
            .skip(1)
            .filter(|w| CLAUSE_MARKERS.contains(&w.base.as_str()))
            .count();
        v[12] = (1 + markers) as f64;
    }

    v[13] = flag(has(COMPARATIVE));
    v[14] = flag(has(TEMPORAL));
    v[15] = flag(has(AGGREGATION));
    v[16] = flag(has(CAUSAL));
    v[17] = flag(has(PROCEDURAL));

    v[18] = flag(text.contains('?'));
    v[19] = flag(text.chars().any(|c| c.is_ascii_digit()));
    v[20] = text.chars().filter(|&c| c == ',').count() as f64;
    v[21] = ws
        .iter()
        .filter(|w| COORDINATING.contains(&w.base.as_str()))
        .count() as f64;
    if n > 0 {
        let distinct: HashSet<&str> = ws.iter().map(|w| w.lower.as_str()).collect();
        v[22] = distinct.len() as f64 / n as f64;
    }
    StructuralFeatureVector(v)
}
