//! Result tables: the classifier x feature grid, savings versus macro-F1,
//! and per-domain macro-F1. Each table renders as aligned text and as CSV.
//!
//! In text tables the best value of each column is marked with `*`,
//! comparing the numbers as printed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classifiers::Family;
use crate::corpus::{Dataset, CANONICAL_DOMAINS};
use crate::cost::{CostModel, PolicyRow};
use crate::error::Result;
use crate::eval::{csv_field, majority_metrics, EvalReport};
use crate::features::FeatureKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub savings_percent: f64,
    pub per_domain: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellOutcome {
    Ok(CellMetrics),
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub regime: FeatureKind,
    pub family: Family,
    pub outcome: CellOutcome,
}

impl Cell {
    pub fn metrics(&self) -> Option<&CellMetrics> {
        match &self.outcome {
            CellOutcome::Ok(m) => Some(m),
            CellOutcome::Error(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub savings_percent: f64,
}

/// Everything the three tables are rendered from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub n_queries: usize,
    /// Column heading for the embedding regime.
    pub embedding_label: String,
    pub cells: Vec<Cell>,
    pub majority: Baseline,
    pub perfect_label_savings: f64,
}

impl GridSummary {
    pub fn new(
        ds: &Dataset,
        embedding_label: impl Into<String>,
        results: Vec<(FeatureKind, Family, std::result::Result<EvalReport, String>)>,
        cost: &CostModel,
    ) -> Result<Self> {
        let mut cells = Vec::with_capacity(results.len());
        for (regime, family, r) in results {
            let outcome = match r {
                Ok(rep) => CellOutcome::Ok(CellMetrics {
                    accuracy: rep.accuracy,
                    macro_f1: rep.macro_f1,
                    savings_percent: cost.simulate(&rep.predicted_labels())?.savings_percent,
                    per_domain: rep.per_domain.clone(),
                }),
                Err(e) => CellOutcome::Error(e),
            };
            cells.push(Cell { regime, family, outcome });
        }
        let (accuracy, macro_f1) = majority_metrics(ds)?;
        let majority_savings = cost.simulate(&vec![crate::Label::SingleHop; ds.len()])?.savings_percent;
        Ok(GridSummary {
            n_queries: ds.len(),
            embedding_label: embedding_label.into(),
            cells,
            majority: Baseline {
                accuracy,
                macro_f1,
                savings_percent: majority_savings,
            },
            perfect_label_savings: cost.reference(&crate::corpus::label_distribution(ds)?)?,
        })
    }

    pub fn cell(&self, regime: FeatureKind, family: Family) -> Option<&Cell> {
        self.cells.iter().find(|c| c.regime == regime && c.family == family)
    }

    fn regime_name(&self, r: FeatureKind) -> String {
        match r {
            FeatureKind::Embedding => self.embedding_label.clone(),
            other => other.display_name().to_string(),
        }
    }

    fn regimes(&self) -> Vec<FeatureKind> {
        FeatureKind::ALL
            .into_iter()
            .filter(|r| self.cells.iter().any(|c| c.regime == *r))
            .collect()
    }

    fn families(&self) -> Vec<Family> {
        Family::ALL
            .into_iter()
            .filter(|f| self.cells.iter().any(|c| c.family == *f))
            .collect()
    }

    /// Highest macro-F1 cell per regime; ties go to the earlier family.
    pub fn best_per_regime(&self) -> Vec<&Cell> {
        self.regimes()
            .into_iter()
            .filter_map(|r| {
                let mut best: Option<&Cell> = None;
                for f in Family::ALL {
                    let Some(c) = self.cell(r, f) else { continue };
                    let Some(m) = c.metrics() else { continue };
                    if best.and_then(|b| b.metrics()).is_none_or(|bm| m.macro_f1 > bm.macro_f1) {
                        best = Some(c);
                    }
                }
                best
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

fn pct(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

fn f3(v: f64) -> String {
    format!("{v:.3}")
}

/// Append `*` to the entries equal to the column maximum (as printed).
fn mark_best(col: &mut [Option<String>]) {
    let best = col
        .iter()
        .flatten()
        .filter_map(|s| s.parse::<f64>().ok())
        .fold(f64::NEG_INFINITY, f64::max);
    for s in col.iter_mut().flatten() {
        if s.parse::<f64>().ok() == Some(best) {
            s.push('*');
        }
    }
}

fn render(rows: &[Vec<String>], right_from: usize) -> String {
    let n = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..n)
        .map(|j| rows.iter().filter_map(|r| r.get(j)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (j, cell) in row.iter().enumerate() {
            if j > 0 {
                line.push_str("  ");
            }
            let pad = widths[j] - cell.chars().count();
            if j >= right_from {
                line.push_str(&" ".repeat(pad));
                line.push_str(cell);
            } else {
                line.push_str(cell);
                line.push_str(&" ".repeat(pad));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn rule(text: &str) -> String {
    let w = text.lines().map(|l| l.chars().count()).max().unwrap_or(0);
    "-".repeat(w)
}

/// Classifier x regime grid of accuracy (%) and macro-F1.
pub fn table1_text(g: &GridSummary) -> String {
    let regimes = g.regimes();
    let families = g.families();
    // columns: per regime (acc, f1)
    let mut cols: Vec<Vec<Option<String>>> = Vec::new();
    for &r in &regimes {
        let mut acc = Vec::new();
        let mut f1 = Vec::new();
        for &f in &families {
            match g.cell(r, f).map(|c| &c.outcome) {
                Some(CellOutcome::Ok(m)) => {
                    acc.push(Some(pct(m.accuracy)));
                    f1.push(Some(f3(m.macro_f1)));
                }
                Some(CellOutcome::Error(_)) => {
                    acc.push(None);
                    f1.push(None);
                }
                None => {
                    acc.push(Some("-".into()));
                    f1.push(Some("-".into()));
                }
            }
        }
        mark_best(&mut acc);
        mark_best(&mut f1);
        cols.push(acc);
        cols.push(f1);
    }
    let mut rows = vec![
        std::iter::once(String::new())
            .chain(regimes.iter().flat_map(|&r| [g.regime_name(r), String::new()]))
            .collect::<Vec<_>>(),
        std::iter::once("Classifier".to_string())
            .chain(regimes.iter().flat_map(|_| ["Acc".to_string(), "F1".to_string()]))
            .collect(),
    ];
    for (i, f) in families.iter().enumerate() {
        let mut row = vec![f.display_name().to_string()];
        for col in &cols {
            row.push(col[i].clone().unwrap_or_else(|| "error".into()));
        }
        rows.push(row);
    }
    let body = render(&rows, 1);
    let sep = rule(&body);
    let mut lines: Vec<&str> = body.lines().collect();
    let data = lines.split_off(2);
    let mut out = String::new();
    let _ = writeln!(out, "Routing accuracy (Acc, %) and macro-F1, pooled cross-validation. * marks the best value per column.");
    let _ = writeln!(out, "{sep}");
    for l in lines {
        let _ = writeln!(out, "{l}");
    }
    let _ = writeln!(out, "{sep}");
    for l in data {
        let _ = writeln!(out, "{l}");
    }
    let _ = writeln!(out, "{sep}");
    let label_w = families
        .iter()
        .map(|f| f.display_name().len())
        .chain(["Classifier".len(), "Majority class".len()])
        .max()
        .unwrap_or(0);
    let _ = writeln!(
        out,
        "{:<label_w$}  {} / {}",
        "Majority class",
        pct(g.majority.accuracy),
        f3(g.majority.macro_f1)
    );
    let _ = writeln!(out, "{sep}");
    out
}

pub fn table1_csv(g: &GridSummary) -> String {
    let mut out = String::from("classifier,regime,accuracy_pct,macro_f1,status\n");
    for c in &g.cells {
        match &c.outcome {
            CellOutcome::Ok(m) => {
                let _ = writeln!(out, "{},{},{},{},ok", c.family, c.regime, m.accuracy * 100.0, m.macro_f1);
            }
            CellOutcome::Error(e) => {
                let _ = writeln!(out, "{},{},,,{}", c.family, c.regime, csv_field(&format!("error: {e}")));
            }
        }
    }
    let _ = writeln!(
        out,
        "majority_class,,{},{},ok",
        g.majority.accuracy * 100.0,
        g.majority.macro_f1
    );
    out
}

fn table2_rows(g: &GridSummary) -> (Vec<PolicyRow>, usize) {
    let mut rows: Vec<PolicyRow> = g
        .best_per_regime()
        .into_iter()
        .map(|c| {
            let m = c.metrics().expect("best cell has metrics");
            PolicyRow {
                configuration: format!("{} + {}", g.regime_name(c.regime), c.family.short_name()),
                savings_percent: m.savings_percent,
                macro_f1: m.macro_f1,
            }
        })
        .collect();
    let n = rows.len();
    rows.push(PolicyRow {
        configuration: "Majority class".into(),
        savings_percent: g.majority.savings_percent,
        macro_f1: g.majority.macro_f1,
    });
    rows.push(PolicyRow {
        configuration: "Perfect-label ref.".into(),
        savings_percent: g.perfect_label_savings,
        macro_f1: 1.0,
    });
    (rows, n)
}

/// Savings versus the always-baseline router for the best cell per regime
/// and the two reference rows.
pub fn table2_text(g: &GridSummary) -> String {
    let (rows, n) = table2_rows(g);
    policy_table_text(&rows, n)
}

pub fn table2_csv(g: &GridSummary) -> String {
    policy_table_csv(&table2_rows(g).0)
}

/// Configuration / Savings (%) / Macro-F1 table. A rule separates the first
/// `n_routers` rows from the reference rows below them.
pub fn policy_table_text(rows: &[PolicyRow], n_routers: usize) -> String {
    let mut grid = vec![vec!["Configuration".to_string(), "Savings (%)".into(), "Macro-F1".into()]];
    grid.extend(
        rows.iter()
            .map(|r| vec![r.configuration.clone(), format!("{:.1}", r.savings_percent), f3(r.macro_f1)]),
    );
    let body = render(&grid, 1);
    let sep = rule(&body);
    let lines: Vec<&str> = body.lines().collect();
    let mut out = String::from("Simulated token savings vs. always routing to the baseline paradigm.\n");
    let _ = writeln!(out, "{sep}\n{}\n{sep}", lines[0]);
    for l in &lines[1..1 + n_routers] {
        let _ = writeln!(out, "{l}");
    }
    if n_routers > 0 && n_routers < rows.len() {
        let _ = writeln!(out, "{sep}");
    }
    for l in &lines[1 + n_routers..] {
        let _ = writeln!(out, "{l}");
    }
    let _ = writeln!(out, "{sep}");
    out
}

pub fn policy_table_csv(rows: &[PolicyRow]) -> String {
    let mut out = String::from("configuration,savings_pct,macro_f1\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", csv_field(&r.configuration), r.savings_percent, r.macro_f1);
    }
    out
}

/// Domains present in the grid: canonical ones first, then the rest sorted.
fn domains(g: &GridSummary) -> Vec<String> {
    let mut seen: Vec<String> = Vec::new();
    for c in &g.cells {
        if let Some(m) = c.metrics() {
            for d in m.per_domain.keys() {
                if !seen.contains(d) {
                    seen.push(d.clone());
                }
            }
        }
    }
    let mut out: Vec<String> = CANONICAL_DOMAINS
        .iter()
        .filter(|d| seen.iter().any(|s| s == *d))
        .map(|d| d.to_string())
        .collect();
    let mut rest: Vec<String> = seen.into_iter().filter(|d| !out.contains(d)).collect();
    rest.sort();
    out.extend(rest);
    out
}

/// Per-domain macro-F1 for the best classifier of each regime.
pub fn table3_text(g: &GridSummary) -> String {
    let doms = domains(g);
    let best = g.best_per_regime();
    let mut cols: Vec<Vec<Option<String>>> = doms
        .iter()
        .map(|d| {
            best.iter()
                .map(|c| Some(c.metrics().and_then(|m| m.per_domain.get(d)).map_or("-".into(), |v| f3(*v))))
                .collect()
        })
        .collect();
    cols.iter_mut().for_each(|c| mark_best(c));
    let mut grid = vec![std::iter::once("Feature Set".to_string()).chain(doms.iter().cloned()).collect::<Vec<_>>()];
    for (i, c) in best.iter().enumerate() {
        let mut row = vec![format!("{} ({})", g.regime_name(c.regime), c.family.short_name())];
        row.extend(cols.iter().map(|col| col[i].clone().unwrap_or_default()));
        grid.push(row);
    }
    let body = render(&grid, 1);
    let sep = rule(&body);
    let lines: Vec<&str> = body.lines().collect();
    let mut out = String::from("Domain-level macro-F1, best classifier per feature set. * marks the best value per column.\n");
    let _ = writeln!(out, "{sep}\n{}\n{sep}", lines[0]);
    for l in &lines[1..] {
        let _ = writeln!(out, "{l}");
    }
    let _ = writeln!(out, "{sep}");
    out
}

pub fn table3_csv(g: &GridSummary) -> String {
    let mut out = String::from("regime,classifier,domain,macro_f1\n");
    for c in g.best_per_regime() {
        if let Some(m) = c.metrics() {
            for d in domains(g) {
                if let Some(v) = m.per_domain.get(&d) {
                    let _ = writeln!(out, "{},{},{},{v}", c.regime, c.family, csv_field(&d));
                }
            }
        }
    }
    out
}
