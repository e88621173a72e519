//! Paradigm cost ratios, the label-to-paradigm routing policy and the token
//! savings simulation.
//!
//! Savings are measured against always running one baseline paradigm
//! (IterativeRAG by default):
//! `savings = (C_baseline - C_router) / C_baseline * 100`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, LabelDistribution};
use crate::error::{Error, Result};
use crate::eval::EvalReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Paradigm {
    #[serde(rename = "LLM-Only", alias = "llm_only")]
    LlmOnly,
    #[serde(rename = "NaiveRAG", alias = "naive_rag")]
    NaiveRag,
    #[serde(rename = "GraphRAG", alias = "graph_rag")]
    GraphRag,
    #[serde(rename = "HybridRAG", alias = "hybrid_rag")]
    HybridRag,
    #[serde(rename = "IterativeRAG", alias = "iterative_rag")]
    IterativeRag,
}

impl Paradigm {
    pub const ALL: [Paradigm; 5] = [
        Paradigm::LlmOnly,
        Paradigm::NaiveRag,
        Paradigm::GraphRag,
        Paradigm::HybridRag,
        Paradigm::IterativeRag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Paradigm::LlmOnly => "LLM-Only",
            Paradigm::NaiveRag => "NaiveRAG",
            Paradigm::GraphRag => "GraphRAG",
            Paradigm::HybridRag => "HybridRAG",
            Paradigm::IterativeRag => "IterativeRAG",
        }
    }

    /// Default relative token cost.
    pub fn default_ratio(self) -> f64 {
        match self {
            Paradigm::LlmOnly => 1.0,
            Paradigm::NaiveRag => 1.4,
            Paradigm::GraphRag => 2.1,
            Paradigm::HybridRag => 2.8,
            Paradigm::IterativeRag => 3.5,
        }
    }
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Paradigm {
    type Err = Error;

    /// Accepts `NaiveRAG`, `naive_rag`, `naive-rag` and similar spellings.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Paradigm::ALL
            .into_iter()
            .find(|p| p.name().replace('-', "").to_ascii_lowercase() == key)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown paradigm {s:?}; expected one of LLM-Only, NaiveRAG, GraphRAG, HybridRAG, IterativeRAG"
                ))
            })
    }
}

/// Relative token cost per paradigm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTable {
    ratios: BTreeMap<Paradigm, f64>,
}

impl Default for CostTable {
    fn default() -> Self {
        CostTable {
            ratios: Paradigm::ALL.iter().map(|&p| (p, p.default_ratio())).collect(),
        }
    }
}

impl CostTable {
    pub fn set(&mut self, p: Paradigm, ratio: f64) -> Result<()> {
        if !(ratio > 0.0) || !ratio.is_finite() {
            return Err(Error::invalid(format!("cost ratio for {p} must be positive, got {ratio}")));
        }
        self.ratios.insert(p, ratio);
        Ok(())
    }

    pub fn remove(&mut self, p: Paradigm) {
        self.ratios.remove(&p);
    }

    pub fn cost(&self, p: Paradigm) -> Result<f64> {
        self.ratios
            .get(&p)
            .copied()
            .ok_or_else(|| Error::invalid(format!("paradigm {p} missing from the cost table")))
    }

    pub fn ratios(&self) -> &BTreeMap<Paradigm, f64> {
        &self.ratios
    }
}

/// Label to paradigm map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingPolicy {
    pub single_hop: Paradigm,
    pub multi_hop: Paradigm,
    pub summary: Paradigm,
}

impl Default for RoutingPolicy {
    fn default() -> Self {
        RoutingPolicy {
            single_hop: Paradigm::NaiveRag,
            multi_hop: Paradigm::HybridRag,
            summary: Paradigm::IterativeRag,
        }
    }
}

impl RoutingPolicy {
    pub fn set(&mut self, label: Label, p: Paradigm) {
        match label {
            Label::SingleHop => self.single_hop = p,
            Label::MultiHop => self.multi_hop = p,
            Label::Summary => self.summary = p,
        }
    }
}

pub fn map_label(policy: &RoutingPolicy, label: Label) -> Paradigm {
    match label {
        Label::SingleHop => policy.single_hop,
        Label::MultiHop => policy.multi_hop,
        Label::Summary => policy.summary,
    }
}

/// Table, policy and baseline bundled and cross-checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub table: CostTable,
    pub policy: RoutingPolicy,
    pub baseline: Paradigm,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            table: CostTable::default(),
            policy: RoutingPolicy::default(),
            baseline: Paradigm::IterativeRag,
        }
    }
}

impl CostModel {
    pub fn new(table: CostTable, policy: RoutingPolicy, baseline: Paradigm) -> Result<Self> {
        let m = CostModel { table, policy, baseline };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.table.cost(self.baseline)?;
        for l in Label::ALL {
            self.table.cost(map_label(&self.policy, l))?;
        }
        Ok(())
    }

    /// Paradigm and cost ratio for a label.
    pub fn route(&self, label: Label) -> Result<(Paradigm, f64)> {
        let p = map_label(&self.policy, label);
        Ok((p, self.table.cost(p)?))
    }

    pub fn simulate(&self, predicted: &[Label]) -> Result<SavingsResult> {
        simulate_savings(predicted, &self.table, &self.policy, self.baseline)
    }

    pub fn reference(&self, dist: &LabelDistribution) -> Result<f64> {
        reference_savings(dist, &self.table, &self.policy, self.baseline)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsResult {
    pub n: usize,
    /// Sum of per-query cost ratios.
    pub router_cost: f64,
    /// `n` times the baseline ratio.
    pub baseline_cost: f64,
    pub savings_percent: f64,
    pub counts: BTreeMap<Paradigm, usize>,
}

/// Mean routed cost per query from per-label proportions, summed in class
/// order so simulated and closed-form results agree bit for bit.
fn mean_cost(proportions: [f64; 3], table: &CostTable, policy: &RoutingPolicy) -> Result<f64> {
    let mut total = 0.0;
    for l in Label::ALL {
        total += proportions[l.index()] * table.cost(map_label(policy, l))?;
    }
    Ok(total)
}

fn savings(mean: f64, base: f64) -> f64 {
    (base - mean) / base * 100.0
}

pub fn simulate_savings(
    predicted: &[Label],
    table: &CostTable,
    policy: &RoutingPolicy,
    baseline: Paradigm,
) -> Result<SavingsResult> {
    if predicted.is_empty() {
        return Err(Error::invalid("savings simulation needs at least one prediction"));
    }
    let base = table.cost(baseline)?;
    let mut label_counts = [0usize; 3];
    let mut counts = BTreeMap::new();
    for &l in predicted {
        label_counts[l.index()] += 1;
        *counts.entry(map_label(policy, l)).or_insert(0) += 1;
    }
    let n = predicted.len();
    let dist = LabelDistribution::from_counts(label_counts)?;
    let mean = mean_cost(dist.proportions(), table, policy)?;
    Ok(SavingsResult {
        n,
        router_cost: mean * n as f64,
        baseline_cost: base * n as f64,
        savings_percent: savings(mean, base),
        counts,
    })
}

/// Savings of routing every query by its true label, for a label mix.
pub fn reference_savings(
    dist: &LabelDistribution,
    table: &CostTable,
    policy: &RoutingPolicy,
    baseline: Paradigm,
) -> Result<f64> {
    let base = table.cost(baseline)?;
    Ok(savings(mean_cost(dist.proportions(), table, policy)?, base))
}

/// One row of the savings-versus-quality table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    pub configuration: String,
    pub savings_percent: f64,
    pub macro_f1: f64,
}

/// Router row plus majority-class and perfect-label reference rows built
/// from the report's own label distribution.
pub fn policy_report(report: &EvalReport, model: &CostModel) -> Result<Vec<PolicyRow>> {
    let truth = report.true_labels();
    let router = model.simulate(&report.predicted_labels())?;
    let majority_pred = vec![Label::SingleHop; truth.len()];
    let majority = model.simulate(&majority_pred)?;
    let majority_f1 = crate::eval::macro_f1(&crate::eval::confusion(&truth, &majority_pred)?)?;
    let mut counts = [0usize; 3];
    truth.iter().for_each(|l| counts[l.index()] += 1);
    let perfect = model.reference(&LabelDistribution::from_counts(counts)?)?;
    Ok(vec![
        PolicyRow {
            configuration: format!("{} + {}", report.regime.display_name(), report.family.short_name()),
            savings_percent: router.savings_percent,
            macro_f1: report.macro_f1,
        },
        PolicyRow {
            configuration: "Majority class".into(),
            savings_percent: majority.savings_percent,
            macro_f1: majority_f1,
        },
        PolicyRow {
            configuration: "Perfect-label ref.".into(),
            savings_percent: perfect,
            macro_f1: 1.0,
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn benchmark_mix() -> Vec<Label> {
        let mut v = vec![Label::SingleHop; 529];
        v.extend(vec![Label::MultiHop; 171]);
        v.extend(vec![Label::Summary; 300]);
        v
    }

    #[test]
    fn default_mapping() {
        let p = RoutingPolicy::default();
        assert_eq!(map_label(&p, Label::SingleHop), Paradigm::NaiveRag);
        assert_eq!(map_label(&p, Label::MultiHop), Paradigm::HybridRag);
        assert_eq!(map_label(&p, Label::Summary), Paradigm::IterativeRag);
    }

    #[test]
    fn reference_constants() {
        let m = CostModel::default();
        let all_single = m.simulate(&[Label::SingleHop; 10]).unwrap();
        assert!((all_single.savings_percent - 60.0).abs() < 1e-9);
        let all_summary = m.simulate(&[Label::Summary; 10]).unwrap();
        assert_eq!(all_summary.savings_percent, 0.0);
        let perfect = m.simulate(&benchmark_mix()).unwrap();
        assert!((perfect.router_cost / 1000.0 - 2.2694).abs() < 1e-9);
        assert!((perfect.savings_percent - 35.16).abs() < 0.01);
        assert_eq!(perfect.counts.values().sum::<usize>(), 1000);
    }

    #[test]
    fn simulated_equals_reference_exactly() {
        let m = CostModel::default();
        let mix = benchmark_mix();
        let dist = LabelDistribution::from_counts([529, 171, 300]).unwrap();
        assert_eq!(m.simulate(&mix).unwrap().savings_percent, m.reference(&dist).unwrap());
    }

    #[test]
    fn paradigm_names_parse() {
        for p in Paradigm::ALL {
            assert_eq!(p.name().parse::<Paradigm>().unwrap(), p);
        }
        assert_eq!("naive_rag".parse::<Paradigm>().unwrap(), Paradigm::NaiveRag);
        assert_eq!("llm-only".parse::<Paradigm>().unwrap(), Paradigm::LlmOnly);
        assert!("fancy".parse::<Paradigm>().is_err());
    }

    #[test]
    fn missing_paradigm_is_rejected() {
        let mut t = CostTable::default();
        t.remove(Paradigm::HybridRag);
        assert!(CostModel::new(t, RoutingPolicy::default(), Paradigm::IterativeRag).is_err());
        assert!(CostTable::default().set(Paradigm::NaiveRag, 0.0).is_err());
        assert!(simulate_savings(&[], &CostTable::default(), &RoutingPolicy::default(), Paradigm::IterativeRag).is_err());
    }
}
