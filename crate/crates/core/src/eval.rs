//! Classification metrics and the stratified cross-validation harness.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{predict_scores, train, ClassifierSpec, Family, ScoreKind};
use crate::corpus::{argmax_label, stratified_kfold, Dataset, Label};
use crate::error::{Error, Result};
use crate::features::FeatureKind;
use crate::pipeline::{fit_pipeline, RegimeInput};

/// Counts indexed `[true][predicted]` in class order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[u64; 3]; 3]);

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn get(&self, truth: Label, predicted: Label) -> u64 {
        self.0[truth.index()][predicted.index()]
    }

    pub fn add(&mut self, truth: Label, predicted: Label) {
        self.0[truth.index()][predicted.index()] += 1;
    }

    pub fn precision(&self, l: Label) -> f64 {
        let i = l.index();
        let col: u64 = (0..3).map(|r| self.0[r][i]).sum();
        ratio(self.0[i][i] as f64, col as f64)
    }

    pub fn recall(&self, l: Label) -> f64 {
        let i = l.index();
        let row: u64 = self.0[i].iter().sum();
        ratio(self.0[i][i] as f64, row as f64)
    }

    pub fn f1(&self, l: Label) -> f64 {
        let (p, r) = (self.precision(l), self.recall(l));
        ratio(2.0 * p * r, p + r)
    }

    fn trace(&self) -> u64 {
        (0..3).map(|i| self.0[i][i]).sum()
    }
}

pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::invalid("confusion matrix of zero predictions"));
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        cm.add(t, p);
    }
    Ok(cm)
}

pub fn macro_f1(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.total() == 0 {
        return Err(Error::invalid("macro-F1 of an empty confusion matrix"));
    }
    Ok(Label::ALL.iter().map(|&l| cm.f1(l)).sum::<f64>() / 3.0)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.total() == 0 {
        return Err(Error::invalid("accuracy of an empty confusion matrix"));
    }
    Ok(cm.trace() as f64 / cm.total() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// One pooled out-of-fold prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPrediction {
    pub id: String,
    pub domain: String,
    #[serde(rename = "true")]
    pub truth: Label,
    pub predicted: Label,
    pub fold: usize,
    pub scores: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub regime: FeatureKind,
    pub family: Family,
    pub k: usize,
    pub seed: u64,
    pub n_queries: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: ConfusionMatrix,
    pub per_domain: BTreeMap<String, f64>,
    pub score_kind: ScoreKind,
    pub predictions: Vec<QueryPrediction>,
}

impl EvalReport {
    /// Assemble a report from pooled predictions.
    pub fn from_predictions(
        regime: FeatureKind,
        family: Family,
        k: usize,
        seed: u64,
        score_kind: ScoreKind,
        predictions: Vec<QueryPrediction>,
    ) -> Result<Self> {
        let truth: Vec<Label> = predictions.iter().map(|p| p.truth).collect();
        let pred: Vec<Label> = predictions.iter().map(|p| p.predicted).collect();
        let cm = confusion(&truth, &pred)?;
        let per_class = Label::ALL
            .iter()
            .map(|&l| ClassMetrics {
                label: l,
                precision: cm.precision(l),
                recall: cm.recall(l),
                f1: cm.f1(l),
                support: cm.0[l.index()].iter().sum(),
            })
            .collect();
        let mut report = EvalReport {
            regime,
            family,
            k,
            seed,
            n_queries: predictions.len(),
            accuracy: accuracy(&cm)?,
            macro_f1: macro_f1(&cm)?,
            per_class,
            confusion: cm,
            per_domain: BTreeMap::new(),
            score_kind,
            predictions,
        };
        report.per_domain = per_domain_breakdown(&report);
        Ok(report)
    }

    pub fn predicted_labels(&self) -> Vec<Label> {
        self.predictions.iter().map(|p| p.predicted).collect()
    }

    pub fn true_labels(&self) -> Vec<Label> {
        self.predictions.iter().map(|p| p.truth).collect()
    }

    /// Flat per-query CSV: `id,domain,true,predicted,fold`.
    pub fn per_query_csv(&self) -> String {
        let mut out = String::from("id,domain,true,predicted,fold\n");
        for p in &self.predictions {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                csv_field(&p.id),
                csv_field(&p.domain),
                p.truth,
                p.predicted,
                p.fold
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Macro-F1 per domain over the pooled predictions.
pub fn per_domain_breakdown(report: &EvalReport) -> BTreeMap<String, f64> {
    let mut by_domain: BTreeMap<&str, ConfusionMatrix> = BTreeMap::new();
    for p in &report.predictions {
        by_domain.entry(&p.domain).or_default().add(p.truth, p.predicted);
    }
    by_domain
        .into_iter()
        .map(|(d, cm)| (d.to_string(), macro_f1(&cm).expect("non-empty domain")))
        .collect()
}

/// Instrumentation hooks called from inside [`cross_validate_observed`].
/// Folds run concurrently, so implementations must be thread-safe.
pub trait FoldObserver: Sync {
    /// Ids whose text (or vectors) the feature pipeline was fitted on.
    fn pipeline_fit(&self, _fold: usize, _ids: &[String]) {}
    /// Ids the classifier was trained on.
    fn model_fit(&self, _fold: usize, _ids: &[String]) {}
    /// Ids predicted by the fold's model.
    fn evaluated(&self, _fold: usize, _ids: &[String]) {}
}

struct NoObserver;
impl FoldObserver for NoObserver {}

pub fn cross_validate(
    ds: &Dataset,
    input: &RegimeInput,
    spec: &ClassifierSpec,
    k: usize,
    seed: u64,
) -> Result<EvalReport> {
    cross_validate_observed(ds, input, spec, k, seed, &NoObserver)
}

pub fn cross_validate_observed(
    ds: &Dataset,
    input: &RegimeInput,
    spec: &ClassifierSpec,
    k: usize,
    seed: u64,
    observer: &dyn FoldObserver,
) -> Result<EvalReport> {
    let folds = stratified_kfold(ds, k, seed)?;
    let results: Vec<Result<(Vec<usize>, Vec<[f64; 3]>, ScoreKind)>> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let (train_idx, test_idx) = folds.split(fold);
            let train_ds = ds.subset(&train_idx);
            let test_ds = ds.subset(&test_idx);
            let train_ids: Vec<String> = train_ds.records().iter().map(|r| r.id.clone()).collect();
            observer.pipeline_fit(fold, &train_ids);
            let (pipeline, x_train) = fit_pipeline(input, &train_ds)?;
            observer.model_fit(fold, x_train.ids());
            let model = train(spec, &x_train, &train_ds.labels())?;
            let x_test = pipeline.transform_dataset(input, &test_ds)?;
            observer.evaluated(fold, x_test.ids());
            let scores = predict_scores(&model, &x_test)?;
            Ok((test_idx, scores.rows, scores.kind))
        })
        .collect();

    let mut slots: Vec<Option<QueryPrediction>> = vec![None; ds.len()];
    let mut kind = None;
    for (fold, result) in results.into_iter().enumerate() {
        let (test_idx, rows, k) = result?;
        kind = Some(k);
        for (i, scores) in test_idx.into_iter().zip(rows) {
            let r = &ds.records()[i];
            slots[i] = Some(QueryPrediction {
                id: r.id.clone(),
                domain: r.domain.clone(),
                truth: r.label,
                predicted: argmax_label(&scores),
                fold,
                scores,
            });
        }
    }
    let predictions: Vec<QueryPrediction> = slots
        .into_iter()
        .map(|p| p.ok_or_else(|| Error::Model("a record was never held out".into())))
        .collect::<Result<_>>()?;
    EvalReport::from_predictions(
        input.regime(),
        spec.family(),
        k,
        seed,
        kind.expect("k >= 2 folds"),
        predictions,
    )
}

/// `(accuracy, macro_f1)` of always predicting `single_hop`.
pub fn majority_metrics(ds: &Dataset) -> Result<(f64, f64)> {
    let truth = ds.labels();
    let cm = confusion(&truth, &vec![Label::SingleHop; truth.len()])?;
    Ok((accuracy(&cm)?, macro_f1(&cm)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    #[test]
    fn identity_and_off_diagonal() {
        let cm = confusion(&[SingleHop, MultiHop, Summary], &[SingleHop, MultiHop, Summary]).unwrap();
        assert_eq!(cm.0, [[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        assert_eq!(macro_f1(&cm).unwrap(), 1.0);
        assert_eq!(accuracy(&cm).unwrap(), 1.0);
        let cm = confusion(&[SingleHop; 4], &[Summary; 4]).unwrap();
        assert_eq!(cm.0[0][2], 4);
        assert_eq!(cm.total(), 4);
        assert!(confusion(&[SingleHop], &[]).is_err());
        assert!(macro_f1(&ConfusionMatrix::default()).is_err());
    }

    #[test]
    fn hand_computed_macro_f1() {
        let cm = ConfusionMatrix([[8, 2, 0], [1, 9, 0], [0, 0, 10]]);
        // single_hop: P = 8/9, R = 8/10; multi_hop: P = 9/11, R = 9/10; summary 1.
        let f = |p: f64, r: f64| 2.0 * p * r / (p + r);
        let want = (f(8.0 / 9.0, 0.8) + f(9.0 / 11.0, 0.9) + 1.0) / 3.0;
        assert!((macro_f1(&cm).unwrap() - want).abs() < 1e-9);
        assert!((accuracy(&cm).unwrap() - 27.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_confusion_accuracy() {
        let cm = ConfusionMatrix([[4; 3]; 3]);
        assert!((accuracy(&cm).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    fn pred(id: &str, domain: &str, t: Label, p: Label) -> QueryPrediction {
        QueryPrediction {
            id: id.into(),
            domain: domain.into(),
            truth: t,
            predicted: p,
            fold: 0,
            scores: [0.0; 3],
        }
    }

    #[test]
    fn domain_breakdown_perfect_and_wrong() {
        let preds = vec![
            pred("a", "legal", SingleHop, SingleHop),
            pred("b", "legal", MultiHop, MultiHop),
            pred("c", "legal", Summary, Summary),
            pred("d", "medical", SingleHop, MultiHop),
            pred("e", "medical", MultiHop, Summary),
            pred("f", "medical", Summary, SingleHop),
        ];
        let r = EvalReport::from_predictions(FeatureKind::Tfidf, Family::Knn, 2, 0, ScoreKind::VoteFraction, preds)
            .unwrap();
        assert_eq!(r.per_domain["legal"], 1.0);
        assert_eq!(r.per_domain["medical"], 0.0);
        assert_eq!(r.per_domain.len(), 2);
    }

    #[test]
    fn csv_escapes_commas() {
        let r = EvalReport::from_predictions(
            FeatureKind::Tfidf,
            Family::Knn,
            2,
            0,
            ScoreKind::VoteFraction,
            vec![pred("a,b", "wiki", SingleHop, Summary)],
        )
        .unwrap();
        assert_eq!(r.per_query_csv(), "id,domain,true,predicted,fold\n\"a,b\",wiki,single_hop,summary,0\n");
    }
}
