//! Five classifier families behind one train / predict contract.
//!
//! Every family produces a [`ScoreMatrix`] with one column per class in
//! [`Label`] order; [`predict`] is the argmax of those scores with ties going
//! to the earlier class, so the two never disagree.

pub mod forest;
pub mod knn;
pub mod logreg;
pub mod mlp;
pub mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{argmax_label, Label};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub use forest::ForestParams;
pub use knn::KnnParams;
pub use logreg::LogRegParams;
pub use mlp::{mlp_gradient, MlpGradients, MlpParams};
pub use svm::{rbf_kernel, solve_binary_svm, Gamma, SvmParams, SvmSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Logreg,
    SvmRbf,
    RandomForest,
    Knn,
    Mlp,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Logreg,
        Family::SvmRbf,
        Family::RandomForest,
        Family::Knn,
        Family::Mlp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Logreg => "logreg",
            Family::SvmRbf => "svm_rbf",
            Family::RandomForest => "random_forest",
            Family::Knn => "knn",
            Family::Mlp => "mlp",
        }
    }

    /// Row label used in result tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Family::Logreg => "Logistic Reg.",
            Family::SvmRbf => "SVM",
            Family::RandomForest => "Random Forest",
            Family::Knn => "KNN",
            Family::Mlp => "MLP",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Family::Logreg => "LogReg",
            Family::SvmRbf => "SVM",
            Family::RandomForest => "RF",
            Family::Knn => "KNN",
            Family::Mlp => "MLP",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "logreg" | "logistic" | "logistic_regression" | "lr" => Ok(Family::Logreg),
            "svm" | "svm_rbf" | "svc" => Ok(Family::SvmRbf),
            "rf" | "forest" | "random_forest" => Ok(Family::RandomForest),
            "knn" => Ok(Family::Knn),
            "mlp" => Ok(Family::Mlp),
            _ => Err(Error::invalid(format!(
                "unknown classifier {s:?}; expected logreg, svm, random_forest, knn or mlp"
            ))),
        }
    }
}

/// Family-specific hyperparameters. [`Hyperparams::default_for`] gives the
/// benchmark configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Hyperparams {
    Logreg {
        c: f64,
        max_iter: usize,
        grad_tol: f64,
    },
    SvmRbf {
        c: f64,
        gamma: Gamma,
        tol: f64,
        max_iter: usize,
    },
    RandomForest {
        n_trees: usize,
        min_samples_split: usize,
    },
    Knn {
        k: usize,
    },
    Mlp {
        hidden: Vec<usize>,
        early_stopping: bool,
        learning_rate: f64,
        batch_size: usize,
        max_epochs: usize,
        validation_fraction: f64,
        patience: usize,
    },
}

impl Hyperparams {
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Logreg => Hyperparams::Logreg {
                c: 1.0,
                max_iter: 1000,
                grad_tol: 1e-5,
            },
            Family::SvmRbf => Hyperparams::SvmRbf {
                c: 1.0,
                gamma: Gamma::Scale,
                tol: 1e-3,
                max_iter: 1_000_000,
            },
            Family::RandomForest => Hyperparams::RandomForest {
                n_trees: 200,
                min_samples_split: 2,
            },
            Family::Knn => Hyperparams::Knn { k: 7 },
            Family::Mlp => Hyperparams::Mlp {
                hidden: vec![256, 128],
                early_stopping: true,
                learning_rate: 1e-3,
                batch_size: 32,
                max_epochs: 200,
                validation_fraction: 0.1,
                patience: 10,
            },
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Hyperparams::Logreg { .. } => Family::Logreg,
            Hyperparams::SvmRbf { .. } => Family::SvmRbf,
            Hyperparams::RandomForest { .. } => Family::RandomForest,
            Hyperparams::Knn { .. } => Family::Knn,
            Hyperparams::Mlp { .. } => Family::Mlp,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::invalid(format!("invalid hyperparameter: {what}")));
        match self {
            Hyperparams::Logreg { c, grad_tol, .. } if !(*c > 0.0) || !(*grad_tol > 0.0) => {
                bad("logreg C and grad_tol must be positive")
            }
            Hyperparams::SvmRbf { c, tol, gamma, .. } => {
                if !(*c > 0.0) || !(*tol > 0.0) {
                    return bad("svm C and tol must be positive");
                }
                if let Gamma::Value(g) = gamma {
                    if !(*g > 0.0) {
                        return bad("svm gamma must be positive");
                    }
                }
                Ok(())
            }
            Hyperparams::RandomForest { n_trees, min_samples_split }
                if *n_trees == 0 || *min_samples_split < 2 =>
            {
                bad("forest needs at least one tree and min_samples_split >= 2")
            }
            Hyperparams::Knn { k } if *k == 0 => bad("knn k must be at least 1"),
            Hyperparams::Mlp {
                hidden,
                learning_rate,
                batch_size,
                max_epochs,
                validation_fraction,
                ..
            } if hidden.iter().any(|&h| h == 0)
                || !(*learning_rate > 0.0)
                || *batch_size == 0
                || *max_epochs == 0
                || !(0.0..1.0).contains(validation_fraction) =>
            {
                bad("mlp layer sizes, learning rate, batch size and epochs must be positive")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub params: Hyperparams,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(family: Family, seed: u64) -> Self {
        ClassifierSpec {
            params: Hyperparams::default_for(family),
            seed,
        }
    }

    pub fn family(&self) -> Family {
        self.params.family()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelParams {
    Logreg(LogRegParams),
    SvmRbf(SvmParams),
    RandomForest(ForestParams),
    Knn(KnnParams),
    Mlp(MlpParams),
}

/// A fitted classifier. Feature-pipeline state is kept alongside it in the
/// model file (see [`crate::routing::ModelFile`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ClassifierSpec,
    pub classes: Vec<Label>,
    pub n_features: usize,
    pub params: ModelParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Probability,
    Margin,
    VoteFraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub kind: ScoreKind,
    pub rows: Vec<[f64; 3]>,
}

impl ScoreMatrix {
    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|r| argmax_label(r)).collect()
    }
}

fn validate_training(x: &FeatureMatrix, y: &[Label]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            actual: y.len(),
        });
    }
    if y.len() < 2 {
        return Err(Error::invalid("training needs at least 2 rows"));
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(Error::invalid(format!(
            "training labels contain a single class ({})",
            y[0]
        )));
    }
    if x.n_cols() == 0 {
        return Err(Error::invalid("training matrix has no columns"));
    }
    x.check_finite()
}

pub fn train(spec: &ClassifierSpec, x: &FeatureMatrix, y: &[Label]) -> Result<TrainedModel> {
    spec.params.validate()?;
    validate_training(x, y)?;
    let params = match &spec.params {
        Hyperparams::Logreg { c, max_iter, grad_tol } => {
            ModelParams::Logreg(logreg::fit(x, y, *c, *max_iter, *grad_tol).0)
        }
        Hyperparams::SvmRbf { c, gamma, tol, max_iter } => {
            ModelParams::SvmRbf(svm::fit_one_vs_rest(x, y, *c, *gamma, *tol, *max_iter).0)
        }
        Hyperparams::RandomForest { n_trees, min_samples_split } => {
            ModelParams::RandomForest(forest::fit(x, y, *n_trees, *min_samples_split, spec.seed))
        }
        Hyperparams::Knn { k } => ModelParams::Knn(knn::fit(x, y, *k)),
        Hyperparams::Mlp { .. } => ModelParams::Mlp(mlp::fit(x, y, &spec.params, spec.seed)?.0),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        classes: Label::ALL.to_vec(),
        n_features: x.n_cols(),
        params,
    })
}

pub fn predict_scores(model: &TrainedModel, x: &FeatureMatrix) -> Result<ScoreMatrix> {
    if x.n_cols() != model.n_features {
        return Err(Error::DimensionMismatch {
            expected: model.n_features,
            actual: x.n_cols(),
        });
    }
    let (kind, rows) = match &model.params {
        ModelParams::Logreg(p) => (ScoreKind::Probability, p.scores(x)),
        ModelParams::SvmRbf(p) => (ScoreKind::Margin, p.scores(x)),
        ModelParams::RandomForest(p) => (ScoreKind::VoteFraction, p.scores(x)),
        ModelParams::Knn(p) => (ScoreKind::VoteFraction, p.scores(x)),
        ModelParams::Mlp(p) => (ScoreKind::Probability, p.scores(x)),
    };
    Ok(ScoreMatrix { kind, rows })
}

pub fn predict(model: &TrainedModel, x: &FeatureMatrix) -> Result<Vec<Label>> {
    Ok(predict_scores(model, x)?.labels())
}

/// Numerically stable softmax over three logits.
pub(crate) fn softmax3(z: [f64; 3]) -> [f64; 3] {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e = z.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}
