//! The on-disk model file and query routing shared by the CLI and the HTTP
//! service.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifiers::{predict_scores, train, ClassifierSpec, ScoreKind, TrainedModel};
use crate::corpus::{argmax_label, Dataset, Label};
use crate::cost::{CostModel, Paradigm};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::pipeline::{fit_pipeline, FeaturePipeline, RegimeInput};

pub const MODEL_FORMAT: u32 = 1;

/// Everything needed to featurize and classify a raw query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub model_format: u32,
    pub pipeline: FeaturePipeline,
    pub classifier: TrainedModel,
}

impl ModelFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: ModelFile = serde_json::from_str(s).map_err(|e| Error::Model(format!("bad model file: {e}")))?;
        if m.model_format != MODEL_FORMAT {
            return Err(Error::Model(format!(
                "unsupported model_format {} (expected {MODEL_FORMAT})",
                m.model_format
            )));
        }
        if m.pipeline.n_features() != m.classifier.n_features {
            return Err(Error::Model(format!(
                "pipeline produces {} features but the classifier expects {}",
                m.pipeline.n_features(),
                m.classifier.n_features
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// A model file loaded from disk, with the hash of its bytes.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: ModelFile,
    pub model_id: String,
}

pub fn model_id(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LoadedModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::Model("model file is not UTF-8".into()))?;
    Ok(LoadedModel {
        model: ModelFile::from_json(text)?,
        model_id: model_id(&bytes),
    })
}

/// Fit the pipeline and classifier on every record of `ds`.
pub fn train_full(ds: &Dataset, input: &RegimeInput, spec: &ClassifierSpec) -> Result<ModelFile> {
    let (pipeline, x) = fit_pipeline(input, ds)?;
    let classifier = train(spec, &x, &ds.labels())?;
    Ok(ModelFile {
        model_format: MODEL_FORMAT,
        pipeline,
        classifier,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub kind: ScoreKind,
    pub single_hop: f64,
    pub multi_hop: f64,
    pub summary: f64,
}

impl Scores {
    pub fn values(&self) -> [f64; 3] {
        [self.single_hop, self.multi_hop, self.summary]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteResponse {
    pub label: Label,
    pub paradigm: Paradigm,
    pub cost_ratio: f64,
    pub scores: Scores,
    pub model_id: String,
}

/// What to route: raw text, or a raw embedding vector for models trained on
/// precomputed embeddings.
#[derive(Debug, Clone, PartialEq)]
pub enum RouteInput {
    Text(String),
    Vector(Vec<f64>),
}

/// Route a batch; output order follows input order.
pub fn route(loaded: &LoadedModel, cost: &CostModel, inputs: &[RouteInput]) -> Result<Vec<RouteResponse>> {
    if inputs.is_empty() {
        return Ok(Vec::new());
    }
    let x = featurize(&loaded.model.pipeline, inputs)?;
    let scores = predict_scores(&loaded.model.classifier, &x)?;
    scores
        .rows
        .iter()
        .map(|s| {
            let label = argmax_label(s);
            let (paradigm, cost_ratio) = cost.route(label)?;
            Ok(RouteResponse {
                label,
                paradigm,
                cost_ratio,
                scores: Scores {
                    kind: scores.kind,
                    single_hop: s[0],
                    multi_hop: s[1],
                    summary: s[2],
                },
                model_id: loaded.model_id.clone(),
            })
        })
        .collect()
}

fn featurize(pipeline: &FeaturePipeline, inputs: &[RouteInput]) -> Result<FeatureMatrix> {
    let ids: Vec<String> = (0..inputs.len()).map(|i| format!("q{i}")).collect();
    if inputs.iter().all(|i| matches!(i, RouteInput::Text(_))) {
        let texts: Vec<&str> = inputs
            .iter()
            .map(|i| match i {
                RouteInput::Text(t) => t.trim(),
                RouteInput::Vector(_) => unreachable!(),
            })
            .collect();
        if texts.iter().any(|t| t.is_empty()) {
            return Err(Error::invalid("query text is empty"));
        }
        pipeline.transform_texts(ids, &texts)
    } else {
        let vectors: Vec<Vec<f64>> = inputs
            .iter()
            .map(|i| match i {
                RouteInput::Vector(v) => Ok(v.clone()),
                RouteInput::Text(_) => Err(Error::invalid("cannot mix text and vector inputs in one batch")),
            })
            .collect::<Result<_>>()?;
        pipeline.transform_vectors(ids, &vectors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::Family;
    use crate::corpus::{generate_synthetic, SynthConfig};

    #[test]
    fn save_load_roundtrip_predicts_identically() {
        let ds = generate_synthetic(&SynthConfig::new([20, 20, 20], 2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        for family in Family::ALL {
            let mut spec = ClassifierSpec::new(family, 5);
            if family == Family::RandomForest {
                spec.params = crate::classifiers::Hyperparams::RandomForest { n_trees: 10, min_samples_split: 2 };
            }
            let m = train_full(&ds, &RegimeInput::Structural, &spec).unwrap();
            m.save(&path).unwrap();
            let loaded = load_model(&path).unwrap();
            assert_eq!(loaded.model, m, "{family}");
            assert_eq!(loaded.model_id, model_id(m.to_json().as_bytes()));
            let inputs: Vec<RouteInput> = ds.texts().iter().map(|t| RouteInput::Text(t.to_string())).collect();
            let a = route(&loaded, &CostModel::default(), &inputs).unwrap();
            let in_memory = LoadedModel { model: m, model_id: loaded.model_id.clone() };
            let b = route(&in_memory, &CostModel::default(), &inputs).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn empty_query_and_bad_format() {
        let ds = generate_synthetic(&SynthConfig::new([10, 10, 10], 2)).unwrap();
        let m = train_full(&ds, &RegimeInput::Tfidf, &ClassifierSpec::new(Family::Logreg, 0)).unwrap();
        let loaded = LoadedModel { model: m.clone(), model_id: "x".into() };
        assert!(route(&loaded, &CostModel::default(), &[RouteInput::Text("  ".into())]).is_err());
        assert!(route(&loaded, &CostModel::default(), &[RouteInput::Vector(vec![1.0])]).is_err());
        let bumped = m.to_json().replace("\"model_format\": 1", "\"model_format\": 2");
        assert!(ModelFile::from_json(&bumped).is_err());
    }
}
