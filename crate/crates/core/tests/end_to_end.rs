use proptest::prelude::*;
use qroute_core::classifiers::{predict, predict_scores, train, ClassifierSpec, Family};
use qroute_core::corpus::{argmax_label, generate_synthetic, load_dataset, parse_dataset, Label, SynthConfig};
use qroute_core::eval::cross_validate;
use qroute_core::features::{FeatureKind, FeatureMatrix};
use qroute_core::pipeline::{fit_pipeline, EmbeddingInput, RegimeInput};

fn small() -> qroute_core::Dataset {
    generate_synthetic(&SynthConfig::new([30, 30, 30], 8).with_noise(0.05)).unwrap()
}

#[test]
fn reports_are_byte_identical_for_every_family() {
    let ds = small();
    let inputs = [
        RegimeInput::Tfidf,
        RegimeInput::Structural,
        RegimeInput::Embedding(EmbeddingInput::Fallback { dim: 32, seed: 3 }),
    ];
    for family in Family::ALL {
        for input in &inputs {
            let spec = ClassifierSpec::new(family, 21);
            let a = cross_validate(&ds, input, &spec, 3, 21).unwrap();
            let b = cross_validate(&ds, input, &spec, 3, 21).unwrap();
            assert_eq!(a.to_json(), b.to_json(), "{family} on {}", input.regime());
            assert_eq!(a.per_query_csv(), b.per_query_csv());
            for p in &a.predictions {
                assert_eq!(p.predicted, argmax_label(&p.scores));
            }
        }
    }
}

#[test]
fn separable_corpus_scores_high() {
    let ds = generate_synthetic(&SynthConfig::new([300, 300, 300], 1).with_noise(0.0)).unwrap();
    let rep = cross_validate(&ds, &RegimeInput::Tfidf, &ClassifierSpec::new(Family::SvmRbf, 1), 5, 1).unwrap();
    assert!(rep.macro_f1 >= 0.95, "macro-F1 {}", rep.macro_f1);
}

#[test]
fn dataset_round_trips_through_jsonl() {
    let ds = small();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    ds.save(&path).unwrap();
    let back = load_dataset(&path).unwrap();
    assert_eq!(back.records(), ds.records());
    assert_eq!(parse_dataset(&ds.to_jsonl()).unwrap().records(), ds.records());
}

#[test]
fn malformed_dataset_lines_are_rejected() {
    assert!(parse_dataset("{\"id\":\"a\",\"query\":\"q\",\"domain\":\"wiki\",\"label\":\"other\"}\n").is_err());
    assert!(parse_dataset("not json\n").is_err());
}

fn scores_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 4 * 30)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prediction_is_argmax_of_scores(values in scores_strategy(), fam in 0usize..5) {
        let family = Family::ALL[fam];
        let x = FeatureMatrix::dense((0..30).map(|i| format!("r{i}")).collect(), 4, values, FeatureKind::Structural).unwrap();
        let y: Vec<Label> = (0..30).map(|i| Label::ALL[i % 3]).collect();
        let mut spec = ClassifierSpec::new(family, 5);
        if let qroute_core::classifiers::Hyperparams::Mlp { hidden, max_epochs, .. } = &mut spec.params {
            *hidden = vec![8];
            *max_epochs = 20;
        }
        let model = train(&spec, &x, &y).unwrap();
        let scores = predict_scores(&model, &x).unwrap();
        let labels = predict(&model, &x).unwrap();
        for (row, l) in scores.rows.iter().zip(labels) {
            prop_assert_eq!(argmax_label(row), l);
        }
    }
}

#[test]
fn fitted_pipeline_reproduces_training_features() {
    let ds = small();
    for input in [RegimeInput::Tfidf, RegimeInput::Structural] {
        let (p, x) = fit_pipeline(&input, &ds).unwrap();
        let again = p.transform_dataset(&input, &ds).unwrap();
        assert_eq!(x, again);
    }
}
