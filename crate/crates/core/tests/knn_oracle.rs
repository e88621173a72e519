mod oracles;

use qroute_core::classifiers::{predict, predict_scores, train, ClassifierSpec, Family, Hyperparams};
use qroute_core::corpus::Label;
use qroute_core::features::{FeatureKind, FeatureMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
    let d = rows[0].len();
    FeatureMatrix::dense(
        (0..rows.len()).map(|i| format!("r{i}")).collect(),
        d,
        rows.concat(),
        FeatureKind::Embedding,
    )
    .unwrap()
}

fn spec(k: usize) -> ClassifierSpec {
    let mut s = ClassifierSpec::new(Family::Knn, 0);
    s.params = Hyperparams::Knn { k };
    s
}

#[test]
fn matches_all_pairs_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // small integer coordinates make exact distance ties common
    let point = |rng: &mut ChaCha8Rng| (0..3).map(|_| rng.random_range(-2..=2) as f64).collect::<Vec<f64>>();
    let train_x: Vec<Vec<f64>> = (0..50).map(|_| point(&mut rng)).collect();
    let labels: Vec<Label> = (0..50).map(|_| Label::ALL[rng.random_range(0..3)]).collect();
    let queries: Vec<Vec<f64>> = (0..50).map(|_| point(&mut rng)).collect();
    for k in [1, 4, 7] {
        let model = train(&spec(k), &matrix(&train_x), &labels).unwrap();
        let got = predict(&model, &matrix(&queries)).unwrap();
        for (q, g) in queries.iter().zip(&got) {
            assert_eq!(*g, oracles::knn_bruteforce(&train_x, &labels, q, k), "k={k} query {q:?}");
        }
    }
}

#[test]
fn vote_fractions_five_two() {
    // seven training points along the query direction, two more far away
    let mut train_x: Vec<Vec<f64>> = (0..7).map(|i| vec![1.0, 0.01 * i as f64]).collect();
    train_x.push(vec![-1.0, 0.0]);
    train_x.push(vec![0.0, -1.0]);
    let mut labels = vec![Label::SingleHop; 5];
    labels.extend([Label::Summary, Label::Summary, Label::MultiHop, Label::MultiHop]);
    let model = train(&spec(7), &matrix(&train_x), &labels).unwrap();
    let s = predict_scores(&model, &matrix(&[vec![1.0, 0.0]])).unwrap();
    assert_eq!(s.rows[0], [5.0 / 7.0, 0.0, 2.0 / 7.0]);
}

#[test]
fn cosine_distance_ignores_positive_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let train_x: Vec<Vec<f64>> = (0..40).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let labels: Vec<Label> = (0..40).map(|i| Label::ALL[i % 3]).collect();
    let queries: Vec<Vec<f64>> = (0..30).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let model = train(&spec(7), &matrix(&train_x), &labels).unwrap();
    let base = predict(&model, &matrix(&queries)).unwrap();
    // powers of two scale exactly, so the distances are bit-identical
    for s in [0.25, 2.0, 1024.0] {
        let scaled: Vec<Vec<f64>> = queries.iter().map(|q| q.iter().map(|v| v * s).collect()).collect();
        assert_eq!(predict(&model, &matrix(&scaled)).unwrap(), base);
    }
}
