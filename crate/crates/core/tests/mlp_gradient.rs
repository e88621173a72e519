use qroute_core::classifiers::mlp::{mlp_gradient, MlpParams};
use qroute_core::corpus::Label;
use qroute_core::features::{FeatureKind, FeatureMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;

/// Relative error with a floor so exact zeros do not divide by zero.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn max_relative_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = MlpParams::init(&[4, 3, 3], &mut rng);
    for layer in &mut params.layers {
        layer.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
    }
    let values: Vec<f64> = (0..6 * 4).map(|_| rng.random_range(-2.0..2.0)).collect();
    let x = FeatureMatrix::dense((0..6).map(|i| format!("r{i}")).collect(), 4, values, FeatureKind::Structural)
        .unwrap();
    let y: Vec<Label> = (0..6).map(|i| Label::ALL[i % 3]).collect();
    let analytic = mlp_gradient(&params, &x, &y).unwrap();
    let loss_at = |p: &MlpParams| mlp_gradient(p, &x, &y).unwrap().loss;

    let mut worst: f64 = 0.0;
    for l in 0..params.layers.len() {
        for w in 0..params.layers[l].weights.len() {
            let mut plus = params.clone();
            plus.layers[l].weights[w] += STEP;
            let mut minus = params.clone();
            minus.layers[l].weights[w] -= STEP;
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * STEP);
            worst = worst.max(rel_err(analytic.layers[l].weights[w], fd));
        }
        for b in 0..params.layers[l].bias.len() {
            let mut plus = params.clone();
            plus.layers[l].bias[b] += STEP;
            let mut minus = params.clone();
            minus.layers[l].bias[b] -= STEP;
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * STEP);
            worst = worst.max(rel_err(analytic.layers[l].bias[b], fd));
        }
    }
    worst
}

#[test]
fn analytic_gradient_matches_central_differences() {
    for seed in 0..5 {
        let e = max_relative_error(seed);
        assert!(e <= 1e-4, "seed {seed}: max relative error {e}");
    }
}
