mod oracles;

use proptest::prelude::*;
use qroute_core::corpus::{label_distribution, Label};
use qroute_core::cost::{CostModel, Paradigm};
use qroute_core::eval::majority_metrics;

fn label() -> impl Strategy<Value = Label> {
    (0usize..3).prop_map(|i| Label::ALL[i])
}

#[test]
fn published_constants() {
    let m = CostModel::default();
    let ds = oracles::dataset_from_labels(&oracles::benchmark_mix_labels());
    let majority = m.simulate(&vec![Label::SingleHop; ds.len()]).unwrap();
    assert!((majority.savings_percent - 60.0).abs() <= 0.05);
    let perfect = m.simulate(&ds.labels()).unwrap();
    assert!((perfect.savings_percent - 35.2).abs() <= 0.05, "{}", perfect.savings_percent);
    assert!((perfect.router_cost / ds.len() as f64 - 2.2694).abs() <= 1e-4);
    let reference = m.reference(&label_distribution(&ds).unwrap()).unwrap();
    assert_eq!(reference, perfect.savings_percent);
    assert_eq!(m.simulate(&vec![Label::Summary; 10]).unwrap().savings_percent, 0.0);
    let (acc, f1) = majority_metrics(&ds).unwrap();
    assert!((acc - 0.529).abs() <= 0.0005);
    assert!((f1 - 0.231).abs() <= 0.0005);
}

#[test]
fn default_route_for_summary() {
    let (p, c) = CostModel::default().route(Label::Summary).unwrap();
    assert_eq!(p, Paradigm::IterativeRag);
    assert_eq!(c, 3.5);
}

proptest! {
    #[test]
    fn savings_lie_between_zero_and_sixty(pred in prop::collection::vec(label(), 1..200)) {
        let s = CostModel::default().simulate(&pred).unwrap().savings_percent;
        prop_assert!((-1e-9..=60.0 + 1e-9).contains(&s));
    }

    #[test]
    fn savings_ignore_order(pred in prop::collection::vec(label(), 1..200), seed in any::<u64>()) {
        let m = CostModel::default();
        let mut shuffled = pred.clone();
        let n = shuffled.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(m.simulate(&pred).unwrap().savings_percent, m.simulate(&shuffled).unwrap().savings_percent);
    }

    #[test]
    fn routing_to_a_costlier_paradigm_never_saves_more(
        pred in prop::collection::vec(label(), 1..200),
        pick in any::<prop::sample::Index>(),
    ) {
        let m = CostModel::default();
        let i = pick.index(pred.len());
        let before = m.simulate(&pred).unwrap().savings_percent;
        let cur = m.route(pred[i]).unwrap().1;
        for l in Label::ALL {
            let mut changed = pred.clone();
            changed[i] = l;
            let after = m.simulate(&changed).unwrap().savings_percent;
            if m.route(l).unwrap().1 >= cur {
                prop_assert!(after <= before + 1e-9);
            } else {
                prop_assert!(after >= before - 1e-9);
            }
        }
    }

    #[test]
    fn simulated_equals_closed_form(pred in prop::collection::vec(label(), 1..300)) {
        let m = CostModel::default();
        let ds = oracles::dataset_from_labels(&pred);
        let dist = label_distribution(&ds).unwrap();
        prop_assert_eq!(m.simulate(&pred).unwrap().savings_percent, m.reference(&dist).unwrap());
    }
}
