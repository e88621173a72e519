//! Random forest of Gini-split decision trees.
//!
//! Each tree sees a bootstrap sample (n draws with replacement) and grows
//! without a depth limit. At every node `floor(sqrt(d))` randomly chosen
//! features are examined; if none of them separates the node's samples the
//! search continues through the remaining features in the same random order.
//! The forest predicts by majority vote and scores by vote fraction.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{argmax_label, Label};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        counts: [u32; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Leaf class counts reached by a dense input row.
    pub fn leaf(&self, row: &crate::features::Row<'_>) -> [u32; 3] {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return *counts,
                Node::Split { feature, threshold, left, right } => {
                    at = if row.get(*feature as usize) <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn predict_row(&self, row: &crate::features::Row<'_>) -> Label {
        let counts = self.leaf(row);
        argmax_label(&counts.map(f64::from))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: Vec<Tree>,
}

impl ForestParams {
    pub(crate) fn scores(&self, x: &FeatureMatrix) -> Vec<[f64; 3]> {
        let n_trees = self.trees.len() as f64;
        x.rows()
            .map(|row| {
                let mut votes = [0.0; 3];
                for t in &self.trees {
                    votes[t.predict_row(&row).index()] += 1.0;
                }
                votes.map(|v| v / n_trees)
            })
            .collect()
    }
}

fn gini(counts: &[usize; 3], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Builder<'a> {
    x: &'a [f64],
    d: usize,
    y: &'a [u8],
    mtry: usize,
    min_split: usize,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn value(&self, sample: usize, feature: usize) -> f64 {
        self.x[sample * self.d + feature]
    }

    fn best_split_on(&self, samples: &[usize], feature: usize) -> Option<BestSplit> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &s in samples {
            let v = self.value(s, feature);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo >= hi {
            return None;
        }
        let mut pairs: Vec<(f64, u8)> = samples.iter().map(|&s| (self.value(s, feature), self.y[s])).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = pairs.len();
        let mut total = [0usize; 3];
        for &(_, l) in &pairs {
            total[l as usize] += 1;
        }
        let mut left = [0usize; 3];
        let mut best: Option<BestSplit> = None;
        for p in 0..n - 1 {
            left[pairs[p].1 as usize] += 1;
            if pairs[p].0 == pairs[p + 1].0 {
                continue;
            }
            let nl = p + 1;
            let right = [total[0] - left[0], total[1] - left[1], total[2] - left[2]];
            let impurity = nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl);
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let (a, b) = (pairs[p].0, pairs[p + 1].0);
                let mut threshold = a + (b - a) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                best = Some(BestSplit { feature, threshold, impurity });
            }
        }
        best
    }

    fn build(&self, samples: Vec<usize>, rng: &mut ChaCha8Rng) -> Tree {
        let mut nodes = Vec::new();
        let mut stack = vec![(samples, None::<(usize, bool)>)];
        let mut features: Vec<usize> = (0..self.d).collect();
        while let Some((samples, parent)) = stack.pop() {
            let mut counts = [0usize; 3];
            for &s in &samples {
                counts[self.y[s] as usize] += 1;
            }
            let id = nodes.len();
            if let Some((p, is_left)) = parent {
                if let Node::Split { left, right, .. } = &mut nodes[p] {
                    if is_left {
                        *left = id as u32;
                    } else {
                        *right = id as u32;
                    }
                }
            }
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let split = if pure || samples.len() < self.min_split {
                None
            } else {
                features.shuffle(rng);
                let mut best: Option<BestSplit> = None;
                for (examined, &f) in features.iter().enumerate() {
                    if examined >= self.mtry && best.is_some() {
                        break;
                    }
                    if let Some(s) = self.best_split_on(&samples, f) {
                        if best.as_ref().is_none_or(|b| s.impurity < b.impurity) {
                            best = Some(s);
                        }
                    }
                }
                best
            };
            match split {
                None => nodes.push(Node::Leaf {
                    counts: counts.map(|c| c as u32),
                }),
                Some(s) => {
                    nodes.push(Node::Split {
                        feature: s.feature as u32,
                        threshold: s.threshold,
                        left: 0,
                        right: 0,
                    });
                    let (l, r): (Vec<usize>, Vec<usize>) = samples
                        .iter()
                        .partition(|&&t| self.value(t, s.feature) <= s.threshold);
                    stack.push((r, Some((id, false))));
                    stack.push((l, Some((id, true))));
                }
            }
        }
        Tree { nodes }
    }
}

pub fn fit(x: &FeatureMatrix, y: &[Label], n_trees: usize, min_split: usize, seed: u64) -> ForestParams {
    let dense = x.to_dense_values();
    let labels: Vec<u8> = y.iter().map(|l| l.index() as u8).collect();
    let d = x.n_cols();
    let builder = Builder {
        x: &dense,
        d,
        y: &labels,
        mtry: ((d as f64).sqrt().floor() as usize).max(1),
        min_split,
    };
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let tree_seeds: Vec<u64> = (0..n_trees).map(|_| master.next_u64()).collect();
    let n = x.n_rows();
    let trees = tree_seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            builder.build(sample, &mut rng)
        })
        .collect();
    ForestParams { trees }
}

/// Builds a single tree on exactly the given sample indices (no bootstrap).
pub fn fit_tree(x: &FeatureMatrix, y: &[Label], samples: Vec<usize>, seed: u64) -> Tree {
    let dense = x.to_dense_values();
    let labels: Vec<u8> = y.iter().map(|l| l.index() as u8).collect();
    let d = x.n_cols();
    let builder = Builder {
        x: &dense,
        d,
        y: &labels,
        mtry: ((d as f64).sqrt().floor() as usize).max(1),
        min_split: 2,
    };
    builder.build(samples, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureKind;

    fn grid() -> (FeatureMatrix, Vec<Label>) {
        // 3 well separated blobs on a 4-D grid, all points distinct
        let mut vals = Vec::new();
        let mut y = Vec::new();
        for i in 0..30 {
            let class = i % 3;
            let base = class as f64 * 10.0;
            vals.extend_from_slice(&[base + i as f64 * 0.1, (i * 7 % 11) as f64, base, (i % 4) as f64]);
            y.push(Label::ALL[class]);
        }
        let ids = (0..30).map(|i| i.to_string()).collect();
        (FeatureMatrix::dense(ids, 4, vals, FeatureKind::Structural).unwrap(), y)
    }

    #[test]
    fn tree_fits_its_sample_exactly() {
        let (x, mut y) = grid();
        // make labels not trivially separable by one feature
        y.swap(0, 1);
        let tree = fit_tree(&x, &y, (0..30).collect(), 3);
        for i in 0..30 {
            assert_eq!(tree.predict_row(&x.row(i)), y[i]);
        }
    }

    #[test]
    fn forest_memorizes_separable_points() {
        let (x, y) = grid();
        let p = fit(&x, &y, 25, 2, 1);
        let scores = p.scores(&x);
        for (s, l) in scores.iter().zip(&y) {
            assert_eq!(argmax_label(s), *l);
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let (x, y) = grid();
        assert_eq!(fit(&x, &y, 10, 2, 9), fit(&x, &y, 10, 2, 9));
    }
}
