//! k-nearest neighbours under cosine distance `1 - cos(a, b)`.
//!
//! Rows with zero norm are infinitely far from everything. Neighbours tied
//! at the k-th distance are resolved by lower training index; vote ties go to
//! the earlier class.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::features::{FeatureMatrix, Row};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
    pub train: FeatureMatrix,
    pub labels: Vec<Label>,
}

pub fn cosine_distance(a: &Row<'_>, a_norm: f64, b: &Row<'_>, b_norm: f64) -> f64 {
    if a_norm == 0.0 || b_norm == 0.0 {
        return f64::INFINITY;
    }
    1.0 - a.dot(b) / (a_norm * b_norm)
}

impl KnnParams {
    /// Indices of the `k` nearest training rows, nearest first.
    pub fn neighbors(&self, row: &Row<'_>, train_norms: &[f64]) -> Vec<usize> {
        let q_norm = row.sq_norm().sqrt();
        let mut dist: Vec<(f64, usize)> = self
            .train
            .rows()
            .zip(train_norms)
            .enumerate()
            .map(|(i, (t, &tn))| (cosine_distance(row, q_norm, &t, tn), i))
            .collect();
        let k = self.k.min(dist.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
            dist.truncate(k);
        }
        dist.sort_by(cmp);
        dist.into_iter().map(|(_, i)| i).collect()
    }

    pub(crate) fn scores(&self, x: &FeatureMatrix) -> Vec<[f64; 3]> {
        let norms: Vec<f64> = self.train.rows().map(|r| r.sq_norm().sqrt()).collect();
        x.rows()
            .map(|row| {
                let nb = self.neighbors(&row, &norms);
                let mut votes = [0.0; 3];
                for &i in &nb {
                    votes[self.labels[i].index()] += 1.0;
                }
                let k = nb.len() as f64;
                votes.map(|v| v / k)
            })
            .collect()
    }
}

pub fn fit(x: &FeatureMatrix, y: &[Label], k: usize) -> KnnParams {
    KnnParams {
        k,
        train: x.clone(),
        labels: y.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::argmax_label;
    use crate::features::FeatureKind;

    fn m(rows: &[[f64; 2]]) -> FeatureMatrix {
        FeatureMatrix::dense(
            (0..rows.len()).map(|i| i.to_string()).collect(),
            2,
            rows.iter().flatten().copied().collect(),
            FeatureKind::Embedding,
        )
        .unwrap()
    }

    #[test]
    fn one_nearest_predicts_itself() {
        let x = m(&[[1.0, 0.0], [0.0, 1.0], [-1.0, -0.2]]);
        let p = fit(&x, &Label::ALL, 1);
        let pred: Vec<Label> = p.scores(&x).iter().map(|s| argmax_label(s)).collect();
        assert_eq!(pred, Label::ALL);
    }

    #[test]
    fn vote_fractions_five_two() {
        // 5 single_hop points near the query direction, 2 summary a bit
        // further, and 3 multi_hop on the far side.
        let train = m(&[
            [1.0, 0.01], [1.0, 0.02], [1.0, -0.01], [1.0, 0.03], [1.0, -0.02],
            [1.0, 0.3], [1.0, -0.3],
            [-1.0, 0.0], [-1.0, 0.5], [0.0, -1.0],
        ]);
        let mut y = vec![Label::SingleHop; 5];
        y.extend([Label::Summary; 2]);
        y.extend([Label::MultiHop; 3]);
        let p = fit(&train, &y, 7);
        let s = p.scores(&m(&[[2.0, 0.0]]))[0];
        assert_eq!(s, [5.0 / 7.0, 0.0, 2.0 / 7.0]);
    }

    #[test]
    fn zero_rows_are_farthest() {
        let train = m(&[[0.0, 0.0], [1.0, 1.0], [-1.0, 1.0]]);
        let p = fit(&train, &[Label::Summary, Label::MultiHop, Label::SingleHop], 2);
        let norms: Vec<f64> = train.rows().map(|r| r.sq_norm().sqrt()).collect();
        let q = m(&[[1.0, 0.0]]);
        assert_eq!(p.neighbors(&q.row(0), &norms), vec![1, 2]);
    }

    #[test]
    fn distance_ties_prefer_lower_index() {
        let train = m(&[[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]);
        let p = fit(&train, &[Label::Summary, Label::SingleHop, Label::MultiHop], 1);
        let s = p.scores(&m(&[[5.0, 0.0]]))[0];
        assert_eq!(s, [0.0, 0.0, 1.0]);
    }
}
