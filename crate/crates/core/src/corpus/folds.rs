use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, Label};
use crate::error::{Error, Result};

/// Fold index for every record of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    k: usize,
    fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    /// `(train, test)` record indices for one fold, each in dataset order.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.fold_of.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

/// Label-stratified k-fold assignment.
///
/// Each label's record indices are shuffled and dealt round-robin into the
/// folds, so every fold holds `floor` or `ceil` of `count(label) / k` records
/// of that label. The dealing for each label starts where the previous label
/// stopped, which also keeps total fold sizes within one of each other.
pub fn stratified_kfold(ds: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::invalid(format!("fold count must be at least 2, got {k}")));
    }
    let counts = ds.label_counts();
    for label in Label::ALL {
        let c = counts[label.index()];
        if c < k {
            return Err(Error::invalid(format!(
                "label {label} has {c} records, fewer than the {k} folds requested"
            )));
        }
    }

    let mut by_label: [Vec<usize>; 3] = Default::default();
    for (i, r) in ds.records().iter().enumerate() {
        by_label[r.label.index()].push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![usize::MAX; ds.len()];
    let mut next = 0usize;
    for members in by_label.iter_mut() {
        members.shuffle(&mut rng);
        for &idx in members.iter() {
            fold_of[idx] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::QueryRecord;

    fn dataset(counts: [usize; 3]) -> Dataset {
        let mut records = Vec::new();
        for label in Label::ALL {
            for j in 0..counts[label.index()] {
                records.push(QueryRecord {
                    id: format!("{label}-{j}"),
                    text: format!("query {j}"),
                    domain: "wiki".into(),
                    label,
                });
            }
        }
        Dataset::from_records(records).unwrap()
    }

    #[test]
    fn ten_records_two_folds_split_evenly() {
        let ds = dataset([6, 2, 2]);
        let folds = stratified_kfold(&ds, 2, 11).unwrap();
        for f in 0..2 {
            let mut per_label = [0; 3];
            for (i, r) in ds.records().iter().enumerate() {
                if folds.fold_of()[i] == f {
                    per_label[r.label.index()] += 1;
                }
            }
            assert_eq!(per_label, [3, 1, 1]);
        }
    }

    #[test]
    fn rejects_bad_k_and_small_labels() {
        let ds = dataset([6, 2, 2]);
        assert!(stratified_kfold(&ds, 1, 0).is_err());
        assert!(stratified_kfold(&ds, 3, 0).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let ds = dataset([20, 9, 13]);
        let a = stratified_kfold(&ds, 5, 42).unwrap();
        let b = stratified_kfold(&ds, 5, 42).unwrap();
        assert_eq!(a, b);
        let c = stratified_kfold(&ds, 5, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_partitions_indices() {
        let ds = dataset([10, 10, 10]);
        let folds = stratified_kfold(&ds, 3, 5).unwrap();
        let mut seen = vec![0; ds.len()];
        for f in 0..3 {
            let (train, test) = folds.split(f);
            assert_eq!(train.len() + test.len(), ds.len());
            for i in test {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }
}
