//! Independent reference implementations used as test oracles. None of these
//! call into the code under test except for plain data accessors.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use qroute_core::corpus::{Dataset, FoldAssignment, Label, QueryRecord};

/// Brute-force TF-IDF: returns the retained terms (lexicographic) and a dense
/// row per document.
pub fn tfidf_bruteforce(docs: &[&str], cap: usize) -> (Vec<String>, Vec<Vec<f64>>) {
    let doc_terms: Vec<Vec<String>> = docs
        .iter()
        .map(|d| {
            let mut toks = Vec::new();
            let mut cur = String::new();
            for ch in d.chars().chain(std::iter::once(' ')) {
                if ch.is_alphanumeric() {
                    cur.push(ch);
                } else {
                    if cur.chars().count() >= 2 {
                        toks.push(cur.to_lowercase());
                    }
                    cur.clear();
                }
            }
            let mut terms = toks.clone();
            for w in toks.windows(2) {
                terms.push(format!("{} {}", w[0], w[1]));
            }
            terms
        })
        .collect();
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for terms in &doc_terms {
        let uniq: BTreeSet<&String> = terms.iter().collect();
        for t in uniq {
            *df.entry(t.clone()).or_default() += 1;
        }
    }
    let mut kept: Vec<(String, usize)> = df.into_iter().filter(|(_, d)| *d >= 2).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    kept.truncate(cap);
    kept.sort_by(|a, b| a.0.cmp(&b.0));
    let n = docs.len() as f64;
    let rows = doc_terms
        .iter()
        .map(|terms| {
            let mut tf_of: BTreeMap<&String, usize> = BTreeMap::new();
            for t in terms {
                *tf_of.entry(t).or_default() += 1;
            }
            let mut row: Vec<f64> = kept
                .iter()
                .map(|(t, d)| {
                    let tf = tf_of.get(t).copied().unwrap_or(0) as f64;
                    if tf == 0.0 {
                        0.0
                    } else {
                        (1.0 + tf.ln()) * (((1.0 + n) / (1.0 + *d as f64)).ln() + 1.0)
                    }
                })
                .collect();
            let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
            row
        })
        .collect();
    (kept.into_iter().map(|(t, _)| t).collect(), rows)
}

/// SVM dual `min 0.5 a'Qa - 1'a` over `0 <= a <= c`, `y'a = 0`, by
/// accelerated projected gradient. Returns the optimal objective.
pub fn svm_dual_projected_gradient(k: &[Vec<f64>], y: &[f64], c: f64) -> f64 {
    let n = y.len();
    let q: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| y[i] * y[j] * k[i][j]).collect()).collect();
    let lip: f64 = q.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let step = 1.0 / lip;
    let grad = |a: &[f64]| -> Vec<f64> {
        (0..n).map(|i| (0..n).map(|j| q[i][j] * a[j]).sum::<f64>() - 1.0).collect()
    };
    let obj = |a: &[f64]| -> f64 {
        let quad: f64 = (0..n).map(|i| (0..n).map(|j| a[i] * q[i][j] * a[j]).sum::<f64>()).sum();
        0.5 * quad - a.iter().sum::<f64>()
    };
    let project = |v: &[f64]| -> Vec<f64> {
        // find lambda with sum y_i clip(v_i - lambda y_i) = 0 by bisection
        let at = |lam: f64| -> (Vec<f64>, f64) {
            let a: Vec<f64> = (0..n).map(|i| (v[i] - lam * y[i]).clamp(0.0, c)).collect();
            let s = (0..n).map(|i| a[i] * y[i]).sum();
            (a, s)
        };
        let (mut lo, mut hi) = (-1e6, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid).1 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(0.5 * (lo + hi)).0
    };
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    let mut best = obj(&a);
    for _ in 0..200_000 {
        let g = grad(&z);
        let v: Vec<f64> = (0..n).map(|i| z[i] - step * g[i]).collect();
        let a_next = project(&v);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let beta = (t - 1.0) / t_next;
        z = (0..n).map(|i| a_next[i] + beta * (a_next[i] - a[i])).collect();
        let change: f64 = (0..n).map(|i| (a_next[i] - a[i]).abs()).sum();
        a = a_next;
        t = t_next;
        best = best.min(obj(&a));
        if change < 1e-14 {
            break;
        }
    }
    best
}

/// All-pairs cosine KNN with the same tie rules: distance ascending, then
/// lower training index; votes tie toward the earlier class.
pub fn knn_bruteforce(train: &[Vec<f64>], labels: &[Label], query: &[f64], k: usize) -> Label {
    let norm = |v: &[f64]| -> f64 {
        let mut s = 0.0;
        for x in v {
            s += x * x;
        }
        s.sqrt()
    };
    let qn = norm(query);
    let mut d: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let tn = norm(t);
            if qn == 0.0 || tn == 0.0 {
                return (f64::INFINITY, i);
            }
            let mut dot = 0.0;
            for (a, b) in query.iter().zip(t) {
                dot += a * b;
            }
            (1.0 - dot / (qn * tn), i)
        })
        .collect();
    // stable sort by distance keeps lower indices first among equals
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut votes = [0usize; 3];
    for &(_, i) in d.iter().take(k) {
        votes[labels[i].index()] += 1;
    }
    let mut best = 0;
    for c in 1..3 {
        if votes[c] > votes[best] {
            best = c;
        }
    }
    Label::ALL[best]
}

/// Checks the per-fold per-label +-1 invariant and the partition property.
pub fn check_stratification(ds: &Dataset, folds: &FoldAssignment) -> Result<(), String> {
    let k = folds.k();
    if folds.fold_of().len() != ds.len() {
        return Err("fold_of length differs from dataset size".into());
    }
    let mut counts = vec![[0usize; 3]; k];
    for (r, &f) in ds.records().iter().zip(folds.fold_of()) {
        if f >= k {
            return Err(format!("fold index {f} out of range"));
        }
        counts[f][r.label.index()] += 1;
    }
    let totals = ds.label_counts();
    for (f, c) in counts.iter().enumerate() {
        for l in 0..3 {
            let ideal = totals[l] as f64 / k as f64;
            if (c[l] as f64 - ideal).abs() > 1.0 {
                return Err(format!("fold {f} label {l}: {} vs ideal {ideal}", c[l]));
            }
        }
    }
    // the folds' test sets partition the records
    let mut seen = vec![0usize; ds.len()];
    for f in 0..k {
        let (train, test) = folds.split(f);
        if train.len() + test.len() != ds.len() {
            return Err(format!("fold {f} train/test sizes do not add up"));
        }
        if test.iter().any(|t| train.binary_search(t).is_ok()) {
            return Err(format!("fold {f} train and test overlap"));
        }
        test.iter().for_each(|&t| seen[t] += 1);
    }
    if seen.iter().any(|&s| s != 1) {
        return Err("some record is held out zero or several times".into());
    }
    Ok(())
}

/// A dataset with the given label sequence and trivial texts.
pub fn dataset_from_labels(labels: &[Label]) -> Dataset {
    let records = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| QueryRecord {
            id: format!("r{i}"),
            text: format!("query number {i}"),
            domain: "wiki".into(),
            label,
        })
        .collect();
    Dataset::from_records(records).unwrap()
}

/// 529 / 171 / 300 records, the benchmark's published label mix.
pub fn benchmark_mix_labels() -> Vec<Label> {
    let mut v = vec![Label::SingleHop; 529];
    v.extend(vec![Label::MultiHop; 171]);
    v.extend(vec![Label::Summary; 300]);
    v
}
