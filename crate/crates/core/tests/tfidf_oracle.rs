mod oracles;

use qroute_core::features::{fit_tfidf, fit_tfidf_with_cap, transform_tfidf, MAX_VOCAB};

const DOCS: [&str; 5] = [
    "What is the capital of France?",
    "Compare the capital cities of France and Spain.",
    "Summarize the history of the capital, the capital city!",
    "Who wrote the history of Spain?",
    "Is Paris the capital of France or Spain",
];

#[test]
fn matches_bruteforce_formulas() {
    let vocab = fit_tfidf(&DOCS).unwrap();
    let ids = (0..DOCS.len()).map(|i| format!("d{i}")).collect();
    let m = transform_tfidf(&vocab, ids, &DOCS).unwrap();
    let (terms, rows) = oracles::tfidf_bruteforce(&DOCS, MAX_VOCAB);
    assert_eq!(vocab.terms(), terms.as_slice());
    for (i, expected) in rows.iter().enumerate() {
        let got = m.row(i).to_dense(m.n_cols());
        for (j, (a, b)) in got.iter().zip(expected).enumerate() {
            assert!((a - b).abs() <= 1e-9, "row {i} col {j} ({}): {a} vs {b}", terms[j]);
        }
    }
}

#[test]
fn hand_corpus_of_three() {
    let docs = ["the cat sat", "the cat ran", "dogs ran"];
    let vocab = fit_tfidf(&docs).unwrap();
    let m = transform_tfidf(&vocab, vec!["a".into(), "b".into(), "c".into()], &docs).unwrap();
    // every kept term has df=2, so equal idf; doc a holds cat, the and
    // "the cat" once each -> 1/sqrt(3)
    let a = m.row(0).to_dense(4);
    let s = 1.0 / 3f64.sqrt();
    for (got, want) in a.iter().zip([s, 0.0, s, s]) {
        assert!((got - want).abs() < 1e-12);
    }
    // doc c: only "ran" survives
    assert_eq!(m.row(2).to_dense(4), vec![0.0, 1.0, 0.0, 0.0]);
}

#[test]
fn cap_keeps_highest_document_frequencies() {
    // 4000 distinct terms with df >= 2: term t_i appears in (i % 7) + 2 docs
    let n_docs = 10;
    let mut docs = vec![String::new(); n_docs];
    for i in 0..4000 {
        let df = i % 7 + 2;
        for d in docs.iter_mut().take(df) {
            d.push_str(&format!("t{i:04}x ,"));
        }
    }
    let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
    let vocab = fit_tfidf(&refs).unwrap();
    assert_eq!(vocab.len(), 3000);
    let (terms, _) = oracles::tfidf_bruteforce(&refs, 3000);
    assert_eq!(vocab.terms(), terms.as_slice());
    let kept_min = terms.iter().map(|t| vocab.df(t).unwrap()).min().unwrap();
    let small = fit_tfidf_with_cap(&refs, usize::MAX).unwrap();
    let dropped_max = small
        .terms()
        .iter()
        .filter(|t| vocab.column(t).is_none())
        .map(|t| small.df(t).unwrap())
        .max()
        .unwrap();
    assert!(kept_min >= dropped_max);
}
