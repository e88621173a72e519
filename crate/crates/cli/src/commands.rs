use std::fs;
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use tracing::info;

use qroute_core::classifiers::{ClassifierSpec, Family};
use qroute_core::corpus::{
    generate_synthetic, load_dataset, stratified_kfold, Dataset, Label, SynthConfig,
    CANONICAL_DOMAINS,
};
use qroute_core::cost::{CostModel, PolicyRow};
use qroute_core::eval::{confusion, cross_validate, macro_f1, EvalReport};
use qroute_core::features::{parse_embeddings, FeatureKind};
use qroute_core::pipeline::{EmbeddingInput, RegimeInput};
use qroute_core::report::{self, GridSummary};
use qroute_core::routing::{load_model, route as route_batch, train_full as fit_full, RouteInput};

use crate::config::Settings;
use crate::CliError;

pub const DEFAULT_K: u64 = 5;
pub const DEFAULT_EMBEDDING_DIM: u64 = 384;

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(&path, contents).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn load_data(s: &Settings) -> Result<Dataset, CliError> {
    let path = s.existing_path("data")?;
    Ok(load_dataset(path)?)
}

fn family(s: &Settings) -> Result<Family, CliError> {
    s.str("classifier")?
        .unwrap_or_else(|| "svm_rbf".into())
        .parse()
        .map_err(CliError::usage)
}

fn regime(s: &Settings) -> Result<FeatureKind, CliError> {
    s.str("regime")?
        .unwrap_or_else(|| "tfidf".into())
        .parse()
        .map_err(CliError::usage)
}

fn k(s: &Settings) -> Result<usize, CliError> {
    let k = s.u64("k")?.unwrap_or(DEFAULT_K);
    if k < 2 {
        return Err(CliError::Usage(format!("k must be at least 2, got {k}")));
    }
    Ok(k as usize)
}

/// The embedding source for the embedding regime: a file when given,
/// otherwise the hashing embedder if explicitly enabled.
fn embedding_input(s: &Settings, ds: &Dataset) -> Result<RegimeInput, CliError> {
    if let Some(path) = s.path("embeddings")? {
        if !path.exists() {
            return Err(CliError::Usage(format!("embeddings path {} does not exist", path.display())));
        }
        let text = fs::read_to_string(&path).map_err(|e| runtime(format!("cannot read {}: {e}", path.display())))?;
        let table = parse_embeddings(&text)?;
        // fail up front on a missing id rather than inside a fold
        let ids: Vec<&str> = ds.records().iter().map(|r| r.id.as_str()).collect();
        table.matrix_for(&ids)?;
        return Ok(RegimeInput::Embedding(EmbeddingInput::Table(Arc::new(table))));
    }
    if s.bool("fallback_embedder")? {
        let dim = s.u64("embedding_dim")?.unwrap_or(DEFAULT_EMBEDDING_DIM);
        if dim == 0 {
            return Err(CliError::Usage("embedding_dim must be positive".into()));
        }
        return Ok(RegimeInput::Embedding(EmbeddingInput::Fallback {
            dim: dim as usize,
            seed: s.seed()?,
        }));
    }
    Err(CliError::Usage(
        "the embedding regime needs --embeddings <file> or an explicit --fallback-embedder".into(),
    ))
}

fn regime_input(s: &Settings, r: FeatureKind, ds: &Dataset) -> Result<RegimeInput, CliError> {
    match r {
        FeatureKind::Tfidf => Ok(RegimeInput::Tfidf),
        FeatureKind::Structural => Ok(RegimeInput::Structural),
        FeatureKind::Embedding => embedding_input(s, ds),
    }
}

fn embedding_label(input: &RegimeInput) -> &'static str {
    if input.is_fallback() {
        "Hash-Emb"
    } else {
        "Embedding"
    }
}

pub fn synth(s: &Settings) -> Result<(), CliError> {
    let seed = s.seed()?;
    let n = s.u64("n_per_label")?.unwrap_or(300) as usize;
    let noise = s.f64("noise")?.unwrap_or(0.05);
    if !(0.0..=1.0).contains(&noise) {
        return Err(CliError::Usage(format!("noise must lie in [0, 1], got {noise}")));
    }
    let domains: Vec<String> = match s.str("domains")? {
        Some(d) => d.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect(),
        None => CANONICAL_DOMAINS.iter().map(|d| d.to_string()).collect(),
    };
    if domains.is_empty() {
        return Err(CliError::Usage("domains must name at least one domain".into()));
    }
    let cfg = SynthConfig::new([n; 3], seed).with_noise(noise).with_domains(domains);
    let ds = generate_synthetic(&cfg).map_err(CliError::usage)?;
    let out = s.out_dir()?;
    let path = write(&out, "synthetic.jsonl", &ds.to_jsonl())?;
    println!("wrote {} records to {}", ds.len(), path.display());
    Ok(())
}

pub fn split(s: &Settings) -> Result<(), CliError> {
    let ds = load_data(s)?;
    let folds = stratified_kfold(&ds, k(s)?, s.seed()?)?;
    let mut csv = String::from("id,label,fold\n");
    for (r, f) in ds.records().iter().zip(folds.fold_of()) {
        csv.push_str(&format!("{},{},{f}\n", csv_escape(&r.id), r.label));
    }
    let path = write(&s.out_dir()?, "folds.csv", &csv)?;
    println!("wrote {}-fold assignment to {}", folds.k(), path.display());
    Ok(())
}

fn csv_escape(s: &str) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record([s]).expect("in-memory write");
    let mut out = String::from_utf8(w.into_inner().expect("flush")).expect("utf8");
    out.truncate(out.trim_end().len());
    out
}

fn write_tables(out: &Path, g: &GridSummary) -> Result<(), CliError> {
    write(out, "table1.txt", &report::table1_text(g))?;
    write(out, "table1.csv", &report::table1_csv(g))?;
    write(out, "table2.txt", &report::table2_text(g))?;
    write(out, "table2.csv", &report::table2_csv(g))?;
    write(out, "table3.txt", &report::table3_text(g))?;
    write(out, "table3.csv", &report::table3_csv(g))?;
    Ok(())
}

pub fn eval(s: &Settings) -> Result<(), CliError> {
    let ds = load_data(s)?;
    let r = regime(s)?;
    let fam = family(s)?;
    let seed = s.seed()?;
    let k = k(s)?;
    let input = regime_input(s, r, &ds)?;
    let cost = s.cost_model()?;
    let out = s.out_dir()?;
    let t0 = Instant::now();
    let rep = cross_validate(&ds, &input, &ClassifierSpec::new(fam, seed), k, seed)?;
    info!(regime = %r, classifier = %fam, secs = t0.elapsed().as_secs_f64(), "cross-validation finished");
    write(&out, "report.json", &rep.to_json())?;
    write(&out, "predictions.csv", &rep.per_query_csv())?;
    let g = GridSummary::new(&ds, embedding_label(&input), vec![(r, fam, Ok(rep.clone()))], &cost)?;
    write_tables(&out, &g)?;
    println!("{} + {}: accuracy={} macro_f1={}", r, fam, rep.accuracy, rep.macro_f1);
    println!("artifacts in {}", out.display());
    Ok(())
}

fn cell_name(r: FeatureKind, f: Family) -> String {
    format!("{}-{}", r.as_str(), f.as_str())
}

pub fn grid(s: &Settings) -> Result<(), CliError> {
    let ds = load_data(s)?;
    let seed = s.seed()?;
    let k = k(s)?;
    let cost = s.cost_model()?;
    let out = s.out_dir()?;
    let inputs: Vec<RegimeInput> = FeatureKind::ALL
        .iter()
        .map(|&r| regime_input(s, r, &ds))
        .collect::<Result<_, _>>()?;
    let cells: Vec<(usize, Family)> = (0..inputs.len())
        .flat_map(|i| Family::ALL.into_iter().map(move |f| (i, f)))
        .collect();
    let t0 = Instant::now();
    let results: Vec<(FeatureKind, Family, Result<EvalReport, String>)> = cells
        .par_iter()
        .map(|&(i, fam)| {
            let input = &inputs[i];
            let start = Instant::now();
            let res = catch_unwind(AssertUnwindSafe(|| {
                cross_validate(&ds, input, &ClassifierSpec::new(fam, seed), k, seed)
            }));
            let res = match res {
                Ok(Ok(rep)) => Ok(rep),
                Ok(Err(e)) => Err(e.to_string()),
                Err(_) => Err("panicked during training".to_string()),
            };
            match &res {
                Ok(rep) => info!(cell = %cell_name(input.regime(), fam), macro_f1 = rep.macro_f1,
                                 secs = start.elapsed().as_secs_f64(), "cell finished"),
                Err(e) => tracing::warn!(cell = %cell_name(input.regime(), fam), error = %e, "cell failed"),
            }
            (input.regime(), fam, res)
        })
        .collect();
    info!(secs = t0.elapsed().as_secs_f64(), "grid finished");
    for (r, f, res) in &results {
        if let Ok(rep) = res {
            let name = cell_name(*r, *f);
            write(&out, &format!("cells/{name}.json"), &rep.to_json())?;
            write(&out, &format!("cells/{name}.predictions.csv"), &rep.per_query_csv())?;
        }
    }
    let embedding = embedding_label(&inputs[1]);
    let g = GridSummary::new(&ds, embedding, results, &cost)?;
    write(&out, "grid.json", &g.to_json())?;
    write_tables(&out, &g)?;
    print!("{}", report::table1_text(&g));
    println!();
    print!("{}", report::table2_text(&g));
    println!("artifacts in {}", out.display());
    Ok(())
}

pub fn train_full(s: &Settings) -> Result<(), CliError> {
    let ds = load_data(s)?;
    let r = regime(s)?;
    let fam = family(s)?;
    let seed = s.seed()?;
    let input = regime_input(s, r, &ds)?;
    let model = fit_full(&ds, &input, &ClassifierSpec::new(fam, seed))?;
    let out = s.out_dir()?;
    let json = model.to_json();
    let path = write(&out, "model.json", &json)?;
    println!("model_id={}", qroute_core::routing::model_id(json.as_bytes()));
    println!("wrote {}", path.display());
    Ok(())
}

pub fn route(s: &Settings, query: &[String], queries: Option<&Path>) -> Result<(), CliError> {
    let model_path = s.existing_path("model")?;
    let mut texts: Vec<String> = query.to_vec();
    if let Some(p) = queries {
        let content = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
        texts.extend(content.lines().map(str::to_string));
    }
    if texts.is_empty() {
        return Err(CliError::Usage("give a query with --query or a file with --queries".into()));
    }
    if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
        return Err(CliError::Usage(format!("query {} is empty", i + 1)));
    }
    let loaded = load_model(&model_path)?;
    if !loaded.model.pipeline.accepts_text() {
        return Err(CliError::Usage(
            "model was trained on precomputed embeddings and cannot route raw text".into(),
        ));
    }
    let cost = s.cost_model()?;
    let inputs: Vec<RouteInput> = texts.into_iter().map(RouteInput::Text).collect();
    let responses = route_batch(&loaded, &cost, &inputs)?;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for r in responses {
        writeln!(lock, "{}", serde_json::to_string(&r).expect("response serializes")).map_err(runtime)?;
    }
    Ok(())
}

#[derive(serde::Deserialize)]
struct PredictionRow {
    #[serde(rename = "true")]
    truth: Label,
    predicted: Label,
}

/// Router, majority and perfect-label rows from a per-query CSV, or the two
/// reference rows from a dataset.
pub fn cost_rows(s: &Settings, cost: &CostModel) -> Result<(Vec<PolicyRow>, usize), CliError> {
    let (truth, predicted) = if let Some(p) = s.path("predictions")? {
        if !p.exists() {
            return Err(CliError::Usage(format!("predictions path {} does not exist", p.display())));
        }
        let mut rdr = csv::Reader::from_path(&p).map_err(|e| runtime(format!("cannot read {}: {e}", p.display())))?;
        let mut t = Vec::new();
        let mut pr = Vec::new();
        for row in rdr.deserialize::<PredictionRow>() {
            let row = row.map_err(|e| runtime(format!("{}: {e}", p.display())))?;
            t.push(row.truth);
            pr.push(row.predicted);
        }
        (t, Some(pr))
    } else if s.has("data") {
        (load_data(s)?.labels(), None)
    } else {
        return Err(CliError::Usage("cost needs --predictions <csv> or --data <dataset>".into()));
    };
    if truth.is_empty() {
        return Err(CliError::Runtime("no queries to simulate".into()));
    }
    let mut rows = Vec::new();
    if let Some(pred) = &predicted {
        rows.push(PolicyRow {
            configuration: "Router".into(),
            savings_percent: cost.simulate(pred)?.savings_percent,
            macro_f1: macro_f1(&confusion(&truth, pred)?)?,
        });
    }
    let n_routers = rows.len();
    let majority = vec![Label::SingleHop; truth.len()];
    let cm = confusion(&truth, &majority)?;
    rows.push(PolicyRow {
        configuration: "Majority class".into(),
        savings_percent: cost.simulate(&majority)?.savings_percent,
        macro_f1: macro_f1(&cm)?,
    });
    let mut counts = [0usize; 3];
    truth.iter().for_each(|l| counts[l.index()] += 1);
    let dist = qroute_core::corpus::LabelDistribution::from_counts(counts)?;
    rows.push(PolicyRow {
        configuration: "Perfect-label ref.".into(),
        savings_percent: cost.reference(&dist)?,
        macro_f1: 1.0,
    });
    Ok((rows, n_routers))
}

pub fn cost(s: &Settings) -> Result<(), CliError> {
    let model = s.cost_model()?;
    let (rows, n) = cost_rows(s, &model)?;
    let out = s.out_dir()?;
    let text = report::policy_table_text(&rows, n);
    write(&out, "cost.txt", &text)?;
    write(&out, "cost.csv", &report::policy_table_csv(&rows))?;
    let json = serde_json::json!({ "cost_model": model, "rows": rows });
    write(&out, "cost.json", &format!("{}\n", serde_json::to_string_pretty(&json).expect("json")))?;
    print!("{text}");
    Ok(())
}
