//! `qroute` command-line tool: synthetic data, cross-validated evaluation,
//! the 15-cell classifier x feature grid, full training, routing, cost
//! simulation and an HTTP routing service.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod serve;

use config::{parse_assignment, Settings};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<qroute_core::Error> for CliError {
    fn from(e: qroute_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "qroute", version, about = "Query-type routing for retrieval-augmented generation")]
pub struct Cli {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags accepted by every command. Each one overrides the config key of
/// the same name.
#[derive(Debug, Args)]
pub struct SharedArgs {
    /// TOML config file with dotted keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dataset file (one JSON record per line).
    #[arg(long, global = true)]
    pub data: Option<String>,
    /// Output directory for all artifacts.
    #[arg(long, global = true)]
    pub out: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Feature regime: tfidf, embedding or structural.
    #[arg(long, global = true)]
    pub regime: Option<String>,
    /// Classifier: logreg, svm, random_forest, knn or mlp.
    #[arg(long, global = true)]
    pub classifier: Option<String>,
    /// Number of cross-validation folds.
    #[arg(long, global = true)]
    pub k: Option<u64>,
    /// Embedding file (`n<TAB>dim` header, then `id<TAB>v1...` rows).
    #[arg(long, global = true)]
    pub embeddings: Option<String>,
    /// Use the deterministic hashing embedder for the embedding regime.
    #[arg(long, global = true)]
    pub fallback_embedder: bool,
    #[arg(long, global = true)]
    pub embedding_dim: Option<u64>,
    /// Override any config key, e.g. `--set cost.ratios.NaiveRAG=1.2`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", value_parser = parse_assignment)]
    pub set: Vec<(String, toml::Value)>,
    /// Log verbosity (-v info, -vv debug); RUST_LOG also works.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled synthetic query corpus.
    Synth {
        #[arg(long)]
        n_per_label: Option<u64>,
        /// Fraction of queries drawn from another label's templates.
        #[arg(long)]
        noise: Option<f64>,
        /// Comma-separated domain tags.
        #[arg(long)]
        domains: Option<String>,
    },
    /// Write the stratified fold assignment as CSV.
    Split,
    /// Cross-validate one classifier on one feature regime.
    Eval,
    /// Cross-validate all 5 classifiers on all 3 feature regimes.
    Grid,
    /// Train one model on the whole dataset and write the model file.
    TrainFull,
    /// Route queries with a trained model; prints one JSON object per query.
    Route {
        #[arg(long)]
        model: Option<String>,
        /// Query text (repeatable).
        #[arg(long)]
        query: Vec<String>,
        /// File with one query per line.
        #[arg(long)]
        queries: Option<PathBuf>,
    },
    /// Savings vs. the baseline paradigm for a predictions CSV or a dataset.
    Cost {
        /// Per-query CSV written by `eval` or `grid`.
        #[arg(long)]
        predictions: Option<String>,
    },
    /// Serve a trained model over HTTP.
    Serve {
        #[arg(long)]
        model: Option<String>,
        /// Address to bind, host:port.
        #[arg(long)]
        bind: Option<String>,
        /// Largest accepted `queries` batch.
        #[arg(long)]
        batch_cap: Option<u64>,
    },
}

fn settings(cli: &Cli) -> Result<Settings, CliError> {
    let a = &cli.shared;
    let mut s = Settings::load(a.config.as_deref())?;
    s.set_opt("data", a.data.clone());
    s.set_opt("out", a.out.clone());
    s.set_opt("seed", a.seed.map(|v| v as i64));
    s.set_opt("regime", a.regime.clone());
    s.set_opt("classifier", a.classifier.clone());
    s.set_opt("k", a.k.map(|v| v as i64));
    s.set_opt("embeddings", a.embeddings.clone());
    if a.fallback_embedder {
        s.set_opt("fallback_embedder", Some(true));
    }
    s.set_opt("embedding_dim", a.embedding_dim.map(|v| v as i64));
    match &cli.command {
        Command::Synth { n_per_label, noise, domains } => {
            s.set_opt("n_per_label", n_per_label.map(|v| v as i64));
            s.set_opt("noise", *noise);
            s.set_opt("domains", domains.clone());
        }
        Command::Route { model, .. } => s.set_opt("model", model.clone()),
        Command::Cost { predictions } => s.set_opt("predictions", predictions.clone()),
        Command::Serve { model, bind, batch_cap } => {
            s.set_opt("model", model.clone());
            s.set_opt("bind", bind.clone());
            s.set_opt("batch_cap", batch_cap.map(|v| v as i64));
        }
        _ => {}
    }
    for (k, v) in &a.set {
        s.set(k, v.clone())?;
    }
    Ok(s)
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let s = settings(&cli)?;
    match &cli.command {
        Command::Synth { .. } => commands::synth(&s),
        Command::Split => commands::split(&s),
        Command::Eval => commands::eval(&s),
        Command::Grid => commands::grid(&s),
        Command::TrainFull => commands::train_full(&s),
        Command::Route { query, queries, .. } => commands::route(&s, query, queries.as_deref()),
        Command::Cost { .. } => commands::cost(&s),
        Command::Serve { .. } => serve::run(&s),
    }
}

/// Parse arguments, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    // the service logs one access line per request at info level
    let verbose = match cli.command {
        Command::Serve { .. } => cli.shared.verbose.max(1),
        _ => cli.shared.verbose,
    };
    init_logging(verbose);
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
