//! Run configuration: a TOML file of dotted keys, overridden by flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qroute_core::corpus::Label;
use qroute_core::cost::{CostModel, Paradigm};

use crate::CliError;

/// Top-level keys accepted in a config file (besides the `cost.*` family).
const KNOWN: &[&str] = &[
    "data",
    "out",
    "seed",
    "regime",
    "classifier",
    "k",
    "embeddings",
    "fallback_embedder",
    "embedding_dim",
    "model",
    "bind",
    "batch_cap",
    "n_per_label",
    "noise",
    "domains",
    "predictions",
];

/// Flattened configuration, keyed by dotted path.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, toml::Value>,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn check_key(key: &str) -> Result<(), CliError> {
    let ok = KNOWN.contains(&key)
        || key == "cost.baseline"
        || key
            .strip_prefix("cost.ratios.")
            .is_some_and(|p| p.parse::<Paradigm>().is_ok())
        || key
            .strip_prefix("cost.policy.")
            .is_some_and(|l| l.parse::<Label>().is_ok());
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(format!("unknown config key {key:?}")))
    }
}

/// Parse a `--set key=value` override; the value is read as TOML and falls
/// back to a bare string.
pub fn parse_assignment(s: &str) -> Result<(String, toml::Value), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let k = k.trim().to_string();
    let v = v.trim();
    let value = format!("x = {v}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("x"))
        .unwrap_or_else(|| toml::Value::String(v.to_string()));
    Ok((k, value))
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut s = Settings::default();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
            let table: toml::Table = text
                .parse()
                .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", p.display())))?;
            flatten("", &table, &mut s.values);
            for k in s.values.keys() {
                check_key(k)?;
            }
        }
        Ok(s)
    }

    pub fn set(&mut self, key: &str, value: toml::Value) -> Result<(), CliError> {
        check_key(key)?;
        self.values.insert(key.to_string(), value);
        Ok(())
    }

    pub fn set_opt<T: Into<toml::Value>>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.into());
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn str(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(toml::Value::Integer(i)) => Ok(Some(i.to_string())),
            Some(other) => Err(CliError::Usage(format!("{key} must be a string, got {other}"))),
        }
    }

    pub fn required_str(&self, key: &str) -> Result<String, CliError> {
        self.str(key)?
            .ok_or_else(|| CliError::Usage(format!("missing required setting `{key}` (flag --{})", key.replace('_', "-"))))
    }

    pub fn path(&self, key: &str) -> Result<Option<PathBuf>, CliError> {
        Ok(self.str(key)?.map(PathBuf::from))
    }

    /// A path that must exist at command start.
    pub fn existing_path(&self, key: &str) -> Result<PathBuf, CliError> {
        let p = PathBuf::from(self.required_str(key)?);
        if !p.exists() {
            return Err(CliError::Usage(format!("{key} path {} does not exist", p.display())));
        }
        Ok(p)
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(toml::Value::String(s)) => s
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("{key} must be a non-negative integer, got {s:?}"))),
            Some(other) => Err(CliError::Usage(format!("{key} must be a non-negative integer, got {other}"))),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(f)) => Ok(Some(*f)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(toml::Value::String(s)) => s
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("{key} must be a number, got {s:?}"))),
            Some(other) => Err(CliError::Usage(format!("{key} must be a number, got {other}"))),
        }
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        match self.values.get(key) {
            None => Ok(false),
            Some(toml::Value::Boolean(b)) => Ok(*b),
            Some(toml::Value::String(s)) if s == "true" || s == "false" => Ok(s == "true"),
            Some(other) => Err(CliError::Usage(format!("{key} must be true or false, got {other}"))),
        }
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.u64("seed")?
            .ok_or_else(|| CliError::Usage("this command is stochastic; set `seed` (flag --seed)".into()))
    }

    pub fn out_dir(&self) -> Result<PathBuf, CliError> {
        Ok(self.path("out")?.unwrap_or_else(|| PathBuf::from("out")))
    }

    /// Cost table, policy and baseline with any `cost.*` overrides applied.
    pub fn cost_model(&self) -> Result<CostModel, CliError> {
        let mut m = CostModel::default();
        for k in self.values.keys().filter(|k| k.starts_with("cost.")) {
            if let Some(p) = k.strip_prefix("cost.ratios.") {
                let paradigm: Paradigm = p.parse().map_err(CliError::usage)?;
                let ratio = self.f64(k)?.expect("present");
                m.table.set(paradigm, ratio).map_err(CliError::usage)?;
            } else if let Some(l) = k.strip_prefix("cost.policy.") {
                let label: Label = l.parse().map_err(CliError::usage)?;
                let target: Paradigm = self.required_str(k)?.parse().map_err(CliError::usage)?;
                m.policy.set(label, target);
            } else if k == "cost.baseline" {
                m.baseline = self.required_str(k)?.parse().map_err(CliError::usage)?;
            }
        }
        m.validate().map_err(CliError::usage)?;
        Ok(m)
    }
}
