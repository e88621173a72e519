#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_qroute")
}

pub fn qroute(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn qroute")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Writes a synthetic corpus into `dir` and returns its path.
pub fn synth(dir: &Path, n_per_label: usize, noise: f64, seed: u64) -> PathBuf {
    let o = qroute(&[
        "synth",
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        &seed.to_string(),
        "--n-per-label",
        &n_per_label.to_string(),
        "--noise",
        &noise.to_string(),
    ]);
    assert!(o.status.success(), "synth failed: {}", String::from_utf8_lossy(&o.stderr));
    dir.join("synthetic.jsonl")
}

/// Trains a TF-IDF + SVM model on `data`, writing `model.json` into `dir`.
pub fn train_model(dir: &Path, data: &Path) -> PathBuf {
    let o = qroute(&[
        "train-full",
        "--data",
        data.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        "7",
        "--regime",
        "tfidf",
        "--classifier",
        "svm",
    ]);
    assert!(o.status.success(), "train-full failed: {}", String::from_utf8_lossy(&o.stderr));
    dir.join("model.json")
}

/// A running `qroute serve` process, killed on drop.
pub struct Server {
    child: Child,
    pub base: String,
}

impl Server {
    pub fn start(model: &Path) -> Server {
        let mut child = Command::new(bin())
            .args(["serve", "--model", model.to_str().unwrap(), "--bind", "127.0.0.1:0"])
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn qroute serve");
        let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
        let addr = loop {
            let line = lines.next().expect("server exited before listening").unwrap();
            if let Some(a) = line.strip_prefix("listening on ") {
                break a.trim().to_string();
            }
        };
        Server {
            child,
            base: format!("http://{addr}"),
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
