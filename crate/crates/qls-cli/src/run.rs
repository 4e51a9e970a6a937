//! Run-directory plumbing: output root, config hashing, artifact writers,
//! and the append-only manifest log.
//!
//! Artifacts land in `<root>/<subcommand>-<hash8>/`; the root is `runs/`
//! unless `QLS_OUT_DIR` overrides it (the only environment knob). Run
//! directories are keyed by the config hash, so re-running the same config
//! overwrites its artifacts with byte-identical content while
//! `manifests.jsonl` keeps one line per invocation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn out_root() -> PathBuf {
    std::env::var_os("QLS_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

pub fn config_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// One run's artifact context.
pub struct RunDir {
    pub root: PathBuf,
    pub dir: PathBuf,
    /// Paths relative to the output root, in creation order.
    pub artifacts: Vec<String>,
    rel: String,
}

impl RunDir {
    pub fn create(subcommand: &str, hash: &str) -> std::io::Result<Self> {
        let root = out_root();
        let rel = format!("{subcommand}-{}", &hash[..8]);
        let dir = root.join(&rel);
        fs::create_dir_all(&dir)?;
        Ok(Self {
            root,
            dir,
            artifacts: Vec::new(),
            rel,
        })
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<String> {
        let payload = serde_json::to_string_pretty(value)
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        self.write_text(name, &(payload + "\n"))
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> std::io::Result<String> {
        fs::write(self.dir.join(name), text)?;
        let rel = format!("{}/{name}", self.rel);
        self.artifacts.push(rel.clone());
        Ok(rel)
    }

    pub fn path_of(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn note_artifact(&mut self, name: &str) -> String {
        let rel = format!("{}/{name}", self.rel);
        self.artifacts.push(rel.clone());
        rel
    }
}

#[derive(Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: &'static str,
    pub subcommand: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outcome: String,
    pub artifacts: Vec<String>,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Append one manifest line to `<root>/manifests.jsonl`.
pub fn append_manifest(root: &Path, manifest: &RunManifest) -> std::io::Result<()> {
    fs::create_dir_all(root)?;
    let line = serde_json::to_string(manifest).map_err(|e| std::io::Error::other(e.to_string()))?;
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(root.join("manifests.jsonl"))?;
    writeln!(file, "{line}")
}

/// CSV with fixed header; floats rendered by `Display`, i.e. shortest
/// round-trip form, so identical inputs give identical bytes.
pub struct Csv {
    out: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            out: header.join(",") + "\n",
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "csv row width");
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

pub fn cell_f64(v: f64) -> String {
    format!("{v}")
}

pub fn cell_opt(v: Option<f64>) -> String {
    v.map(cell_f64).unwrap_or_default()
}
