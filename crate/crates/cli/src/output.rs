//! Artifact writing. Everything is rendered in memory first; files are written to a
//! temporary sibling and renamed, so a failed run leaves nothing behind.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Version of every CSV column contract, carried in the header comment.
pub const SCHEMA_VERSION: u32 = 1;

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        let mut text = format!("# qfilter {kind} schema v{SCHEMA_VERSION}\n");
        text.push_str(&columns.join(","));
        text.push('\n');
        Csv { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Shortest round-trip representation, so reruns are byte-identical.
pub fn num(x: f64) -> String {
    let mut s = String::new();
    write!(s, "{x:e}").expect("write to string");
    s
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A set of artifacts committed together.
#[derive(Default)]
pub struct Outputs {
    items: Vec<(Option<PathBuf>, String)>,
}

impl Outputs {
    pub fn push(&mut self, path: Option<PathBuf>, body: String) {
        self.items.push((path, body));
    }

    /// Write all artifacts; on any failure, remove the ones already written.
    pub fn commit(self) -> Result<()> {
        let mut written: Vec<PathBuf> = Vec::new();
        for (path, body) in &self.items {
            let result = match path {
                None => std::io::stdout().write_all(body.as_bytes()).context("cannot write to stdout"),
                Some(p) => write_atomic(p, body).map(|_| written.push(p.clone())),
            };
            if let Err(e) = result {
                for p in &written {
                    let _ = std::fs::remove_file(p);
                }
                return Err(e);
            }
        }
        Ok(())
    }
}

fn write_atomic(path: &Path, body: &str) -> Result<()> {
    let name = path.file_name().with_context(|| format!("{} is not a file path", path.display()))?;
    let tmp = path.with_file_name(format!(".{}.partial", name.to_string_lossy()));
    let result = std::fs::write(&tmp, body)
        .and_then(|_| std::fs::rename(&tmp, path))
        .with_context(|| format!("cannot write {}", path.display()));
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

/// `out.csv` → `out.summary.json`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}
