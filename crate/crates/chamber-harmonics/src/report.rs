//! Deterministic artifact writing: CSV tables, structured text reports and
//! the run manifest.
//!
//! Floats are printed with 17 significant decimal digits so identical runs
//! produce byte-identical artifacts; the manifest lists every written file
//! with its SHA-256 content hash.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Render a float with 17 significant digits (round-trippable and stable).
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table under construction.
pub struct Csv {
    buffer: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Csv {
        Csv {
            buffer: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        let _ = writeln!(self.buffer, "{}", cells.join(","));
    }

    pub fn float_row(&mut self, cells: &[f64]) {
        let rendered: Vec<String> = cells.iter().map(|&c| fmt_float(c)).collect();
        self.row(&rendered);
    }

    pub fn finish(self) -> String {
        self.buffer
    }
}

/// Key-value structured text report with stable ordering.
pub struct TextReport {
    buffer: String,
}

impl TextReport {
    pub fn new(title: &str) -> TextReport {
        let mut buffer = String::new();
        let _ = writeln!(buffer, "{title}");
        let _ = writeln!(buffer, "{}", "=".repeat(title.len()));
        TextReport { buffer }
    }

    pub fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.buffer, "{key}: {value}");
    }

    pub fn float(&mut self, key: &str, value: f64) {
        self.line(key, fmt_float(value));
    }

    pub fn floats(&mut self, key: &str, values: &[f64]) {
        let rendered: Vec<String> = values.iter().map(|&v| fmt_float(v)).collect();
        self.line(key, rendered.join(" "));
    }

    pub fn blank(&mut self) {
        self.buffer.push('\n');
    }

    pub fn finish(self) -> String {
        self.buffer
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Collects artifacts for one run and writes them plus a manifest.
pub struct ArtifactWriter {
    directory: PathBuf,
    written: Vec<(String, String)>,
    config_hash: String,
    tolerances: Vec<(String, f64)>,
}

impl ArtifactWriter {
    pub fn new(directory: &Path, config_text: &str) -> Result<ArtifactWriter> {
        std::fs::create_dir_all(directory)?;
        Ok(ArtifactWriter {
            directory: directory.to_path_buf(),
            written: Vec::new(),
            config_hash: sha256_hex(config_text.as_bytes()),
            tolerances: Vec::new(),
        })
    }

    /// Record a tolerance the run promises to honor; lands in the manifest.
    pub fn tolerance(&mut self, name: &str, value: f64) {
        self.tolerances.push((name.to_string(), value));
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        if name.contains('/') || name.contains("..") {
            return Err(Error::Validation(format!("artifact name {name} must be flat")));
        }
        let path = self.directory.join(name);
        std::fs::write(&path, contents)?;
        self.written
            .push((name.to_string(), sha256_hex(contents.as_bytes())));
        Ok(())
    }

    /// Write the manifest and return the list of artifact paths.
    pub fn finish(mut self) -> Result<Vec<PathBuf>> {
        let mut manifest = String::new();
        let _ = writeln!(manifest, "config_sha256: {}", self.config_hash);
        for (name, value) in &self.tolerances {
            let _ = writeln!(manifest, "tolerance {name}: {}", fmt_float(*value));
        }
        self.written.sort();
        for (name, hash) in &self.written {
            let _ = writeln!(manifest, "artifact {name}: sha256 {hash}");
        }
        let path = self.directory.join("manifest.txt");
        std::fs::write(&path, &manifest)?;
        let mut paths: Vec<PathBuf> = self
            .written
            .iter()
            .map(|(name, _)| self.directory.join(name))
            .collect();
        paths.push(path);
        Ok(paths)
    }
}
