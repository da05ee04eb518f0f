//! Artifact writing: CSV tables, JSON reports, and the run manifest.
//!
//! Output is fully determined by `(config, seed)`: rows are emitted in
//! replica order regardless of the worker pool, and floats are printed
//! with Rust's shortest round-trip formatting, so a replayed run produces
//! byte-identical files.

use anyhow::{Context, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &str) -> Result<Self> {
        std::fs::create_dir_all(root)
            .with_context(|| format!("cannot create output directory {root}"))?;
        Ok(Self { root: PathBuf::from(root), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Write a CSV file with the given header and rows.
    pub fn write_csv<R: IntoIterator<Item = Vec<String>>>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: R,
    ) -> Result<()> {
        let path = self.path(name);
        let file = std::fs::File::create(&path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value)?;
        std::fs::write(&path, text + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

#[derive(Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub artifact_version: String,
    pub command: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: BTreeMap<String, String>) -> Self {
        Self {
            schema_version: 1,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config,
            outputs: Vec::new(),
            wall_clock_s: 0.0,
        }
    }

    pub fn finalize(mut self, out: &mut OutputDir, started: std::time::Instant) -> Result<()> {
        self.outputs = out.written().to_vec();
        self.wall_clock_s = started.elapsed().as_secs_f64();
        out.write_json("manifest.json", &self)
    }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}


/// Load a manifest and return its config map (for `--replay`).
pub fn load_manifest_config(path: &Path) -> Result<(String, BTreeMap<String, String>)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read manifest {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let command = value["command"]
        .as_str()
        .context("manifest missing `command`")?
        .to_string();
    let mut map = BTreeMap::new();
    for (k, v) in value["config"].as_object().context("manifest missing `config`")? {
        map.insert(k.clone(), v.as_str().unwrap_or_default().to_string());
    }
    Ok((command, map))
}
