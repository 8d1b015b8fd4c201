//! Serialised file writing and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::schema::{Schema, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory.
    pub path: String,
    pub schema: String,
    /// Data rows, for CSV files.
    pub rows: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub created_unix: u64,
    pub config: ExperimentConfig,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Shortest round-trip form, always in exponent notation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Collects output files; all writes go through here, one at a time.
pub struct Output {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn csv(&mut self, name: &str, schema: &Schema, rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(schema.columns)?;
        for r in rows {
            debug_assert_eq!(r.len(), schema.columns.len());
            w.write_record(r)?;
        }
        w.flush()?;
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            schema: schema.id.to_string(),
            rows: Some(rows.len()),
        });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, schema: &Schema, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            schema: schema.id.to_string(),
            rows: None,
        });
        Ok(())
    }

    pub fn finish(self, config: &ExperimentConfig) -> Result<(PathBuf, Vec<ManifestEntry>)> {
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            tool: format!("qdx {}", env!("CARGO_PKG_VERSION")),
            created_unix,
            config: config.clone(),
            files: self.entries,
        };
        let path = self.dir.join(MANIFEST_NAME);
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok((path, manifest.files))
    }
}
