use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;

pub const REPORT_DIR: &str = "reports";

/// Writes CSV and JSON reports; in dry-run mode nothing touches the disk.
pub struct Reporter {
    dir: PathBuf,
    dry_run: bool,
}

impl Reporter {
    pub fn new(dir: PathBuf, dry_run: bool) -> Self {
        Self { dir, dry_run }
    }

    pub fn dir(&self) -> &PathBuf {
        &self.dir
    }

    /// Header row first, so an empty report is still a valid CSV.
    pub fn csv<R: Serialize>(&self, name: &str, headers: &[&str], rows: &[R]) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(headers)?;
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        self.write(name, &bytes)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        if self.dry_run {
            log::info!("dry run: {} not written", self.dir.join(name).display());
            return Ok(());
        }
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
    }
}
