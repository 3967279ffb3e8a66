//! Batch front-end over a corpus directory: clean, match, refine, dedup,
//! label and stats, with CSV/JSON reports under `<root>/reports/`.

pub mod commands;
pub mod manifest;
pub mod report;
pub mod settings;

use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use rayon::prelude::*;

pub use manifest::CorpusManifest;
pub use report::Reporter;
pub use settings::Settings;

/// Everything a command needs: corpus root, settings and a worker pool.
pub struct Context {
    pub root: PathBuf,
    pub settings: Settings,
    pub dry_run: bool,
    pool: rayon::ThreadPool,
}

impl Context {
    pub fn new(root: impl AsRef<Path>, settings: Settings, dry_run: bool) -> Result<Self> {
        settings.validate()?;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(settings.workers).build().context("starting worker pool")?;
        Ok(Self { root: root.as_ref().to_path_buf(), settings, dry_run, pool })
    }

    /// Maps `f` over `items` on the worker pool; results keep input order.
    pub fn map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        self.pool.install(|| items.par_iter().map(f).collect())
    }

    pub fn manifest(&self) -> Result<CorpusManifest> {
        CorpusManifest::load_or_scan(&self.root)
    }

    pub fn reporter(&self) -> Reporter {
        Reporter::new(self.root.join(report::REPORT_DIR), self.dry_run)
    }

    /// Saves the manifest unless this is a dry run.
    pub fn save_manifest(&self, m: &CorpusManifest) -> Result<()> {
        if self.dry_run {
            return Ok(());
        }
        m.save()
    }
}

/// Aggregate result of one command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub command: &'static str,
    pub processed: usize,
    pub failures: usize,
}

impl Outcome {
    /// 0 when every entry succeeded, 1 when some failed.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.failures > 0)
    }
}
