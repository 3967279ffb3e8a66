//! Corpus manifest: one JSON document at the corpus root listing every
//! piece, its score files and its performances.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Component, Path, PathBuf};

use anyhow::{bail, Context, Result};
use perfcurate::matcher::{ScoreVariant, Source};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Suffixes of files written by the pipeline; never treated as inputs.
pub const CLEAN_SUFFIX: &str = ".clean.mid";
pub const ALIGN_SUFFIX: &str = "_align.pfa";
pub const REFINED_SUFFIX: &str = "_refined.mid";
pub const REFINED_ALIGN_SUFFIX: &str = "_refined_align.pfa";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScorePaths {
    pub maximal: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimal: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerformanceEntry {
    pub path: String,
    pub source: String,
    pub recorded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cleaned: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alignment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score_variant: Option<ScoreVariant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub definitive: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adjusted_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refined: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refined_alignment: Option<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub stage_recalls: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub star: Option<bool>,
    /// Lead performance of this file's duplicate cluster (itself for leads).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duplicate_of: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lead: Option<bool>,
}

impl PerformanceEntry {
    pub fn source(&self) -> Source {
        Source::parse(&self.source)
    }

    /// The file downstream stages read: the cleaned copy when present.
    pub fn working_path(&self) -> &str {
        self.cleaned.as_deref().unwrap_or(&self.path)
    }

    /// Original file name without the source prefix and extension.
    pub fn original_name(&self) -> String {
        let stem = file_stem(&self.path);
        match stem.split_once('_') {
            Some((_, rest)) => rest.to_string(),
            None => stem,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PieceRecord {
    pub composer: String,
    pub composition: String,
    #[serde(default)]
    pub movement: String,
    pub score: ScorePaths,
    #[serde(default)]
    pub performances: Vec<PerformanceEntry>,
}

impl PieceRecord {
    /// Composition and movement joined, as used for title matching.
    pub fn title(&self) -> String {
        if self.movement.is_empty() {
            self.composition.clone()
        } else {
            format!("{} {}", self.composition, self.movement)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub records: Vec<PieceRecord>,
    #[serde(skip)]
    pub root: PathBuf,
}

fn file_stem(path: &str) -> String {
    Path::new(path).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn is_derived(name: &str) -> bool {
    [CLEAN_SUFFIX, ALIGN_SUFFIX, REFINED_SUFFIX, REFINED_ALIGN_SUFFIX].iter().any(|s| name.ends_with(s))
}

fn is_midi(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    lower.ends_with(".mid") || lower.ends_with(".midi")
}

/// Sibling path with `suffix` replacing the extension (`a/b.mid` →
/// `a/b_align.pfa`).
pub fn derived_path(path: &str, suffix: &str) -> String {
    let p = Path::new(path);
    let stem = file_stem(path);
    let stem = stem.strip_suffix(".clean").unwrap_or(&stem);
    let name = format!("{stem}{suffix}");
    match p.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => format!("{}/{name}", dir.to_string_lossy()),
        None => name,
    }
}

fn check_relative(path: &str) -> Result<()> {
    let p = Path::new(path);
    if p.is_absolute() || p.components().any(|c| !matches!(c, Component::Normal(_))) {
        bail!("path {path:?} does not resolve under the corpus root");
    }
    Ok(())
}

impl CorpusManifest {
    pub fn path_of(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Loads `manifest.json` from `root`, or builds one by scanning the
    /// directory tree when there is none.
    pub fn load_or_scan(root: &Path) -> Result<Self> {
        let file = root.join(MANIFEST_FILE);
        if file.exists() {
            Self::load(root)
        } else {
            Self::scan(root)
        }
    }

    pub fn load(root: &Path) -> Result<Self> {
        let file = root.join(MANIFEST_FILE);
        let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
        let mut m: CorpusManifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", file.display()))?;
        m.root = root.to_path_buf();
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self) -> Result<()> {
        let file = self.root.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&file, text).with_context(|| format!("writing {}", file.display()))
    }

    /// Paths are relative and normalized, scores exist in every record,
    /// each performance is listed once and carries a source prefix.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for r in &self.records {
            check_relative(&r.score.maximal)?;
            if let Some(m) = &r.score.minimal {
                check_relative(m)?;
            }
            for p in &r.performances {
                check_relative(&p.path)?;
                if !seen.insert(p.path.as_str()) {
                    bail!("performance {:?} is listed more than once", p.path);
                }
                let name = Path::new(&p.path).file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                if !name.contains('_') {
                    bail!("performance file {name:?} has no source prefix");
                }
            }
        }
        Ok(())
    }

    /// Builds a manifest from a `composer/composition[/movement…]` tree.
    ///
    /// A directory holding a file whose name starts with `score` is a piece;
    /// `score*_mini*` is its minimal score, any other `score*` file its
    /// maximal one. Remaining MIDI files there are performances named
    /// `<source>_<original>.mid`. Files written by the pipeline are skipped.
    pub fn scan(root: &Path) -> Result<Self> {
        if !root.is_dir() {
            bail!("corpus root {} is not a directory", root.display());
        }
        let mut records = Vec::new();
        scan_dir(root, root, &mut records)?;
        let m = CorpusManifest { records, root: root.to_path_buf() };
        m.validate()?;
        Ok(m)
    }

    pub fn performance_count(&self) -> usize {
        self.records.iter().map(|r| r.performances.len()).sum()
    }

    /// (record index, performance index) of every performance, in manifest
    /// order.
    pub fn performance_ids(&self) -> Vec<(usize, usize)> {
        self.records.iter().enumerate().flat_map(|(r, rec)| (0..rec.performances.len()).map(move |p| (r, p))).collect()
    }
}

fn scan_dir(root: &Path, dir: &Path, out: &mut Vec<PieceRecord>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .collect();
    entries.sort();
    let (mut maximal, mut minimal, mut perfs) = (None, None, Vec::new());
    for p in &entries {
        if p.is_dir() {
            continue;
        }
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        if !is_midi(&name) || is_derived(&name) {
            continue;
        }
        let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
        if name.to_ascii_lowercase().starts_with("score") {
            if file_stem(&name).contains("_mini") {
                minimal.get_or_insert(rel);
            } else {
                maximal.get_or_insert(rel);
            }
        } else {
            perfs.push(rel);
        }
    }
    if let Some(maximal) = maximal {
        let parts: Vec<String> =
            dir.strip_prefix(root).unwrap().components().map(|c| c.as_os_str().to_string_lossy().replace('_', " ")).collect();
        let performances = perfs
            .into_iter()
            .map(|path| {
                let name = Path::new(&path).file_name().unwrap().to_string_lossy().into_owned();
                let source = name.split_once('_').map(|(s, _)| Source::parse(s)).unwrap_or_default();
                PerformanceEntry {
                    path,
                    source: source.tag().to_string(),
                    // of the known sources only this one was captured on instrumented pianos
                    recorded: source == Source::Asap,
                    ..PerformanceEntry::default()
                }
            })
            .collect();
        out.push(PieceRecord {
            composer: parts.first().cloned().unwrap_or_default(),
            composition: parts.get(1).cloned().unwrap_or_default(),
            movement: parts.get(2..).map(|m| m.join(" / ")).unwrap_or_default(),
            score: ScorePaths { maximal, minimal },
            performances,
        });
    } else if !perfs.is_empty() {
        log::warn!("{}: {} performance file(s) without a score, ignored", dir.display(), perfs.len());
    }
    for p in entries.iter().filter(|p| p.is_dir()) {
        scan_dir(root, p, out)?;
    }
    Ok(())
}
