//! Flat `key=value` configuration covering every tunable of the pipeline.
//!
//! Precedence: built-in defaults, then the config file, then `--set`
//! overrides and dedicated command-line flags.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use perfcurate::clean::DEFAULT_MIN_DURATION;
use perfcurate::curation::{DEFAULT_SIM_THRESHOLD, DEFAULT_TOLERANCE};
use perfcurate::matcher::{MatchConfig, MAX_NOTE_RATIO, MIN_NOTE_RATIO};
use perfcurate::refine::{ConfigError, RefineConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub refine: RefineConfig,
    pub matching: MatchConfig,
    /// Notes shorter than this many seconds are dropped by cleaning.
    pub min_duration: f64,
    pub min_note_ratio: f64,
    pub max_note_ratio: f64,
    pub similarity_threshold: f64,
    pub onset_tolerance: f64,
    /// Move non-lead duplicates into a `quarantine/` subdirectory.
    pub quarantine: bool,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            refine: RefineConfig::default(),
            matching: MatchConfig::default(),
            min_duration: DEFAULT_MIN_DURATION,
            min_note_ratio: MIN_NOTE_RATIO,
            max_note_ratio: MAX_NOTE_RATIO,
            similarity_threshold: DEFAULT_SIM_THRESHOLD,
            onset_tolerance: DEFAULT_TOLERANCE,
            quarantine: false,
            workers: 0,
            seed: 0,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| anyhow!("bad value {v:?} for {key}"))
}

impl Settings {
    pub const KEYS: [&'static str; 12] = [
        "min_duration",
        "score_epsilon",
        "perf_epsilon",
        "dtw_band",
        "definitive_recall",
        "min_note_ratio",
        "max_note_ratio",
        "similarity_threshold",
        "onset_tolerance",
        "quarantine",
        "workers",
        "seed",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (key, v) = (key.trim(), value.trim());
        match key {
            "min_duration" => self.min_duration = num(key, v)?,
            "score_epsilon" => self.matching.score_epsilon = num(key, v)?,
            "perf_epsilon" => self.matching.perf_epsilon = num(key, v)?,
            "dtw_band" => self.matching.band_fraction = if v == "none" { None } else { Some(num(key, v)?) },
            "definitive_recall" => self.matching.definitive_recall = num(key, v)?,
            "min_note_ratio" => self.min_note_ratio = num(key, v)?,
            "max_note_ratio" => self.max_note_ratio = num(key, v)?,
            "similarity_threshold" => self.similarity_threshold = num(key, v)?,
            "onset_tolerance" => self.onset_tolerance = num(key, v)?,
            "quarantine" => self.quarantine = num(key, v)?,
            "workers" => self.workers = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            _ => match self.refine.set(key, v) {
                Err(ConfigError::UnknownKey(k)) => bail!("unknown config key {k:?}"),
                r => r?,
            },
        }
        Ok(())
    }

    /// Applies `key=value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key=value", i + 1))?;
            self.set(k, v).with_context(|| format!("line {}", i + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        self.apply_text(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Applies `key=value` overrides given on the command line.
    pub fn apply_overrides(&mut self, pairs: &[String]) -> Result<()> {
        for p in pairs {
            let (k, v) = p.split_once('=').ok_or_else(|| anyhow!("--set expects key=value, got {p:?}"))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.refine.validate()?;
        if !(self.min_note_ratio > 0.0 && self.min_note_ratio <= self.max_note_ratio) {
            bail!("need 0 < min_note_ratio <= max_note_ratio");
        }
        if !(0.0..=1.0).contains(&self.similarity_threshold) || !(0.0..=1.0).contains(&self.matching.definitive_recall) {
            bail!("similarity_threshold and definitive_recall must be in [0, 1]");
        }
        if !(self.min_duration >= 0.0 && self.onset_tolerance >= 0.0) {
            bail!("min_duration and onset_tolerance must be non-negative");
        }
        Ok(())
    }

    /// Every key with its current value, in a form [`Settings::apply_text`]
    /// reads back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let band = self.matching.band_fraction.map_or("none".to_string(), |b| b.to_string());
        let _ = writeln!(s, "min_duration={}", self.min_duration);
        let _ = writeln!(s, "score_epsilon={}", self.matching.score_epsilon);
        let _ = writeln!(s, "perf_epsilon={}", self.matching.perf_epsilon);
        let _ = writeln!(s, "dtw_band={band}");
        let _ = writeln!(s, "definitive_recall={}", self.matching.definitive_recall);
        let _ = writeln!(s, "min_note_ratio={}", self.min_note_ratio);
        let _ = writeln!(s, "max_note_ratio={}", self.max_note_ratio);
        let _ = writeln!(s, "similarity_threshold={}", self.similarity_threshold);
        let _ = writeln!(s, "onset_tolerance={}", self.onset_tolerance);
        let _ = writeln!(s, "quarantine={}", self.quarantine);
        let _ = writeln!(s, "workers={}", self.workers);
        let _ = writeln!(s, "seed={}", self.seed);
        s.push_str(&self.refine.to_kv_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut a = Settings::default();
        a.apply_text("hole_window = 15\ndtw_band=0.2 # comment\nquarantine=true\nstages=HOIS").unwrap();
        let mut b = Settings::default();
        b.apply_text(&a.to_text()).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.refine.hole_window, 15);
        assert_eq!(b.matching.band_fraction, Some(0.2));
    }

    #[test]
    fn every_key_is_listed() {
        let text = Settings::default().to_text();
        let keys: Vec<&str> = text.lines().map(|l| l.split('=').next().unwrap()).collect();
        let expected: Vec<&str> = Settings::KEYS.iter().chain(RefineConfig::KEYS.iter()).copied().collect();
        assert_eq!(keys, expected);
    }

    #[test]
    fn unknown_key_is_an_error() {
        assert!(Settings::default().apply_text("tempo=3").is_err());
        assert!(Settings::default().apply_text("novalue").is_err());
    }
}
