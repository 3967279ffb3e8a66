use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Refinement stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    /// Remove links inside alignment holes.
    Holes,
    /// Remove intra-chord outliers, close onsets and alignment jumps.
    Onsets,
    /// Strip unmatched performance notes and fill in missing ones.
    Interpolate,
    /// Re-express the performance on the score's beat grid.
    Sync,
}

impl Stage {
    pub fn letter(&self) -> char {
        match self {
            Stage::Holes => 'H',
            Stage::Onsets => 'O',
            Stage::Interpolate => 'I',
            Stage::Sync => 'S',
        }
    }

    fn from_letter(c: char) -> Option<Stage> {
        match c.to_ascii_uppercase() {
            'H' => Some(Stage::Holes),
            'O' => Some(Stage::Onsets),
            'I' => Some(Stage::Interpolate),
            'S' => Some(Stage::Sync),
            _ => None,
        }
    }
}

/// What to do with an onset whose implied tempo is out of range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpPolicy {
    /// Move it (and everything after it) to the time expected from the
    /// local tempo.
    Shift,
    /// Remove its links.
    Drop,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("line {0}: expected key=value")]
    BadLine(usize),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    /// Hole window length in notes (odd).
    pub hole_window: usize,
    /// Unaligned fraction above which a note is inside a hole.
    pub hole_ratio: f64,
    /// Chord members further than this many standard deviations from the
    /// chord mean are removed.
    pub intra_onset_sigma: f64,
    /// Lowest plausible onset tempo, BPM.
    pub tempo_min: f64,
    /// Highest plausible onset tempo, BPM.
    pub tempo_max: f64,
    /// Trailing window for the local tempo estimate, seconds.
    pub local_tempo_window: f64,
    /// Consecutive onsets closer than this (seconds) are filtered.
    pub min_onset_gap: f64,
    /// Minimum time span between interpolation anchors, seconds.
    pub interp_min_time: f64,
    /// Minimum beat span between interpolation anchors.
    pub interp_min_beats: f64,
    pub jump_policy: JumpPolicy,
    pub stages: BTreeSet<Stage>,
    /// Move the first performed note to the first score note's time.
    pub initial_shift: bool,
    /// Abort when recall after onset cleaning falls below this.
    pub recall_floor: Option<f64>,
    /// Resolution of synchronized output.
    pub sync_ticks_per_quarter: u16,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            hole_window: 31,
            hole_ratio: 0.75,
            intra_onset_sigma: 2.0,
            tempo_min: 15.0,
            tempo_max: 480.0,
            local_tempo_window: 8.0,
            min_onset_gap: 0.010,
            interp_min_time: 0.05,
            interp_min_beats: 0.25,
            jump_policy: JumpPolicy::Shift,
            stages: [Stage::Holes, Stage::Onsets, Stage::Interpolate].into(),
            initial_shift: true,
            recall_floor: None,
            sync_ticks_per_quarter: 480,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::BadValue { key: key.into(), value: value.into() })
}

impl RefineConfig {
    /// Keys accepted by [`RefineConfig::set`].
    pub const KEYS: [&'static str; 14] = [
        "hole_window",
        "hole_ratio",
        "intra_onset_sigma",
        "tempo_min",
        "tempo_max",
        "local_tempo_window",
        "min_onset_gap",
        "interp_min_time",
        "interp_min_beats",
        "jump_policy",
        "stages",
        "initial_shift",
        "recall_floor",
        "sync_ticks_per_quarter",
    ];

    pub fn has_stage(&self, s: Stage) -> bool {
        self.stages.contains(&s)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        if self.hole_window < 3 || self.hole_window % 2 == 0 {
            return bad("hole_window must be odd and at least 3");
        }
        if !(self.hole_ratio > 0.0 && self.hole_ratio <= 1.0) {
            return bad("hole_ratio must be in (0, 1]");
        }
        if !(self.tempo_min > 0.0 && self.tempo_min < self.tempo_max) {
            return bad("need 0 < tempo_min < tempo_max");
        }
        let gaps = [
            self.intra_onset_sigma,
            self.local_tempo_window,
            self.min_onset_gap,
            self.interp_min_time,
            self.interp_min_beats,
        ];
        if gaps.iter().any(|g| !(*g >= 0.0)) {
            return bad("sigma, windows and gaps must be non-negative");
        }
        if self.sync_ticks_per_quarter == 0 {
            return bad("sync_ticks_per_quarter must be positive");
        }
        Ok(())
    }

    /// Sets one parameter from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key.trim() {
            "hole_window" => self.hole_window = parse(key, v)?,
            "hole_ratio" => self.hole_ratio = parse(key, v)?,
            "intra_onset_sigma" => self.intra_onset_sigma = parse(key, v)?,
            "tempo_min" => self.tempo_min = parse(key, v)?,
            "tempo_max" => self.tempo_max = parse(key, v)?,
            "local_tempo_window" => self.local_tempo_window = parse(key, v)?,
            "min_onset_gap" => self.min_onset_gap = parse(key, v)?,
            "interp_min_time" => self.interp_min_time = parse(key, v)?,
            "interp_min_beats" => self.interp_min_beats = parse(key, v)?,
            "jump_policy" => {
                self.jump_policy = match v.to_ascii_lowercase().as_str() {
                    "shift" => JumpPolicy::Shift,
                    "drop" => JumpPolicy::Drop,
                    _ => return Err(ConfigError::BadValue { key: key.into(), value: value.into() }),
                }
            }
            "stages" => {
                let mut stages = BTreeSet::new();
                for c in v.chars().filter(|c| !matches!(c, ',' | ' ' | '+')) {
                    stages.insert(
                        Stage::from_letter(c)
                            .ok_or_else(|| ConfigError::BadValue { key: key.into(), value: value.into() })?,
                    );
                }
                self.stages = stages;
            }
            "initial_shift" => self.initial_shift = parse(key, v)?,
            "recall_floor" => {
                self.recall_floor = if v.is_empty() || v == "none" { None } else { Some(parse(key, v)?) }
            }
            "sync_ticks_per_quarter" => self.sync_ticks_per_quarter = parse(key, v)?,
            other => return Err(ConfigError::UnknownKey(other.into())),
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    /// Keys not handled here are returned untouched for other consumers.
    pub fn apply_lines(&mut self, text: &str) -> Result<Vec<(String, String)>, ConfigError> {
        let mut rest = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::BadLine(i + 1))?;
            match self.set(k, v) {
                Err(ConfigError::UnknownKey(_)) => rest.push((k.trim().to_string(), v.trim().to_string())),
                r => r?,
            }
        }
        Ok(rest)
    }

    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        if let Some((k, _)) = cfg.apply_lines(text)?.into_iter().next() {
            return Err(ConfigError::UnknownKey(k));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let stages: String = self.stages.iter().map(Stage::letter).collect();
        let policy = match self.jump_policy {
            JumpPolicy::Shift => "shift",
            JumpPolicy::Drop => "drop",
        };
        let floor = self.recall_floor.map_or("none".to_string(), |f| f.to_string());
        let _ = writeln!(s, "hole_window={}", self.hole_window);
        let _ = writeln!(s, "hole_ratio={}", self.hole_ratio);
        let _ = writeln!(s, "intra_onset_sigma={}", self.intra_onset_sigma);
        let _ = writeln!(s, "tempo_min={}", self.tempo_min);
        let _ = writeln!(s, "tempo_max={}", self.tempo_max);
        let _ = writeln!(s, "local_tempo_window={}", self.local_tempo_window);
        let _ = writeln!(s, "min_onset_gap={}", self.min_onset_gap);
        let _ = writeln!(s, "interp_min_time={}", self.interp_min_time);
        let _ = writeln!(s, "interp_min_beats={}", self.interp_min_beats);
        let _ = writeln!(s, "jump_policy={policy}");
        let _ = writeln!(s, "stages={stages}");
        let _ = writeln!(s, "initial_shift={}", self.initial_shift);
        let _ = writeln!(s, "recall_floor={floor}");
        let _ = writeln!(s, "sync_ticks_per_quarter={}", self.sync_ticks_per_quarter);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = RefineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(RefineConfig::from_kv_str(&cfg.to_kv_string()).unwrap(), cfg);
        assert!(cfg.has_stage(Stage::Interpolate) && !cfg.has_stage(Stage::Sync));
    }

    #[test]
    fn parses_overrides() {
        let cfg = RefineConfig::from_kv_str("# comment\nhole_window = 15\nstages=HOIS\njump_policy=drop\nrecall_floor=0.5\n").unwrap();
        assert_eq!(cfg.hole_window, 15);
        assert_eq!(cfg.stages.len(), 4);
        assert_eq!(cfg.jump_policy, JumpPolicy::Drop);
        assert_eq!(cfg.recall_floor, Some(0.5));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RefineConfig::from_kv_str("hole_window=4"), Err(ConfigError::Invalid(_))));
        assert!(matches!(RefineConfig::from_kv_str("nope=1"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(RefineConfig::from_kv_str("tempo_min=500"), Err(ConfigError::Invalid(_))));
        assert!(matches!(RefineConfig::from_kv_str("stages=HX"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(RefineConfig::from_kv_str("hole_window"), Err(ConfigError::BadLine(1))));
    }
}
