//! Metadata prefilter for score/performance pairs.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Smallest accepted performance/score note ratio.
pub const MIN_NOTE_RATIO: f64 = 0.75;
/// Largest accepted performance/score note ratio.
pub const MAX_NOTE_RATIO: f64 = 1.33;

/// Origin dataset of a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub enum Source {
    Asap,
    Atepp,
    GiantMidi,
    Periscope,
    Aria,
    #[default]
    Other,
}

impl Source {
    /// Parses a filename prefix or tag (case-insensitive).
    pub fn parse(tag: &str) -> Source {
        match tag.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "asap" => Source::Asap,
            "atepp" => Source::Atepp,
            "giantmidi" | "giant" => Source::GiantMidi,
            "periscope" => Source::Periscope,
            "aria" | "ariamidi" => Source::Aria,
            _ => Source::Other,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Source::Asap => "asap",
            Source::Atepp => "atepp",
            Source::GiantMidi => "giantmidi",
            Source::Periscope => "periscope",
            Source::Aria => "aria",
            Source::Other => "other",
        }
    }
}

/// Metadata used to decide whether a score and a performance may be the
/// same piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceMeta {
    pub composer: String,
    pub title: String,
    pub catalog_tokens: BTreeSet<String>,
    pub key_tokens: BTreeSet<String>,
    pub note_count: usize,
    pub source: Source,
    pub recorded: bool,
}

impl PieceMeta {
    /// Normalizes the composer and extracts title tokens.
    pub fn new(composer: &str, title: &str, note_count: usize, source: Source, recorded: bool) -> Self {
        let (catalog_tokens, key_tokens) = title_tokens(title);
        Self {
            composer: normalize_composer(composer),
            title: title.to_string(),
            catalog_tokens,
            key_tokens,
            note_count,
            source,
            recorded,
        }
    }
}

fn fold(s: &str) -> String {
    s.nfd().filter(|c| !is_combining_mark(*c)).collect::<String>().to_lowercase()
}

/// Case-folds, strips diacritics and rewrites to `last,first`.
///
/// `"Frédéric Chopin"`, `"Chopin, Frédéric"` and `"chopin,_frederic"` all
/// become `"chopin,frederic"`.
pub fn normalize_composer(name: &str) -> String {
    let s = fold(&name.replace('_', " "));
    let words = |t: &str| t.split_whitespace().collect::<Vec<_>>().join(" ");
    if let Some((last, first)) = s.split_once(',') {
        let (last, first) = (words(last), words(first));
        return if first.is_empty() { last } else { format!("{last},{first}") };
    }
    let parts: Vec<&str> = s.split_whitespace().collect();
    match parts.split_last() {
        None => String::new(),
        Some((last, [])) => last.to_string(),
        Some((last, first)) => format!("{last},{}", first.join(" ")),
    }
}

fn catalog_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:^|[^a-z0-9])(op|bwv|kv|k|d|no|hob)\.?[_\s]*(\d+[a-z]?)").unwrap())
}

fn key_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:^|[^a-z0-9])([a-g])(?:[_\s-](sharp|flat))?[_\s-](major|minor)").unwrap())
}

/// Catalog tokens (`"op.10"`, `"bwv.846"`, `"no.3"`, …) and key tokens
/// (`"c_sharp_minor"`, `"e_major"`) found in a title.
pub fn title_tokens(title: &str) -> (BTreeSet<String>, BTreeSet<String>) {
    let t = fold(title);
    let catalog = catalog_re()
        .captures_iter(&t)
        .map(|c| {
            let kind = if &c[1] == "kv" { "k" } else { &c[1] };
            format!("{kind}.{}", &c[2])
        })
        .collect();
    let keys = key_re()
        .captures_iter(&t)
        .map(|c| match c.get(2) {
            Some(acc) => format!("{}_{}_{}", &c[1], acc.as_str(), &c[3]),
            None => format!("{}_{}", &c[1], &c[3]),
        })
        .collect();
    (catalog, keys)
}

fn tokens_compatible(a: &BTreeSet<String>, b: &BTreeSet<String>) -> bool {
    a.is_empty() || b.is_empty() || !a.is_disjoint(b)
}

/// Whether a single (score, performance) pair passes the prefilter.
pub fn is_candidate(score: &PieceMeta, perf: &PieceMeta) -> bool {
    is_candidate_within(score, perf, MIN_NOTE_RATIO, MAX_NOTE_RATIO)
}

/// [`is_candidate`] with explicit note-ratio bounds (inclusive).
pub fn is_candidate_within(score: &PieceMeta, perf: &PieceMeta, min_ratio: f64, max_ratio: f64) -> bool {
    if score.composer.is_empty() || score.composer != perf.composer || score.note_count == 0 {
        return false;
    }
    let ratio = perf.note_count as f64 / score.note_count as f64;
    if !(min_ratio..=max_ratio).contains(&ratio) {
        return false;
    }
    tokens_compatible(&score.catalog_tokens, &perf.catalog_tokens) && tokens_compatible(&score.key_tokens, &perf.key_tokens)
}

/// All (score index, performance index) pairs passing the prefilter, in
/// score-major order.
pub fn select_candidates(scores: &[PieceMeta], perfs: &[PieceMeta]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, s) in scores.iter().enumerate() {
        for (j, p) in perfs.iter().enumerate() {
            if is_candidate(s, p) {
                out.push((i, j));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(title: &str, n: usize) -> PieceMeta {
        PieceMeta::new("Frédéric Chopin", title, n, Source::Other, false)
    }

    #[test]
    fn composer_forms_agree() {
        for name in ["Frédéric Chopin", "Chopin, Frédéric", "chopin,_frederic", "CHOPIN,  Frederic "] {
            assert_eq!(normalize_composer(name), "chopin,frederic", "{name}");
        }
        assert_eq!(normalize_composer("Bach"), "bach");
        assert_eq!(normalize_composer("Johann Sebastian Bach"), "bach,johann sebastian");
    }

    #[test]
    fn tokens_from_titles() {
        let (cat, keys) = title_tokens("Etude Op. 10 No. 3 in E major");
        assert_eq!(cat.into_iter().collect::<Vec<_>>(), ["no.3", "op.10"]);
        assert_eq!(keys.into_iter().collect::<Vec<_>>(), ["e_major"]);
        let (cat, keys) = title_tokens("Prelude_and_Fugue_BWV_847_C_minor");
        assert!(cat.contains("bwv.847"));
        assert!(keys.contains("c_minor"));
        let (_, keys) = title_tokens("Scherzo in C-sharp minor");
        assert!(keys.contains("c_sharp_minor"));
        let (cat, _) = title_tokens("Sonata KV 331");
        assert!(cat.contains("k.331"));
        // letters inside words are not keys
        let (_, keys) = title_tokens("Ballade minor");
        assert!(keys.is_empty());
    }

    #[test]
    fn ratio_window() {
        assert!(is_candidate(&meta("", 100), &meta("", 100)));
        assert!(!is_candidate(&meta("", 100), &meta("", 200)));
        assert!(is_candidate(&meta("", 100), &meta("", 133)));
        assert!(!is_candidate(&meta("", 100), &meta("", 134)));
        assert!(is_candidate(&meta("", 100), &meta("", 75)));
        assert!(!is_candidate(&meta("", 100), &meta("", 74)));
    }

    #[test]
    fn catalog_tokens_must_intersect() {
        let mut s = meta("", 100);
        s.catalog_tokens = ["op.10", "no.3"].map(String::from).into();
        let mut p = meta("", 110);
        p.catalog_tokens = ["op.25"].map(String::from).into();
        assert!(!is_candidate(&s, &p));
        p.catalog_tokens.insert("op.10".into());
        assert!(is_candidate(&s, &p));
    }

    #[test]
    fn different_composer_rejected() {
        let s = meta("", 100);
        let p = PieceMeta::new("Franz Liszt", "", 100, Source::Other, false);
        assert!(select_candidates(&[s], &[p]).is_empty());
    }
}
