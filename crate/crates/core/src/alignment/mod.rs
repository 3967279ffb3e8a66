//! Score↔performance note alignments and their quality ratios.
//!
//! An [`Alignment`] links notes of one score (by index into its canonically
//! sorted note list) to notes of one performance. Links are kept in a fixed
//! order: matches and deletions by ascending score index, followed by
//! insertions by ascending performance index.

mod container;
mod metrics;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use container::{
    read_alignment, read_alignment_table, write_alignment, write_csv, AlignmentRow, AlignmentTable, CSV_COLUMNS,
    FORMAT_MAGIC, FORMAT_VERSION,
};
pub use metrics::{adjusted_ratio, note_ratio, precision, recall};

/// Index value used on disk for an absent note.
pub const SENTINEL: i64 = -1;

/// Fixed keys of [`Alignment::stage_recalls`].
pub const STAGE_KEYS: [&str; 4] = ["raw", "hole", "onset", "interpolated"];

/// One alignment link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Link {
    Match { score: usize, perf: usize },
    /// Score note without a performed counterpart.
    Deletion { score: usize },
    /// Performed note without a score counterpart.
    Insertion { perf: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkKind {
    Match,
    Deletion,
    Insertion,
}

impl Link {
    pub fn kind(&self) -> LinkKind {
        match self {
            Link::Match { .. } => LinkKind::Match,
            Link::Deletion { .. } => LinkKind::Deletion,
            Link::Insertion { .. } => LinkKind::Insertion,
        }
    }

    pub fn score(&self) -> Option<usize> {
        match *self {
            Link::Match { score, .. } | Link::Deletion { score } => Some(score),
            Link::Insertion { .. } => None,
        }
    }

    pub fn perf(&self) -> Option<usize> {
        match *self {
            Link::Match { perf, .. } | Link::Insertion { perf } => Some(perf),
            Link::Deletion { .. } => None,
        }
    }

    pub fn is_match(&self) -> bool {
        matches!(self, Link::Match { .. })
    }

    /// Sentinel encoding: (score index or -1, performance index or -1).
    pub fn to_sentinel(&self) -> (i64, i64) {
        let enc = |x: Option<usize>| x.map_or(SENTINEL, |v| v as i64);
        (enc(self.score()), enc(self.perf()))
    }

    pub fn from_sentinel(score: i64, perf: i64) -> Option<Link> {
        match (score, perf) {
            (s, p) if s >= 0 && p >= 0 => Some(Link::Match { score: s as usize, perf: p as usize }),
            (s, SENTINEL) if s >= 0 => Some(Link::Deletion { score: s as usize }),
            (SENTINEL, p) if p >= 0 => Some(Link::Insertion { perf: p as usize }),
            _ => None,
        }
    }

    fn order_key(&self) -> (u8, usize, usize) {
        match *self {
            Link::Match { score, perf } => (0, score, perf),
            Link::Deletion { score } => (0, score, 0),
            Link::Insertion { perf } => (1, perf, 0),
        }
    }
}

/// A problem found by [`Alignment::new`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkIssue {
    ScoreOutOfBounds { link: usize, index: usize },
    PerfOutOfBounds { link: usize, index: usize },
    DuplicateScore { link: usize, index: usize },
    DuplicatePerf { link: usize, index: usize },
}

impl fmt::Display for LinkIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkIssue::ScoreOutOfBounds { link, index } => write!(f, "link {link}: score index {index} out of bounds"),
            LinkIssue::PerfOutOfBounds { link, index } => write!(f, "link {link}: performance index {index} out of bounds"),
            LinkIssue::DuplicateScore { link, index } => write!(f, "link {link}: score index {index} used twice"),
            LinkIssue::DuplicatePerf { link, index } => write!(f, "link {link}: performance index {index} used twice"),
        }
    }
}

fn join_issues(issues: &[LinkIssue]) -> String {
    let shown: Vec<String> = issues.iter().take(10).map(ToString::to_string).collect();
    let more = if issues.len() > 10 { format!(" (+{} more)", issues.len() - 10) } else { String::new() };
    format!("{}{more}", shown.join("; "))
}

#[derive(Debug, Error)]
pub enum AlignmentError {
    #[error("ratio undefined: {0} is zero")]
    UndefinedRatio(&'static str),
    #[error("invalid alignment: {}", join_issues(.0))]
    Invalid(Vec<LinkIssue>),
    #[error("unsupported alignment file version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed alignment file: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Validated alignment between `n_score` score notes and `n_perf`
/// performance notes.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    links: Vec<Link>,
    n_score: usize,
    n_perf: usize,
    n_matched: usize,
    /// Recall recorded after each refinement stage, keyed by [`STAGE_KEYS`].
    pub stage_recalls: BTreeMap<String, f64>,
}

impl Alignment {
    /// Validates and canonically orders the links. Indices must be in range
    /// and each score / performance index may appear in at most one link.
    pub fn new(mut links: Vec<Link>, n_score: usize, n_perf: usize) -> Result<Self, AlignmentError> {
        let mut issues = Vec::new();
        let mut seen_s = vec![false; n_score];
        let mut seen_p = vec![false; n_perf];
        for (i, l) in links.iter().enumerate() {
            if let Some(s) = l.score() {
                match seen_s.get_mut(s) {
                    None => issues.push(LinkIssue::ScoreOutOfBounds { link: i, index: s }),
                    Some(true) => issues.push(LinkIssue::DuplicateScore { link: i, index: s }),
                    Some(seen) => *seen = true,
                }
            }
            if let Some(p) = l.perf() {
                match seen_p.get_mut(p) {
                    None => issues.push(LinkIssue::PerfOutOfBounds { link: i, index: p }),
                    Some(true) => issues.push(LinkIssue::DuplicatePerf { link: i, index: p }),
                    Some(seen) => *seen = true,
                }
            }
        }
        if !issues.is_empty() {
            return Err(AlignmentError::Invalid(issues));
        }
        links.sort_by_key(Link::order_key);
        let n_matched = links.iter().filter(|l| l.is_match()).count();
        Ok(Self { links, n_score, n_perf, n_matched, stage_recalls: BTreeMap::new() })
    }

    /// Builds a complete alignment from matched pairs: every score and
    /// performance index not mentioned becomes a deletion or insertion.
    pub fn from_matches(
        pairs: impl IntoIterator<Item = (usize, usize)>,
        n_score: usize,
        n_perf: usize,
    ) -> Result<Self, AlignmentError> {
        let mut links: Vec<Link> = pairs.into_iter().map(|(score, perf)| Link::Match { score, perf }).collect();
        let mut used_s = vec![false; n_score];
        let mut used_p = vec![false; n_perf];
        for l in &links {
            if let Some(s) = l.score().filter(|&s| s < n_score) {
                used_s[s] = true;
            }
            if let Some(p) = l.perf().filter(|&p| p < n_perf) {
                used_p[p] = true;
            }
        }
        links.extend(used_s.iter().enumerate().filter(|(_, u)| !**u).map(|(score, _)| Link::Deletion { score }));
        links.extend(used_p.iter().enumerate().filter(|(_, u)| !**u).map(|(perf, _)| Link::Insertion { perf }));
        Self::new(links, n_score, n_perf)
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn n_score(&self) -> usize {
        self.n_score
    }

    pub fn n_perf(&self) -> usize {
        self.n_perf
    }

    pub fn n_matched(&self) -> usize {
        self.n_matched
    }

    pub fn matches(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.links.iter().filter_map(|l| match *l {
            Link::Match { score, perf } => Some((score, perf)),
            _ => None,
        })
    }

    pub fn count(&self, kind: LinkKind) -> usize {
        self.links.iter().filter(|l| l.kind() == kind).count()
    }

    /// Performance index matched to each score note.
    pub fn score_to_perf(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.n_score];
        for (s, p) in self.matches() {
            out[s] = Some(p);
        }
        out
    }

    /// Score index matched to each performance note.
    pub fn perf_to_score(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.n_perf];
        for (s, p) in self.matches() {
            out[p] = Some(s);
        }
        out
    }
}
