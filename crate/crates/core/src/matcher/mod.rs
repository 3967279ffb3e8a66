//! Candidate selection and two-level note matching.

mod candidates;
mod cluster;
pub mod dtw;
mod notes;
mod verify;

pub use candidates::{
    is_candidate, is_candidate_within, normalize_composer, select_candidates, title_tokens, PieceMeta, Source, MAX_NOTE_RATIO,
    MIN_NOTE_RATIO,
};
pub use cluster::{cluster_onsets, jaccard_cost, multiset_intersection, OnsetCluster, PERF_EPSILON, SCORE_EPSILON};
pub use notes::{match_notes, match_notes_with, MatchConfig, MatchError};
pub use verify::{verify_match, ScoreVariant, Verification, DEFINITIVE_RECALL};
