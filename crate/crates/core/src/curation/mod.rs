//! Near-duplicate detection, heuristic quality labels and synthetic
//! degradations.

mod corrupt;
mod dedup;
mod label;
mod similarity;

use thiserror::Error;

pub use corrupt::{corrupt, corrupt_traced, scoreify, CorruptionLevel, CorruptionParams, CorruptionTrace, SCOREIFY_JITTER};
pub use dedup::{
    cluster_duplicates, clusters_from_edges, pairwise_similarities, select_lead, source_priority, LeadCandidate,
    DEFAULT_SIM_THRESHOLD,
};
pub use label::{heuristic_label, star_filter, Label, LabelBasis, Origin, QualityLabel, STAR_MIN_RECALL};
pub use similarity::{similarity, Direction, SimilarityScore, DEFAULT_TOLERANCE};

#[derive(Debug, Error, PartialEq)]
pub enum CurationError {
    #[error("sequence has no notes")]
    EmptySequence,
}
