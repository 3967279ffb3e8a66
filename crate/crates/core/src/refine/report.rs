use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::holes::Side;

/// A removed alignment hole.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoleSpan {
    pub side: Side,
    pub start: usize,
    pub end: usize,
}

impl HoleSpan {
    pub fn new(side: Side, r: &Range<usize>) -> Self {
        Self { side, start: r.start, end: r.end }
    }
}

/// What refinement did to one score/performance pair.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RefineReport {
    pub recall_raw: f64,
    pub recall_after_h: f64,
    pub recall_after_o: f64,
    /// Recall of real (non-interpolated) notes at the end.
    pub recall_final: f64,
    /// Matches removed inside holes.
    pub holes_removed: usize,
    pub hole_spans: Vec<HoleSpan>,
    pub intra_outliers_removed: usize,
    pub close_onsets_merged: usize,
    pub jumps_adjusted: usize,
    pub jumps_dropped: usize,
    pub overtaken_links_dropped: usize,
    pub jump_shift_total: f64,
    pub notes_stripped: usize,
    pub notes_interpolated: usize,
    /// Global shift applied so the performance starts with the score.
    pub start_shift: f64,
    pub synchronized: bool,
}

impl RefineReport {
    /// Number of edits made (zero for an already refined pair).
    pub fn modifications(&self) -> usize {
        self.holes_removed
            + self.intra_outliers_removed
            + self.close_onsets_merged
            + self.jumps_adjusted
            + self.jumps_dropped
            + self.overtaken_links_dropped
            + self.notes_stripped
            + self.notes_interpolated
            + usize::from(self.start_shift != 0.0)
            + usize::from(self.synchronized)
    }
}
