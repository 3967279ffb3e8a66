use serde::{Deserialize, Serialize};

use super::notes::{match_notes_with, MatchConfig, MatchError};
use crate::alignment::{recall, Alignment};
use crate::note::NoteSequence;

/// Recall that must be exceeded (strictly) for a definitive match.
pub const DEFINITIVE_RECALL: f64 = 0.7;

/// Which score rendering a performance was matched against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreVariant {
    /// All repeats unfolded.
    Maximal,
    /// Each repeat played once.
    Minimal,
}

#[derive(Debug, Clone)]
pub struct Verification {
    pub alignment: Alignment,
    pub variant: ScoreVariant,
    pub definitive: bool,
}

/// Matches against the maximal score; if recall does not exceed
/// `cfg.definitive_recall` (0.7 by default) and a
/// minimal score exists, tries that one too. Without a definitive match the
/// alignment with higher recall is returned (the maximal one on ties).
pub fn verify_match(
    score_max: &NoteSequence,
    score_min: Option<&NoteSequence>,
    perf: &NoteSequence,
    cfg: &MatchConfig,
) -> Result<Verification, MatchError> {
    let a_max = match_notes_with(score_max, perf, cfg)?;
    let r_max = recall(&a_max).unwrap_or(0.0);
    if r_max > cfg.definitive_recall {
        return Ok(Verification { alignment: a_max, variant: ScoreVariant::Maximal, definitive: true });
    }
    if let Some(score_min) = score_min {
        let a_min = match_notes_with(score_min, perf, cfg)?;
        let r_min = recall(&a_min).unwrap_or(0.0);
        if r_min > cfg.definitive_recall {
            return Ok(Verification { alignment: a_min, variant: ScoreVariant::Minimal, definitive: true });
        }
        if r_min > r_max {
            return Ok(Verification { alignment: a_min, variant: ScoreVariant::Minimal, definitive: false });
        }
    }
    Ok(Verification { alignment: a_max, variant: ScoreVariant::Maximal, definitive: false })
}
