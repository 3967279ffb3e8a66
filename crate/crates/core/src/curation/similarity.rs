use serde::{Deserialize, Serialize};

use super::CurationError;
use crate::note::NoteSequence;

/// Onset tolerance for two notes to count as the same event, seconds.
pub const DEFAULT_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Notes of the first sequence found in the second.
    Forward,
    /// Notes of the second sequence found in the first.
    Backward,
}

/// Result of [`similarity`]: the larger of the two directional scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub value: f64,
    pub direction: Direction,
    pub close_pairs: usize,
    pub total_notes: usize,
    pub forward: f64,
    pub backward: f64,
}

/// Per-pitch sorted onsets, shifted so the first note is at zero.
fn index(seq: &NoteSequence) -> Vec<Vec<f64>> {
    let start = seq.notes.iter().map(|n| n.onset).fold(f64::INFINITY, f64::min);
    let mut by_pitch = vec![Vec::new(); 128];
    for n in &seq.notes {
        by_pitch[usize::from(n.pitch & 0x7F)].push(n.onset - start);
    }
    for v in &mut by_pitch {
        v.sort_by(f64::total_cmp);
    }
    by_pitch
}

/// Notes of `from` with a same-pitch note of `to` within `tol` seconds.
fn close_count(from: &[Vec<f64>], to: &[Vec<f64>], tol: f64) -> usize {
    let mut close = 0;
    for (pitch, onsets) in from.iter().enumerate() {
        let target = &to[pitch];
        if target.is_empty() {
            continue;
        }
        for &t in onsets {
            let k = target.partition_point(|&x| x < t);
            let mut best = f64::INFINITY;
            if k < target.len() {
                best = best.min(target[k] - t);
            }
            if k > 0 {
                best = best.min(t - target[k - 1]);
            }
            if best <= tol {
                close += 1;
            }
        }
    }
    close
}

/// Share of notes of one sequence whose onset is within `tol` of a
/// same-pitch note of the other, both sequences starting at zero. Computed
/// in both directions; the larger one is returned.
pub fn similarity(x: &NoteSequence, z: &NoteSequence, tol: f64) -> Result<SimilarityScore, CurationError> {
    if x.is_empty() || z.is_empty() {
        return Err(CurationError::EmptySequence);
    }
    let (ix, iz) = (index(x), index(z));
    let fwd = close_count(&ix, &iz, tol);
    let bwd = close_count(&iz, &ix, tol);
    let forward = fwd as f64 / x.len() as f64;
    let backward = bwd as f64 / z.len() as f64;
    Ok(if forward >= backward {
        SimilarityScore { value: forward, direction: Direction::Forward, close_pairs: fwd, total_notes: x.len(), forward, backward }
    } else {
        SimilarityScore { value: backward, direction: Direction::Backward, close_pairs: bwd, total_notes: z.len(), forward, backward }
    })
}
