//! Alignment refinement: hole removal (H), onset cleaning (O), note
//! interpolation (I) and beat synchronization (S).
//!
//! Stages only ever remove links or add synthetic notes for unmatched score
//! notes; links are never re-matched.

mod config;
mod holes;
mod interpolate;
mod onsets;
mod report;
mod strip;
mod sync;
mod timing;

use thiserror::Error;

pub use config::{ConfigError, JumpPolicy, RefineConfig, Stage};
pub use holes::{detect_holes, hole_ranges, remove_hole_links, Side};
pub use interpolate::interpolate_notes;
pub use onsets::{clean_onsets, intra_outliers, OnsetCleaning};
pub use report::{HoleSpan, RefineReport};
pub use strip::strip_unaligned;
pub use sync::{synchronize_beats, SYNC_TOLERANCE};
pub use timing::{implied_bpm, local_tempo, onset_pairs, OnsetPair};

use crate::alignment::Alignment;
use crate::note::{Marker, NoteSequence, INTERPOLATION_MARKER};
use timing::{map_times, recall_of};

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("alignment covers {n_score}x{n_perf} notes but the sequences have {score}x{perf}")]
    Mismatch { n_score: usize, n_perf: usize, score: usize, perf: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot interpolate from {anchors} matched onset(s); at least 2 are needed")]
    InterpolationImpossible { anchors: usize },
    #[error("beat synchronization failed: {0}")]
    Sync(String),
    #[error("recall {recall:.3} after onset cleaning is below the floor {floor}")]
    BelowRecallFloor { recall: f64, floor: f64, report: Box<RefineReport> },
}

/// Output of [`refine`].
#[derive(Debug, Clone)]
pub struct Refined {
    pub perf: NoteSequence,
    pub alignment: Alignment,
    pub report: RefineReport,
}

// Shifts smaller than this are float noise from an earlier run.
const MIN_START_SHIFT: f64 = 1e-9;

/// Runs the enabled stages in order H, O, I, S, then moves the performance
/// so its first note starts with the score's (when `initial_shift` is set).
pub fn refine(score: &NoteSequence, perf: &NoteSequence, a: &Alignment, cfg: &RefineConfig) -> Result<Refined, RefineError> {
    cfg.validate()?;
    if a.n_score() != score.len() || a.n_perf() != perf.len() {
        return Err(RefineError::Mismatch { n_score: a.n_score(), n_perf: a.n_perf(), score: score.len(), perf: perf.len() });
    }
    let mut perf = perf.clone();
    let mut s2p = a.score_to_perf();
    let mut report = RefineReport { recall_raw: recall_of(&s2p), ..RefineReport::default() };

    if cfg.has_stage(Stage::Holes) {
        let current = Alignment::from_matches(pairs_of(&s2p), score.len(), perf.len()).expect("valid");
        let sh = detect_holes(&current, Side::Score, cfg);
        let ph = detect_holes(&current, Side::Performance, cfg);
        let (after, removed) = remove_hole_links(&current, &sh, &ph);
        report.holes_removed = removed;
        report.hole_spans = sh.iter().map(|r| HoleSpan::new(Side::Score, r)).chain(ph.iter().map(|r| HoleSpan::new(Side::Performance, r))).collect();
        s2p = after.score_to_perf();
    }
    report.recall_after_h = recall_of(&s2p);

    if cfg.has_stage(Stage::Onsets) {
        let o = clean_onsets(score, &mut perf, &mut s2p, cfg);
        report.intra_outliers_removed = o.intra_outliers_removed;
        report.close_onsets_merged = o.close_onsets_merged;
        report.jumps_adjusted = o.jumps_adjusted;
        report.jumps_dropped = o.jumps_dropped;
        report.overtaken_links_dropped = o.overtaken_links_dropped;
        report.jump_shift_total = o.jump_shift_total;
    }
    report.recall_after_o = recall_of(&s2p);
    if let Some(floor) = cfg.recall_floor {
        if report.recall_after_o < floor {
            report.recall_final = report.recall_after_o;
            return Err(RefineError::BelowRecallFloor { recall: report.recall_after_o, floor, report: Box::new(report) });
        }
    }

    if cfg.has_stage(Stage::Interpolate) {
        report.notes_stripped = strip_unaligned(&mut perf, &mut s2p);
        report.notes_interpolated = interpolate_notes(score, &mut perf, &mut s2p, cfg)?;
    }
    if cfg.initial_shift && !perf.is_empty() && !score.is_empty() {
        let first_perf = perf.notes.iter().map(|n| n.onset).fold(f64::INFINITY, f64::min);
        let first_score = score.notes.iter().map(|n| n.onset).fold(f64::INFINITY, f64::min);
        let shift = first_score - first_perf;
        if shift.abs() >= MIN_START_SHIFT {
            map_times(&mut perf, |t| t + shift);
            report.start_shift = shift;
        }
    }
    refresh_interp_markers(&mut perf);
    if cfg.has_stage(Stage::Sync) {
        perf = synchronize_beats(score, &perf, &mut s2p, cfg.sync_ticks_per_quarter)?;
        report.synchronized = true;
    }

    let real = s2p.iter().filter(|p| p.is_some_and(|p| !perf.notes[p].flags.interpolated)).count();
    report.recall_final = if score.is_empty() { 0.0 } else { real as f64 / score.len() as f64 };
    let mut alignment = Alignment::from_matches(pairs_of(&s2p), score.len(), perf.len()).expect("refinement keeps links unique");
    for (key, value) in [
        ("raw", report.recall_raw),
        ("hole", report.recall_after_h),
        ("onset", report.recall_after_o),
        ("interpolated", report.recall_final),
    ] {
        alignment.stage_recalls.insert(key.to_string(), value);
    }
    Ok(Refined { perf, alignment, report })
}

fn pairs_of(s2p: &[Option<usize>]) -> Vec<(usize, usize)> {
    s2p.iter().enumerate().filter_map(|(s, p)| p.map(|p| (s, p))).collect()
}

/// Replaces interpolation markers with one per interpolated note.
fn refresh_interp_markers(perf: &mut NoteSequence) {
    perf.markers.retain(|m| m.text != INTERPOLATION_MARKER);
    let tempo = &perf.tempo;
    let new: Vec<Marker> = perf
        .notes
        .iter()
        .filter(|n| n.flags.interpolated)
        .map(|n| Marker { tick: tempo.seconds_to_tick(n.onset), text: INTERPOLATION_MARKER.to_string() })
        .collect();
    perf.markers.extend(new);
    perf.markers.sort_by_key(|m| m.tick);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::note::{Note, SequenceKind};
    use crate::tempo::TempoMap;

    fn pair(n: usize) -> (NoteSequence, NoteSequence) {
        let notes: Vec<Note> = (0..n)
            .map(|i| {
                let mut x = Note::new(60 + (i % 12) as u8, 0.0, 0.0, 64);
                x.onset_beats = i as f64 * 0.5;
                x.duration_beats = 0.5;
                x
            })
            .collect();
        let score = NoteSequence::score_from_beats(TempoMap::default(), notes);
        let perf = NoteSequence::from_notes(SequenceKind::Performance, TempoMap::default(), score.notes.clone());
        (score, perf)
    }

    #[test]
    fn perfect_alignment_is_untouched() {
        let (score, perf) = pair(64);
        let a = Alignment::from_matches((0..64).map(|i| (i, i)), 64, 64).unwrap();
        let r = refine(&score, &perf, &a, &RefineConfig::default()).unwrap();
        assert_eq!(r.report.modifications(), 0);
        assert_eq!(r.report.recall_raw, 1.0);
        assert_eq!(r.report.recall_after_o, 1.0);
        assert_eq!(r.perf, perf);
        assert_eq!(r.alignment.links(), a.links());
    }

    #[test]
    fn floor_interrupts() {
        let (score, perf) = pair(20);
        let a = Alignment::from_matches((0..5).map(|i| (i, i)), 20, 20).unwrap();
        let cfg = RefineConfig { recall_floor: Some(0.5), ..RefineConfig::default() };
        match refine(&score, &perf, &a, &cfg) {
            Err(RefineError::BelowRecallFloor { recall, report, .. }) => {
                assert_eq!(recall, 0.25);
                assert_eq!(report.recall_raw, 0.25);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_notes_are_filled_and_marked() {
        let (score, mut perf) = pair(40);
        perf.notes.remove(7);
        perf.notes.remove(20);
        let pairs: Vec<(usize, usize)> = (0..40)
            .filter(|&i| i != 7 && i != 21)
            .map(|i| (i, if i < 7 { i } else if i < 21 { i - 1 } else { i - 2 }))
            .collect();
        let a = Alignment::from_matches(pairs, 40, 38).unwrap();
        let r = refine(&score, &perf, &a, &RefineConfig::default()).unwrap();
        assert_eq!(r.report.notes_interpolated, 2);
        assert_eq!(r.alignment.n_matched(), 40);
        assert_eq!(r.perf.markers.iter().filter(|m| m.text == INTERPOLATION_MARKER).count(), 2);
        for (s, p) in r.alignment.matches() {
            assert!((r.perf.notes[p].onset - score.notes[s].onset).abs() < 1e-9);
        }
        let again = refine(&score, &r.perf, &r.alignment, &RefineConfig::default()).unwrap();
        assert_eq!(again.report.modifications(), 0);
        assert_eq!(again.perf, r.perf);
    }
}
