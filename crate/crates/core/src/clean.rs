//! Note-level cleaning: canonical ordering, duplicate removal, same-pitch
//! overlap truncation, short-note filtering and runaway-note repair.
//!
//! Every operation is a pure function returning a new sequence plus a count
//! of what it changed; applying any of them twice changes nothing further.

use std::collections::HashMap;

use crate::note::{duration_until, refresh_note_beats, Note, NoteSequence};

/// Notes shorter than this are dropped by [`filter_short_notes`] by default.
pub const DEFAULT_MIN_DURATION: f64 = 0.005;

/// Runaway notes must last at least this long.
pub const RUNAWAY_MIN_SECONDS: f64 = 10.0;
/// ... and exceed this multiple of the 95th-percentile duration.
pub const RUNAWAY_PERCENTILE_FACTOR: f64 = 4.0;
/// Neighbourhood size for the replacement duration.
pub const RUNAWAY_NEIGHBOURS: usize = 20;
/// Sequences shorter than this are not repaired.
pub const RUNAWAY_MIN_NOTES: usize = 5;

const END_TOLERANCE: f64 = 1e-6;

/// Sorts notes by (onset, pitch, duration); full ties keep their input order.
pub fn canonical_sort(seq: &NoteSequence) -> NoteSequence {
    let mut notes = seq.notes.clone();
    notes.sort_by(Note::canonical_cmp);
    seq.with_notes(notes)
}

/// Keeps one note per exact (pitch, onset, duration) key.
///
/// The loudest instance survives; among equally loud instances the first
/// in order wins.
pub fn remove_duplicates(seq: &NoteSequence) -> (NoteSequence, usize) {
    let mut best: HashMap<(u8, u64, u64), usize> = HashMap::new();
    for (i, n) in seq.notes.iter().enumerate() {
        let key = (n.pitch, n.onset.to_bits(), n.duration.to_bits());
        best.entry(key)
            .and_modify(|j| {
                if n.velocity > seq.notes[*j].velocity {
                    *j = i;
                }
            })
            .or_insert(i);
    }
    let mut keep = vec![false; seq.notes.len()];
    for &i in best.values() {
        keep[i] = true;
    }
    let notes: Vec<Note> = seq.notes.iter().zip(&keep).filter(|(_, k)| **k).map(|(n, _)| *n).collect();
    let removed = seq.notes.len() - notes.len();
    (seq.with_notes(notes), removed)
}

/// Shortens the earlier of two same-pitch notes so it ends where the later
/// one starts. Expects canonical order.
pub fn truncate_overlaps(seq: &NoteSequence) -> (NoteSequence, usize) {
    let mut notes = seq.notes.clone();
    let mut last_of_pitch: [Option<usize>; 128] = [None; 128];
    let mut truncated = 0;
    for i in 0..notes.len() {
        let p = usize::from(notes[i].pitch & 0x7F);
        if let Some(j) = last_of_pitch[p] {
            let onset = notes[i].onset;
            if onset < notes[j].offset() {
                notes[j].duration = duration_until(notes[j].onset, onset);
                refresh_note_beats(&seq.tempo, &mut notes[j]);
                truncated += 1;
            }
        }
        last_of_pitch[p] = Some(i);
    }
    (seq.with_notes(notes), truncated)
}

/// Drops notes shorter than `min_duration` seconds; the boundary is kept.
pub fn filter_short_notes(seq: &NoteSequence, min_duration: f64) -> (NoteSequence, usize) {
    let notes: Vec<Note> = seq.notes.iter().copied().filter(|n| n.duration >= min_duration).collect();
    let removed = seq.notes.len() - notes.len();
    (seq.with_notes(notes), removed)
}

/// Result of [`repair_runaway_notes`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunawayRepair {
    pub repaired: usize,
    /// Set when the sequence was too short to estimate duration statistics.
    pub skipped: Option<String>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Nearest-rank percentile.
fn percentile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let rank = ((q * values.len() as f64).ceil() as usize).clamp(1, values.len());
    values[rank - 1]
}

/// Repairs notes that were left sounding until the end of the file.
///
/// A note is a runaway when its offset coincides with the sequence end and
/// its duration exceeds `max(10 s, 4 × p95)`, where p95 is taken over notes
/// that do not end at the sequence end. Its new duration is the smaller of
/// the gap to the next same-pitch onset and the median duration of the 20
/// notes nearest by onset. Expects canonical order.
pub fn repair_runaway_notes(seq: &NoteSequence) -> (NoteSequence, RunawayRepair) {
    if seq.notes.len() < RUNAWAY_MIN_NOTES {
        let reason = format!("{} notes; at least {RUNAWAY_MIN_NOTES} needed for duration statistics", seq.notes.len());
        return (seq.clone(), RunawayRepair { repaired: 0, skipped: Some(reason) });
    }
    let end = seq.end_time();
    let at_end: Vec<bool> = seq.notes.iter().map(|n| (n.offset() - end).abs() <= END_TOLERANCE).collect();
    let mut regular: Vec<f64> = seq.notes.iter().zip(&at_end).filter(|(_, e)| !**e).map(|(n, _)| n.duration).collect();
    if regular.is_empty() {
        return (seq.clone(), RunawayRepair::default());
    }
    let threshold = RUNAWAY_MIN_SECONDS.max(RUNAWAY_PERCENTILE_FACTOR * percentile(&mut regular, 0.95));
    let runaway: Vec<bool> = seq.notes.iter().zip(&at_end).map(|(n, e)| *e && n.duration > threshold).collect();
    if !runaway.contains(&true) {
        return (seq.clone(), RunawayRepair::default());
    }

    let mut notes = seq.notes.clone();
    let mut repaired = 0;
    for i in (0..notes.len()).filter(|&i| runaway[i]) {
        let onset = seq.notes[i].onset;
        let mut neighbours: Vec<(f64, f64)> = seq
            .notes
            .iter()
            .enumerate()
            .filter(|(j, _)| !runaway[*j])
            .map(|(_, n)| ((n.onset - onset).abs(), n.duration))
            .collect();
        neighbours.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut local: Vec<f64> = neighbours.iter().take(RUNAWAY_NEIGHBOURS).map(|x| x.1).collect();
        let mut duration = median(&mut local);
        if let Some(next) = seq.notes[i + 1..].iter().find(|n| n.pitch == seq.notes[i].pitch && n.onset > onset) {
            duration = duration.min(duration_until(onset, next.onset));
        }
        notes[i].duration = duration;
        notes[i].flags.repaired = true;
        refresh_note_beats(&seq.tempo, &mut notes[i]);
        repaired += 1;
    }
    (seq.with_notes(notes), RunawayRepair { repaired, skipped: None })
}

/// Counts from one run of the full cleaning chain.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CleanCounts {
    pub duplicates_removed: usize,
    pub overlaps_truncated: usize,
    pub short_removed: usize,
    pub runaways_repaired: usize,
    pub warning: Option<String>,
}

impl CleanCounts {
    pub fn total_changes(&self) -> usize {
        self.duplicates_removed + self.overlaps_truncated + self.short_removed + self.runaways_repaired
    }
}

/// canonical_sort → remove_duplicates → truncate_overlaps →
/// filter_short_notes → repair_runaway_notes.
///
/// The repair is repeated while it finds anything: cutting the last note
/// can expose an earlier long note as the new ending one.
pub fn clean_sequence(seq: &NoteSequence, min_duration: f64) -> (NoteSequence, CleanCounts) {
    let sorted = canonical_sort(seq);
    let (deduped, duplicates_removed) = remove_duplicates(&sorted);
    let (truncated, overlaps_truncated) = truncate_overlaps(&deduped);
    let (mut out, short_removed) = filter_short_notes(&truncated, min_duration);
    let mut counts = CleanCounts { duplicates_removed, overlaps_truncated, short_removed, ..CleanCounts::default() };
    for _ in 0..=out.notes.len() {
        let (repaired, repair) = repair_runaway_notes(&out);
        out = repaired;
        counts.runaways_repaired += repair.repaired;
        counts.warning = repair.skipped;
        if repair.repaired == 0 {
            break;
        }
    }
    (out, counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::note::SequenceKind;
    use crate::tempo::TempoMap;

    fn seq(notes: Vec<Note>) -> NoteSequence {
        NoteSequence::from_notes(SequenceKind::Performance, TempoMap::default(), notes)
    }

    #[test]
    fn sort_swaps_out_of_order_pair() {
        let s = seq(vec![Note::new(64, 1.0, 0.5, 60), Note::new(60, 0.5, 0.5, 60)]);
        let sorted = canonical_sort(&s);
        assert_eq!(sorted.notes[0].pitch, 60);
        assert_eq!(canonical_sort(&sorted), sorted);
    }

    #[test]
    fn duplicates_keep_one_loudest() {
        let s = seq(vec![Note::new(60, 0.0, 1.0, 50), Note::new(60, 0.0, 1.0, 90), Note::new(60, 0.0, 1.0, 70)]);
        let (out, removed) = remove_duplicates(&s);
        assert_eq!(removed, 2);
        assert_eq!(out.notes.len(), 1);
        assert_eq!(out.notes[0].velocity, 90);

        let (same, none) = remove_duplicates(&out);
        assert_eq!(none, 0);
        assert_eq!(same, out);
    }

    #[test]
    fn overlap_truncates_earlier_note() {
        let s = seq(vec![Note::new(60, 0.0, 2.0, 60), Note::new(60, 1.0, 1.0, 60), Note::new(62, 0.5, 3.0, 60)]);
        let (out, n) = truncate_overlaps(&s);
        assert_eq!(n, 1);
        assert_eq!(out.notes[0].duration, 1.0);
        assert_eq!(out.notes[2].duration, 3.0);
        assert!((out.notes[0].duration_beats - 2.0).abs() < 1e-12);
    }

    #[test]
    fn short_note_boundary_is_inclusive() {
        let s = seq(vec![Note::new(60, 0.0, 0.004, 60), Note::new(61, 0.0, 0.005, 60), Note::new(62, 0.0, 0.5, 60)]);
        let (out, removed) = filter_short_notes(&s, DEFAULT_MIN_DURATION);
        assert_eq!(removed, 1);
        assert_eq!(out.notes.iter().map(|n| n.pitch).collect::<Vec<_>>(), vec![61, 62]);
    }

    #[test]
    fn runaway_repair_skips_tiny_sequences() {
        let s = seq(vec![Note::new(60, 0.0, 100.0, 60)]);
        let (out, rep) = repair_runaway_notes(&s);
        assert_eq!(rep.repaired, 0);
        assert!(rep.skipped.is_some());
        assert_eq!(out, s);
    }

    #[test]
    fn normal_sequence_has_no_runaways() {
        let notes = (0..40).map(|i| Note::new(60 + (i % 12) as u8, i as f64 * 0.5, if i == 7 { 2.0 } else { 0.4 }, 64)).collect();
        let (_, rep) = repair_runaway_notes(&seq(notes));
        assert_eq!(rep.repaired, 0);
        assert!(rep.skipped.is_none());
    }

    #[test]
    fn runaway_is_cut_to_local_median() {
        // notes every 0.5 s for 600 s with durations 0.35/0.4/0.45 cycling;
        // one note at 1 s runs until the very end
        let mut notes: Vec<Note> = (0..1199)
            .map(|i| {
                let d = [0.35, 0.4, 0.45][i % 3];
                Note::new(48 + (i % 24) as u8, i as f64 * 0.5, d, 64)
            })
            .collect();
        let last_end = notes.last().unwrap().offset();
        notes.push(Note::new(100, 1.0, 600.0 - 1.0, 64));
        assert!(600.0 > last_end);
        let s = canonical_sort(&seq(notes));
        let (out, rep) = repair_runaway_notes(&s);
        assert_eq!(rep.repaired, 1);
        let fixed = out.notes.iter().find(|n| n.pitch == 100).unwrap();
        assert!(fixed.flags.repaired);
        // 20 nearest by onset to t=1.0: onsets 0..=10 s minus ties, durations
        // cycle evenly so the median is 0.4
        assert!((fixed.duration - 0.4).abs() < 1e-12, "{}", fixed.duration);
        let (_, again) = repair_runaway_notes(&out);
        assert_eq!(again.repaired, 0);
    }
}
