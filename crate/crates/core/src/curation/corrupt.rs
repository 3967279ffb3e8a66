use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CurationError;
use crate::clean::DEFAULT_MIN_DURATION;
use crate::note::{Note, NoteSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorruptionLevel {
    LowQuality,
    Corrupted,
}

/// Intensities of one corruption level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionParams {
    /// Fraction of notes removed, drawn uniformly from this range.
    pub removal: (f64, f64),
    /// Largest onset and offset displacement, seconds.
    pub time_jitter: f64,
    /// Largest velocity displacement.
    pub velocity_jitter: u8,
    /// Largest number of inserted notes as a fraction of the input.
    pub max_insertion: f64,
}

impl CorruptionLevel {
    pub fn params(&self) -> CorruptionParams {
        match self {
            CorruptionLevel::LowQuality => {
                CorruptionParams { removal: (0.15, 0.25), time_jitter: 0.020, velocity_jitter: 5, max_insertion: 0.05 }
            }
            CorruptionLevel::Corrupted => {
                CorruptionParams { removal: (0.35, 0.50), time_jitter: 0.150, velocity_jitter: 20, max_insertion: 0.30 }
            }
        }
    }
}

/// Where each output note came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorruptionTrace {
    pub removed: usize,
    pub inserted: usize,
    /// Source index of each output note, `None` for insertions.
    pub source: Vec<Option<usize>>,
}

/// Seeded synthetic degradation: removal, timing and velocity jitter, and
/// random insertions. Output is in canonical order.
pub fn corrupt(seq: &NoteSequence, level: CorruptionLevel, seed: u64) -> Result<NoteSequence, CurationError> {
    corrupt_traced(seq, level, seed).map(|(s, _)| s)
}

fn removal_count(n: usize, (lo, hi): (f64, f64), rng: &mut ChaCha8Rng) -> usize {
    let min = (lo * n as f64).ceil() as usize;
    let max = (hi * n as f64).floor() as usize;
    let drawn = (rng.gen_range(lo..=hi) * n as f64).round() as usize;
    if min <= max {
        drawn.clamp(min, max)
    } else {
        drawn.min(n)
    }
}

pub fn corrupt_traced(seq: &NoteSequence, level: CorruptionLevel, seed: u64) -> Result<(NoteSequence, CorruptionTrace), CurationError> {
    if seq.is_empty() {
        return Err(CurationError::EmptySequence);
    }
    let p = level.params();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = seq.len();

    let removed = removal_count(n, p.removal, &mut rng);
    let mut keep = vec![true; n];
    for i in sample(&mut rng, n, removed).iter() {
        keep[i] = false;
    }

    let mut out: Vec<(Option<usize>, Note)> = Vec::with_capacity(n);
    for (i, src) in seq.notes.iter().enumerate().filter(|(i, _)| keep[*i]) {
        let mut note = *src;
        let onset = (src.onset + rng.gen_range(-p.time_jitter..=p.time_jitter)).max(0.0);
        let offset = (src.offset() + rng.gen_range(-p.time_jitter..=p.time_jitter)).max(onset + DEFAULT_MIN_DURATION);
        note.onset = onset;
        note.duration = offset - onset;
        let vj = i16::from(p.velocity_jitter);
        note.velocity = (i16::from(src.velocity) + rng.gen_range(-vj..=vj)).clamp(1, 127) as u8;
        out.push((Some(i), note));
    }

    let max_ins = (p.max_insertion * n as f64).floor() as usize;
    let inserted = rng.gen_range(0..=max_ins);
    let lo_pitch = seq.notes.iter().map(|n| n.pitch).min().unwrap();
    let hi_pitch = seq.notes.iter().map(|n| n.pitch).max().unwrap();
    let start = seq.notes.iter().map(|n| n.onset).fold(f64::INFINITY, f64::min);
    let end = seq.end_time().max(start);
    for _ in 0..inserted {
        let model = seq.notes[rng.gen_range(0..n)];
        let mut note = Note::new(rng.gen_range(lo_pitch..=hi_pitch), rng.gen_range(start..=end), model.duration, model.velocity);
        note.channel = model.channel;
        out.push((None, note));
    }

    out.sort_by(|a, b| a.1.canonical_cmp(&b.1));
    let mut result = seq.with_notes(out.iter().map(|x| x.1).collect());
    result.refresh_beats();
    let trace = CorruptionTrace { removed, inserted, source: out.iter().map(|x| x.0).collect() };
    Ok((result, trace))
}

/// Largest onset displacement applied by [`scoreify`], seconds.
pub const SCOREIFY_JITTER: f64 = 0.010;

/// Makes a sequence look like a transcribed deadpan rendering: one random
/// velocity for every note and up to 10 ms of onset jitter (durations kept).
pub fn scoreify(seq: &NoteSequence, seed: u64) -> NoteSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let velocity: u8 = rng.gen_range(30..=110);
    let mut notes: Vec<Note> = seq
        .notes
        .iter()
        .map(|n| {
            let mut m = *n;
            m.onset = (n.onset + rng.gen_range(-SCOREIFY_JITTER..=SCOREIFY_JITTER)).max(0.0);
            m.velocity = velocity;
            m
        })
        .collect();
    notes.sort_by(|a, b| a.canonical_cmp(b));
    let mut out = seq.with_notes(notes);
    out.refresh_beats();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::note::SequenceKind;
    use crate::tempo::TempoMap;

    fn seq(n: usize) -> NoteSequence {
        let notes = (0..n).map(|i| Note::new(40 + (i * 7 % 40) as u8, i as f64 * 0.1, 0.2, 64)).collect();
        NoteSequence::from_notes(SequenceKind::Performance, TempoMap::default(), notes)
    }

    #[test]
    fn low_quality_removal_window() {
        let (_, t) = corrupt_traced(&seq(1000), CorruptionLevel::LowQuality, 7).unwrap();
        assert!((150..=250).contains(&t.removed), "{}", t.removed);
        assert!(t.inserted <= 50);
    }

    #[test]
    fn seeded_output_is_reproducible() {
        let s = seq(200);
        assert_eq!(corrupt(&s, CorruptionLevel::Corrupted, 3).unwrap(), corrupt(&s, CorruptionLevel::Corrupted, 3).unwrap());
        assert_ne!(corrupt(&s, CorruptionLevel::Corrupted, 3).unwrap(), corrupt(&s, CorruptionLevel::Corrupted, 4).unwrap());
    }

    #[test]
    fn corrupted_onsets_stay_close() {
        let s = seq(300);
        let (out, t) = corrupt_traced(&s, CorruptionLevel::Corrupted, 11).unwrap();
        for (note, src) in out.notes.iter().zip(&t.source) {
            if let Some(i) = src {
                assert!((note.onset - s.notes[*i].onset).abs() <= 0.150 + 1e-12);
            }
        }
    }

    #[test]
    fn scoreify_is_flat() {
        let s = seq(100);
        let out = scoreify(&s, 5);
        let v = out.notes[0].velocity;
        assert!(out.notes.iter().all(|n| n.velocity == v));
        assert_eq!(out, scoreify(&s, 5));
    }

    #[test]
    fn empty_is_an_error() {
        assert!(corrupt(&seq(0), CorruptionLevel::LowQuality, 1).is_err());
    }
}
