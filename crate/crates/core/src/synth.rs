//! Synthetic scores and renderings with known ground truth, for tests,
//! benchmarks and calibration.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::clean::truncate_overlaps;
use crate::note::{Note, NoteSequence, SequenceKind};
use crate::tempo::TempoMap;

/// Shape of a random score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreShape {
    /// Largest chord size.
    pub max_chord: usize,
    /// Candidate inter-onset intervals, beats.
    pub iois: &'static [f64],
    /// Pitch range (inclusive).
    pub pitch_range: (u8, u8),
}

impl Default for ScoreShape {
    fn default() -> Self {
        Self { max_chord: 4, iois: &[0.25, 0.5, 0.5, 0.75, 1.0], pitch_range: (36, 96) }
    }
}

/// Random score of about `n_notes` notes (whole chords, so possibly a few
/// more) at 120 BPM, 480 ticks per quarter. Durations stay below 80% of
/// the gap to the next onset.
pub fn random_score(rng: &mut impl Rng, n_notes: usize, shape: &ScoreShape) -> NoteSequence {
    let (lo, hi) = shape.pitch_range;
    let pool: Vec<u8> = (lo..=hi).collect();
    let mut notes = Vec::with_capacity(n_notes + shape.max_chord);
    let mut beat = 0.0;
    while notes.len() < n_notes {
        let ioi = *shape.iois.choose(rng).unwrap();
        let size = rng.gen_range(1..=shape.max_chord);
        for &p in pool.choose_multiple(rng, size) {
            let mut n = Note::new(p, 0.0, 0.0, 64);
            n.onset_beats = beat;
            n.duration_beats = ioi * rng.gen_range(0.3..0.8);
            notes.push(n);
        }
        beat += ioi;
    }
    let mut score = NoteSequence::score_from_beats(TempoMap::default(), notes);
    score.notes.sort_by(|a, b| a.canonical_cmp(b));
    score
}

/// Monotone piecewise-linear beat→seconds map.
#[derive(Debug, Clone, PartialEq)]
pub struct Warp {
    /// (beat, seconds) knots, strictly increasing in both.
    pub knots: Vec<(f64, f64)>,
}

impl Warp {
    pub fn constant(seconds_per_beat: f64) -> Self {
        Self { knots: vec![(0.0, 0.0), (1.0, seconds_per_beat)] }
    }

    /// Tempo changing every 2–8 beats, uniformly within `bpm`.
    pub fn random(rng: &mut impl Rng, total_beats: f64, bpm: (f64, f64)) -> Self {
        let mut knots = vec![(0.0, 0.0)];
        let (mut b, mut t) = (0.0, 0.0);
        while b <= total_beats {
            let len = rng.gen_range(2.0..8.0);
            let tempo = rng.gen_range(bpm.0..=bpm.1);
            b += len;
            t += len * 60.0 / tempo;
            knots.push((b, t));
        }
        Self { knots }
    }

    pub fn seconds(&self, beat: f64) -> f64 {
        let k = self.knots.partition_point(|&(b, _)| b <= beat).clamp(1, self.knots.len() - 1);
        let (b0, t0) = self.knots[k - 1];
        let (b1, t1) = self.knots[k];
        t0 + (beat - b0) * (t1 - t0) / (b1 - b0)
    }
}

/// A performance rendered from a score, with the true correspondence.
#[derive(Debug, Clone)]
pub struct Rendering {
    pub perf: NoteSequence,
    /// Performance index of each score note.
    pub truth: Vec<usize>,
}

/// Renders a score through `warp` with uniform onset jitter of at most
/// `jitter` seconds. Velocities are drawn from `velocity` (inclusive).
pub fn render(score: &NoteSequence, warp: &Warp, jitter: f64, velocity: (u8, u8), rng: &mut impl Rng) -> Rendering {
    let mut notes: Vec<(usize, Note)> = score
        .notes
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let j = if jitter > 0.0 { rng.gen_range(-jitter..=jitter) } else { 0.0 };
            let on = (warp.seconds(s.onset_beats) + j).max(0.0);
            let off = warp.seconds(s.offset_beats());
            let mut n = Note::new(s.pitch, on, (off - on).max(0.02), rng.gen_range(velocity.0..=velocity.1));
            n.channel = s.channel;
            (i, n)
        })
        .collect();
    notes.sort_by(|a, b| a.1.canonical_cmp(&b.1));
    let mut truth = vec![0; score.len()];
    for (k, (i, _)) in notes.iter().enumerate() {
        truth[*i] = k;
    }
    let perf = NoteSequence::from_notes(SequenceKind::Performance, TempoMap::default(), notes.into_iter().map(|x| x.1).collect());
    // jitter may make a note start before the previous same-pitch note ends
    let perf = truncate_overlaps(&perf).0;
    Rendering { perf, truth }
}

/// Delays every note starting at or after `at` by `gap` seconds.
pub fn insert_pause(perf: &NoteSequence, at: f64, gap: f64) -> NoteSequence {
    let mut out = perf.clone();
    for n in &mut out.notes {
        if n.onset >= at {
            n.onset += gap;
        }
    }
    out.refresh_beats();
    out
}
