#![allow(dead_code)]

use std::path::Path;

use perfcurate::midi::save_midi;
use perfcurate::note::{NoteSequence, SequenceKind};
use perfcurate::synth::{random_score, render, ScoreShape, Warp};
use perfcurate_cli::{Context, Settings};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn save(root: &Path, rel: &str, seq: &NoteSequence) {
    let p = root.join(rel);
    std::fs::create_dir_all(p.parent().unwrap()).unwrap();
    save_midi(seq, p).unwrap();
}

pub fn score(seed: u64, n: usize) -> NoteSequence {
    random_score(&mut ChaCha8Rng::seed_from_u64(seed), n, &ScoreShape::default())
}

/// Expressive rendering: random tempo curve, onset jitter, varied velocity.
pub fn performance(score: &NoteSequence, seed: u64, jitter: f64) -> NoteSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beats = score.notes.last().map_or(0.0, |n| n.onset_beats) + 1.0;
    let warp = Warp::random(&mut rng, beats, (50.0, 150.0));
    render(score, &warp, jitter, (30, 100), &mut rng).perf
}

/// Mechanical rendering at the score's own tempo.
pub fn deadpan(score: &NoteSequence) -> NoteSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    render(score, &Warp::constant(0.5), 0.0, (64, 64), &mut rng).perf
}

pub fn as_performance(seq: &NoteSequence) -> NoteSequence {
    NoteSequence::from_notes(SequenceKind::Performance, seq.tempo.clone(), seq.notes.clone())
}

pub fn ctx(root: &Path) -> Context {
    Context::new(root, Settings::default(), false).unwrap()
}

pub fn ctx_with(root: &Path, f: impl FnOnce(&mut Settings)) -> Context {
    let mut s = Settings::default();
    f(&mut s);
    Context::new(root, s, false).unwrap()
}
