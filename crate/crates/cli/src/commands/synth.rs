use std::fs;

use anyhow::Result;
use perfcurate::curation::{corrupt, CorruptionLevel};
use perfcurate::midi::save_midi;
use perfcurate::synth::{random_score, render, ScoreShape, Warp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Context, Outcome};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub pieces: usize,
    pub performances: usize,
    pub notes: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self { pieces: 4, performances: 5, notes: 300 }
    }
}

const COMPOSERS: [&str; 3] = ["Frederic Chopin", "Johann Sebastian Bach", "Franz Liszt"];
const SOURCES: [&str; 5] = ["asap", "atepp", "giantmidi", "periscope", "aria"];

/// Writes a small synthetic corpus under the root: rendered performances
/// of random scores, some of them degraded, in the directory layout the
/// scanner expects.
pub fn cmd_synth(ctx: &Context, opts: SynthOptions) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.settings.seed);
    let mut written = 0;
    for piece in 0..opts.pieces {
        let composer = COMPOSERS[piece % COMPOSERS.len()].replace(' ', "_");
        let dir = ctx.root.join(composer).join(format!("Piece_Op{}_No{}", 10 + piece, 1 + piece % 3));
        let score = random_score(&mut rng, opts.notes, &ScoreShape::default());
        let beats = score.notes.last().map_or(0.0, |n| n.onset_beats) + 1.0;
        if ctx.dry_run {
            continue;
        }
        fs::create_dir_all(&dir)?;
        save_midi(&score, dir.join("score.mid"))?;
        for k in 0..opts.performances {
            let warp = Warp::random(&mut rng, beats, (50.0, 150.0));
            let mut perf = render(&score, &warp, 0.01, (30, 100), &mut rng).perf;
            match rng.gen_range(0..6) {
                0 => perf = corrupt(&perf, CorruptionLevel::LowQuality, rng.gen())?,
                1 => perf = corrupt(&perf, CorruptionLevel::Corrupted, rng.gen())?,
                _ => {}
            }
            let source = SOURCES[(piece + k) % SOURCES.len()];
            save_midi(&perf, dir.join(format!("{source}_take{k:02}.mid")))?;
            written += 1;
        }
    }
    Ok(Outcome { command: "synth", processed: written, failures: 0 })
}
