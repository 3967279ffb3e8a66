//! Standard MIDI File (format 0/1) ingestion and emission.
//!
//! All tracks and channels are merged into one note stream. Tempo events,
//! marker meta events (0x06) and control changes are preserved; other events
//! (program changes, pitch bend, sysex, text other than markers) are dropped.

mod read;
mod write;

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::note::{NoteSequence, SequenceKind};

pub use read::parse_smf;
pub use write::encode_smf;

#[derive(Debug, Error)]
pub enum MidiError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed MIDI at byte {offset}: {reason}")]
    Parse { offset: usize, reason: String },
    #[error("unsupported MIDI file: {0}")]
    Unsupported(String),
}

/// Loads a performance from a Standard MIDI File.
pub fn load_midi(path: impl AsRef<Path>) -> Result<NoteSequence, MidiError> {
    load_midi_as(path, SequenceKind::Performance)
}

/// Loads a file and tags it as score or performance.
pub fn load_midi_as(path: impl AsRef<Path>, kind: SequenceKind) -> Result<NoteSequence, MidiError> {
    let bytes = fs::read(path)?;
    parse_smf(&bytes, kind)
}

/// Writes a sequence as a format-1 file (tempo/marker track + note track).
pub fn save_midi(seq: &NoteSequence, path: impl AsRef<Path>) -> Result<(), MidiError> {
    fs::write(path, encode_smf(seq))?;
    Ok(())
}

/// What the sequence looks like after a save/load cycle, and where each
/// note went: `map[i]` is the index of input note `i` in the output.
/// Provenance flags are carried over. Fails when notes do not survive the
/// cycle as themselves, which happens for overlapping same-pitch notes.
pub fn quantize(seq: &NoteSequence) -> Result<(NoteSequence, Vec<usize>), MidiError> {
    let mut out = parse_smf(&encode_smf(seq), seq.kind).expect("encoder output parses");
    let key = |tempo: &crate::tempo::TempoMap, n: &crate::note::Note| {
        let on = tempo.seconds_to_tick(n.onset);
        (n.pitch & 0x7F, on, tempo.seconds_to_tick(n.onset + n.duration).max(on), n.velocity.clamp(1, 127), n.channel & 0x0F)
    };
    let mut slots: HashMap<_, Vec<usize>> = HashMap::new();
    for (j, n) in out.notes.iter().enumerate().rev() {
        slots.entry(key(&out.tempo, n)).or_default().push(j);
    }
    let map = seq
        .notes
        .iter()
        .map(|n| slots.get_mut(&key(&seq.tempo, n)).and_then(Vec::pop))
        .collect::<Option<Vec<usize>>>()
        .ok_or_else(|| MidiError::Unsupported("notes changed identity when encoded".into()))?;
    for (n, &j) in seq.notes.iter().zip(&map) {
        out.notes[j].flags.interpolated = n.flags.interpolated;
        out.notes[j].flags.repaired = n.flags.repaired;
    }
    Ok((out, map))
}
