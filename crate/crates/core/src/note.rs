//! Notes and note sequences.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::tempo::{TempoEvent, TempoMap};

/// Marker text attached to interpolated (synthetic) performance notes.
pub const INTERPOLATION_MARKER: &str = "interp";

/// Per-note provenance flags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoteFlags {
    /// Synthetic note created by interpolation.
    pub interpolated: bool,
    /// Duration was rewritten by the runaway-note repair.
    pub repaired: bool,
    /// Note-on without a matching note-off; its offset was set to the track end.
    pub unterminated: bool,
}

/// One keyboard event.
///
/// Times are kept in seconds (`onset`, `duration`) and in quarter-note beats
/// (`onset_beats`, `duration_beats`). For scores the beat values are the
/// notated positions; for performances they follow the file's tempo map and
/// carry no musical meaning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Note {
    pub pitch: u8,
    pub onset: f64,
    pub duration: f64,
    pub velocity: u8,
    pub channel: u8,
    pub onset_beats: f64,
    pub duration_beats: f64,
    #[serde(default)]
    pub flags: NoteFlags,
}

impl Note {
    /// A note with beat timing left at zero; use [`NoteSequence::refresh_beats`]
    /// or set the beat fields explicitly.
    pub fn new(pitch: u8, onset: f64, duration: f64, velocity: u8) -> Self {
        Self {
            pitch,
            onset,
            duration,
            velocity,
            channel: 0,
            onset_beats: 0.0,
            duration_beats: 0.0,
            flags: NoteFlags::default(),
        }
    }

    pub fn offset(&self) -> f64 {
        self.onset + self.duration
    }

    pub fn offset_beats(&self) -> f64 {
        self.onset_beats + self.duration_beats
    }

    /// Compares the MIDI-visible content (pitch, timing, velocity, channel),
    /// ignoring provenance flags.
    pub fn same_event(&self, other: &Note) -> bool {
        self.pitch == other.pitch
            && self.onset == other.onset
            && self.duration == other.duration
            && self.velocity == other.velocity
            && self.channel == other.channel
    }

    /// Canonical ordering key: onset, then pitch, then duration.
    pub fn canonical_cmp(&self, other: &Note) -> Ordering {
        self.onset
            .total_cmp(&other.onset)
            .then(self.pitch.cmp(&other.pitch))
            .then(self.duration.total_cmp(&other.duration))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SequenceKind {
    Score,
    #[default]
    Performance,
}

/// Text marker (meta event 0x06) at an absolute tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marker {
    pub tick: u64,
    pub text: String,
}

/// Control change (sustain pedal and friends), kept verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlEvent {
    pub tick: u64,
    pub channel: u8,
    pub controller: u8,
    pub value: u8,
}

/// A score or performance: notes plus the timing context they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct NoteSequence {
    pub notes: Vec<Note>,
    pub tempo: TempoMap,
    pub kind: SequenceKind,
    pub markers: Vec<Marker>,
    pub controls: Vec<ControlEvent>,
}

impl NoteSequence {
    pub fn new(kind: SequenceKind, tempo: TempoMap) -> Self {
        Self { notes: Vec::new(), tempo, kind, markers: Vec::new(), controls: Vec::new() }
    }

    /// Builds a sequence from notes whose seconds are authoritative; beat
    /// fields are derived from the tempo map.
    pub fn from_notes(kind: SequenceKind, tempo: TempoMap, notes: Vec<Note>) -> Self {
        let mut seq = Self { notes, tempo, kind, markers: Vec::new(), controls: Vec::new() };
        seq.refresh_beats();
        seq
    }

    /// Builds a score from beat positions; seconds follow the tempo map.
    pub fn score_from_beats(tempo: TempoMap, notes: Vec<Note>) -> Self {
        let mut seq = Self { notes, tempo, kind: SequenceKind::Score, markers: Vec::new(), controls: Vec::new() };
        for n in &mut seq.notes {
            let on = seq.tempo.beats_to_seconds(n.onset_beats);
            let off = seq.tempo.beats_to_seconds(n.onset_beats + n.duration_beats);
            n.onset = on;
            n.duration = off - on;
        }
        seq
    }

    pub fn len(&self) -> usize {
        self.notes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }

    pub fn ticks_per_quarter(&self) -> u16 {
        self.tempo.ticks_per_quarter()
    }

    pub fn tempo_events(&self) -> &[TempoEvent] {
        self.tempo.events()
    }

    /// Latest note offset in seconds (0 for an empty sequence).
    pub fn end_time(&self) -> f64 {
        self.notes.iter().map(Note::offset).fold(0.0, f64::max)
    }

    /// Recomputes beat fields of every note from its seconds.
    pub fn refresh_beats(&mut self) {
        for n in &mut self.notes {
            refresh_note_beats(&self.tempo, n);
        }
    }

    /// Whether the notes are in canonical (onset, pitch, duration) order.
    pub fn is_canonical(&self) -> bool {
        self.notes.windows(2).all(|w| w[0].canonical_cmp(&w[1]) != Ordering::Greater)
    }

    /// Same content with a different note list.
    pub fn with_notes(&self, notes: Vec<Note>) -> Self {
        Self {
            notes,
            tempo: self.tempo.clone(),
            kind: self.kind,
            markers: self.markers.clone(),
            controls: self.controls.clone(),
        }
    }
}

/// Largest duration for a note starting at `onset` whose offset does not
/// pass `end` in floating point.
pub fn duration_until(onset: f64, end: f64) -> f64 {
    let mut d = end - onset;
    while onset + d > end {
        d = d.next_down();
    }
    d
}

pub(crate) fn refresh_note_beats(tempo: &TempoMap, n: &mut Note) {
    let on = tempo.seconds_to_beats(n.onset);
    let off = tempo.seconds_to_beats(n.onset + n.duration);
    n.onset_beats = on;
    n.duration_beats = off - on;
}
