//! Cleaning, matching, alignment refinement, deduplication and quality
//! labelling for symbolic piano score/performance data.

pub mod alignment;
pub mod clean;
pub mod curation;
pub mod matcher;
pub mod midi;
pub mod note;
pub mod refine;
pub mod synth;
pub mod tempo;

pub use alignment::{Alignment, AlignmentError, Link, LinkKind};
pub use note::{Note, NoteFlags, NoteSequence, SequenceKind};
pub use tempo::{TempoEvent, TempoMap};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/notes-and-midi.md")]
    mod notes_and_midi {}
    #[doc = include_str!("../../../book/src/alignment.md")]
    mod alignment {}
    #[doc = include_str!("../../../book/src/matching.md")]
    mod matching {}
    #[doc = include_str!("../../../book/src/refinement.md")]
    mod refinement {}
    #[doc = include_str!("../../../book/src/curation.md")]
    mod curation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
