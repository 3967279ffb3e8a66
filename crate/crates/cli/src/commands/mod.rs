mod clean;
mod dedup;
mod label;
mod matching;
mod refine;
mod stats;
mod synth;

pub use clean::{clean_file, cmd_clean, settle_on_ticks, CleanRow, CLEAN_HEADERS};
pub use dedup::{cmd_dedup, DedupRow, DEDUP_HEADERS};
pub use label::{cmd_label, LabelRow, LabelSummary, LABEL_HEADERS};
pub use matching::{cmd_match, MatchRow, MATCH_HEADERS};
pub use refine::{band_table, cmd_refine, BandRow, RefineRow, BAND_EDGES, BAND_HEADERS, REFINE_HEADERS};
pub use stats::{cmd_stats, CorpusStats};
pub use synth::{cmd_synth, SynthOptions};

/// First error in a chain, for report cells.
fn err_text(e: &anyhow::Error) -> String {
    format!("{e:#}")
}
