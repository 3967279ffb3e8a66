use anyhow::Result;
use perfcurate::clean::{clean_sequence, CleanCounts};
use perfcurate::midi::{encode_smf, load_midi_as, parse_smf, save_midi};
use perfcurate::note::{NoteSequence, SequenceKind};
use serde::Serialize;

use super::err_text;
use crate::manifest::{derived_path, CLEAN_SUFFIX};
use crate::{Context, Outcome};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CleanRow {
    pub path: String,
    pub cleaned: String,
    pub notes_in: usize,
    pub notes_out: usize,
    pub unterminated: usize,
    pub duplicates_removed: usize,
    pub overlaps_truncated: usize,
    pub short_removed: usize,
    pub runaways_repaired: usize,
    pub warning: String,
    pub error: String,
}

pub const CLEAN_HEADERS: [&str; 11] = [
    "path",
    "cleaned",
    "notes_in",
    "notes_out",
    "unterminated",
    "duplicates_removed",
    "overlaps_truncated",
    "short_removed",
    "runaways_repaired",
    "warning",
    "error",
];

#[derive(Serialize)]
struct CleanSummary {
    files: usize,
    failures: usize,
    duplicates_removed: usize,
    overlaps_truncated: usize,
    short_removed: usize,
    runaways_repaired: usize,
}

fn add(total: &mut CleanCounts, c: CleanCounts) {
    total.duplicates_removed += c.duplicates_removed;
    total.overlaps_truncated += c.overlaps_truncated;
    total.short_removed += c.short_removed;
    total.runaways_repaired += c.runaways_repaired;
    if c.warning.is_some() {
        total.warning = c.warning;
    }
}

/// Cleans and then re-cleans the tick-quantized result until writing it to
/// MIDI and reading it back needs no further changes. Repaired durations
/// are not on the tick grid, and rounding them can reintroduce a defect.
pub fn settle_on_ticks(seq: &NoteSequence, min_duration: f64) -> (NoteSequence, CleanCounts) {
    let (mut out, mut total) = clean_sequence(seq, min_duration);
    for _ in 0..4 {
        let quantized = parse_smf(&encode_smf(&out), out.kind).expect("encoder output parses");
        let (again, counts) = clean_sequence(&quantized, min_duration);
        let done = counts.total_changes() == 0;
        add(&mut total, counts);
        out = again;
        if done {
            break;
        }
    }
    (out, total)
}

/// Cleans one performance file and writes `<stem>.clean.mid` next to it.
pub fn clean_file(ctx: &Context, rel: &str) -> Result<CleanRow> {
    let seq = load_midi_as(ctx.root.join(rel), SequenceKind::Performance)?;
    let (out, counts) = settle_on_ticks(&seq, ctx.settings.min_duration);
    let cleaned = derived_path(rel, CLEAN_SUFFIX);
    if !ctx.dry_run {
        save_midi(&out, ctx.root.join(&cleaned))?;
    }
    if let Some(w) = &counts.warning {
        log::warn!("{rel}: {w}");
    }
    Ok(CleanRow {
        path: rel.to_string(),
        cleaned,
        notes_in: seq.len(),
        notes_out: out.len(),
        unterminated: seq.notes.iter().filter(|n| n.flags.unterminated).count(),
        duplicates_removed: counts.duplicates_removed,
        overlaps_truncated: counts.overlaps_truncated,
        short_removed: counts.short_removed,
        runaways_repaired: counts.runaways_repaired,
        warning: counts.warning.unwrap_or_default(),
        error: String::new(),
    })
}

/// Runs the cleaning chain over every performance in the corpus.
pub fn cmd_clean(ctx: &Context) -> Result<(Outcome, Vec<CleanRow>)> {
    let mut manifest = ctx.manifest()?;
    let ids = manifest.performance_ids();
    let paths: Vec<String> = ids.iter().map(|&(r, p)| manifest.records[r].performances[p].path.clone()).collect();
    let rows: Vec<CleanRow> = ctx.map(&paths, |rel| {
        clean_file(ctx, rel).unwrap_or_else(|e| {
            log::error!("{rel}: {e:#}");
            CleanRow { path: rel.clone(), error: err_text(&e), ..CleanRow::default() }
        })
    });
    let mut failures = 0;
    for (&(r, p), row) in ids.iter().zip(&rows) {
        if row.error.is_empty() {
            manifest.records[r].performances[p].cleaned = Some(row.cleaned.clone());
        } else {
            failures += 1;
        }
    }
    let summary = CleanSummary {
        files: rows.len(),
        failures,
        duplicates_removed: rows.iter().map(|r| r.duplicates_removed).sum(),
        overlaps_truncated: rows.iter().map(|r| r.overlaps_truncated).sum(),
        short_removed: rows.iter().map(|r| r.short_removed).sum(),
        runaways_repaired: rows.iter().map(|r| r.runaways_repaired).sum(),
    };
    let rep = ctx.reporter();
    rep.csv("clean.csv", &CLEAN_HEADERS, &rows)?;
    rep.json("clean.json", &summary)?;
    ctx.save_manifest(&manifest)?;
    Ok((Outcome { command: "clean", processed: rows.len(), failures }, rows))
}
