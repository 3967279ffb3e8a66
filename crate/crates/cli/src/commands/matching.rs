use std::collections::BTreeMap;

use anyhow::{anyhow, Result};
use perfcurate::alignment::{adjusted_ratio, note_ratio, precision, recall, AlignmentTable};
use perfcurate::matcher::{is_candidate_within, verify_match, PieceMeta, ScoreVariant, Source};
use perfcurate::midi::load_midi_as;
use perfcurate::note::{NoteSequence, SequenceKind};
use serde::Serialize;

use super::err_text;
use crate::manifest::{derived_path, PieceRecord, ALIGN_SUFFIX};
use crate::{Context, Outcome};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MatchRow {
    pub path: String,
    pub score: String,
    /// `matched`, `rejected` (metadata prefilter) or `error`.
    pub status: String,
    pub variant: String,
    pub definitive: bool,
    pub n_score: usize,
    pub n_perf: usize,
    pub n_matched: usize,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub note_ratio: Option<f64>,
    pub adjusted_ratio: Option<f64>,
    pub alignment: String,
    pub error: String,
}

pub const MATCH_HEADERS: [&str; 14] = [
    "path",
    "score",
    "status",
    "variant",
    "definitive",
    "n_score",
    "n_perf",
    "n_matched",
    "recall",
    "precision",
    "note_ratio",
    "adjusted_ratio",
    "alignment",
    "error",
];

#[derive(Serialize)]
struct MatchSummary {
    performances: usize,
    matched: usize,
    definitive: usize,
    minimal_variant: usize,
    rejected: usize,
    failures: usize,
}

struct Scores {
    maximal: NoteSequence,
    minimal: Option<NoteSequence>,
}

fn load_scores(ctx: &Context, r: &PieceRecord) -> Result<Scores> {
    let maximal = load_midi_as(ctx.root.join(&r.score.maximal), SequenceKind::Score)?;
    let minimal = match &r.score.minimal {
        Some(m) => Some(load_midi_as(ctx.root.join(m), SequenceKind::Score)?),
        None => None,
    };
    Ok(Scores { maximal, minimal })
}

fn variant_name(v: ScoreVariant) -> &'static str {
    match v {
        ScoreVariant::Maximal => "maximal",
        ScoreVariant::Minimal => "minimal",
    }
}

fn match_one(ctx: &Context, record: &PieceRecord, scores: &Scores, rec_perf: usize) -> Result<MatchRow> {
    let entry = &record.performances[rec_perf];
    let working = entry.working_path();
    let perf = load_midi_as(ctx.root.join(working), SequenceKind::Performance)?;
    let mut row = MatchRow { path: entry.path.clone(), n_perf: perf.len(), ..MatchRow::default() };

    let title = record.title();
    let perf_meta = PieceMeta::new(&record.composer, &entry.original_name().replace('_', " "), perf.len(), entry.source(), entry.recorded);
    let s = &ctx.settings;
    let fits = |score: &NoteSequence| {
        let meta = PieceMeta::new(&record.composer, &title, score.len(), Source::Other, false);
        is_candidate_within(&meta, &perf_meta, s.min_note_ratio, s.max_note_ratio)
    };
    let max_ok = fits(&scores.maximal);
    let min_ok = scores.minimal.as_ref().is_some_and(fits);
    if !max_ok && !min_ok {
        row.status = "rejected".into();
        row.score = record.score.maximal.clone();
        row.n_score = scores.maximal.len();
        return Ok(row);
    }
    let (score_max, score_min) = match (max_ok, min_ok) {
        (true, _) => (&scores.maximal, scores.minimal.as_ref().filter(|_| min_ok)),
        // only the minimal score passed the prefilter
        _ => (scores.minimal.as_ref().unwrap(), None),
    };
    let v = verify_match(score_max, score_min, &perf, &s.matching)?;
    let variant = if max_ok { v.variant } else { ScoreVariant::Minimal };
    let (score, score_path) = match variant {
        ScoreVariant::Maximal => (&scores.maximal, record.score.maximal.clone()),
        ScoreVariant::Minimal => (scores.minimal.as_ref().unwrap(), record.score.minimal.clone().unwrap()),
    };
    let table = AlignmentTable::from_sequences(&v.alignment, score, &perf)?;
    let alignment = derived_path(working, ALIGN_SUFFIX);
    if !ctx.dry_run {
        table.write(ctx.root.join(&alignment))?;
    }
    let a = &v.alignment;
    Ok(MatchRow {
        path: entry.path.clone(),
        score: score_path,
        status: "matched".into(),
        variant: variant_name(variant).into(),
        definitive: v.definitive,
        n_score: a.n_score(),
        n_perf: a.n_perf(),
        n_matched: a.n_matched(),
        recall: recall(a).ok(),
        precision: precision(a).ok(),
        note_ratio: note_ratio(a).ok(),
        adjusted_ratio: adjusted_ratio(a).ok(),
        alignment,
        error: String::new(),
    })
}

/// Matches every performance to its piece's score (maximal, then minimal)
/// and writes one alignment file per matched performance.
pub fn cmd_match(ctx: &Context) -> Result<(Outcome, Vec<MatchRow>)> {
    let mut manifest = ctx.manifest()?;
    let scores: Vec<Result<Scores>> = ctx.map(&manifest.records, |r| load_scores(ctx, r));
    let ids = manifest.performance_ids();
    let rows: Vec<MatchRow> = ctx.map(&ids, |&(r, p)| {
        let record = &manifest.records[r];
        let result = scores[r].as_ref().map_err(|e| anyhow!("score: {e:#}")).and_then(|s| match_one(ctx, record, s, p));
        result.unwrap_or_else(|e| {
            let path = &record.performances[p].path;
            log::error!("{path}: {e:#}");
            MatchRow { path: path.clone(), status: "error".into(), error: err_text(&e), ..MatchRow::default() }
        })
    });

    let mut failures = 0;
    for (&(r, p), row) in ids.iter().zip(&rows) {
        let e = &mut manifest.records[r].performances[p];
        match row.status.as_str() {
            "matched" => {
                e.alignment = Some(row.alignment.clone());
                e.score_variant = Some(if row.variant == "minimal" { ScoreVariant::Minimal } else { ScoreVariant::Maximal });
                e.definitive = Some(row.definitive);
                e.adjusted_ratio = row.adjusted_ratio;
                e.stage_recalls = row.recall.map(|x| BTreeMap::from([("raw".to_string(), x)])).unwrap_or_default();
                e.refined = None;
                e.refined_alignment = None;
            }
            "rejected" => {
                e.alignment = None;
                e.score_variant = None;
                e.definitive = Some(false);
                e.adjusted_ratio = None;
                e.stage_recalls.clear();
            }
            _ => failures += 1,
        }
    }
    let summary = MatchSummary {
        performances: rows.len(),
        matched: rows.iter().filter(|r| r.status == "matched").count(),
        definitive: rows.iter().filter(|r| r.definitive).count(),
        minimal_variant: rows.iter().filter(|r| r.variant == "minimal").count(),
        rejected: rows.iter().filter(|r| r.status == "rejected").count(),
        failures,
    };
    let rep = ctx.reporter();
    rep.csv("match.csv", &MATCH_HEADERS, &rows)?;
    rep.json("match.json", &summary)?;
    ctx.save_manifest(&manifest)?;
    Ok((Outcome { command: "match", processed: rows.len(), failures }, rows))
}
