use anyhow::{anyhow, Result};
use perfcurate::alignment::{read_alignment_table, Alignment, AlignmentTable};
use perfcurate::matcher::ScoreVariant;
use perfcurate::midi::{load_midi_as, quantize, save_midi};
use perfcurate::note::SequenceKind;
use perfcurate::refine::{refine, RefineError, RefineReport};
use serde::Serialize;

use super::err_text;
use crate::manifest::{derived_path, PerformanceEntry, PieceRecord, REFINED_ALIGN_SUFFIX, REFINED_SUFFIX};
use crate::{Context, Outcome};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RefineRow {
    pub path: String,
    /// `refined`, `interrupted` (below the recall floor), `skipped` (no
    /// alignment) or `error`.
    pub status: String,
    pub recall_raw: Option<f64>,
    pub recall_h: Option<f64>,
    pub recall_ho: Option<f64>,
    pub recall_final: Option<f64>,
    pub holes_removed: usize,
    pub intra_outliers_removed: usize,
    pub close_onsets_merged: usize,
    pub jumps_adjusted: usize,
    pub jumps_dropped: usize,
    pub notes_stripped: usize,
    pub notes_interpolated: usize,
    pub modifications: usize,
    pub refined: String,
    pub error: String,
}

pub const REFINE_HEADERS: [&str; 16] = [
    "path",
    "status",
    "recall_raw",
    "recall_h",
    "recall_ho",
    "recall_final",
    "holes_removed",
    "intra_outliers_removed",
    "close_onsets_merged",
    "jumps_adjusted",
    "jumps_dropped",
    "notes_stripped",
    "notes_interpolated",
    "modifications",
    "refined",
    "error",
];

/// Lower band edges, from the top band down; the top band includes 1.0.
pub const BAND_EDGES: [f64; 8] = [0.95, 0.90, 0.85, 0.80, 0.75, 0.70, 0.60, 0.0];

/// One row of the recall-band table: mean recall and share of pairs per
/// band at each stage (raw, after H, after H+O).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandRow {
    pub band: String,
    pub raw_mean: Option<f64>,
    pub raw_pct: f64,
    pub h_mean: Option<f64>,
    pub h_pct: f64,
    pub ho_mean: Option<f64>,
    pub ho_pct: f64,
}

pub const BAND_HEADERS: [&str; 7] = ["band", "raw_mean", "raw_pct", "h_mean", "h_pct", "ho_mean", "ho_pct"];

fn band_of(r: f64) -> usize {
    BAND_EDGES.iter().position(|&lo| r >= lo).unwrap_or(BAND_EDGES.len() - 1)
}

fn band_label(i: usize) -> String {
    let hi = if i == 0 { 1.0 } else { BAND_EDGES[i - 1] };
    format!("{:.2}-{:.2}", BAND_EDGES[i], hi)
}

/// Groups per-pair recalls into bands at each stage; the last row (`all`)
/// holds corpus means. Each stage is banded independently, so pairs move
/// between bands as refinement removes links.
pub fn band_table(stages: &[(f64, f64, f64)]) -> Vec<BandRow> {
    let n = stages.len();
    let column = |pick: fn(&(f64, f64, f64)) -> f64| {
        let mut sums = vec![(0.0, 0usize); BAND_EDGES.len()];
        for s in stages {
            let r = pick(s);
            let b = &mut sums[band_of(r)];
            b.0 += r;
            b.1 += 1;
        }
        sums
    };
    let cols = [column(|s| s.0), column(|s| s.1), column(|s| s.2)];
    let mean = |(sum, k): (f64, usize)| (k > 0).then(|| sum / k as f64);
    let pct = |k: usize| if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 };
    let mut rows: Vec<BandRow> = (0..BAND_EDGES.len())
        .map(|i| BandRow {
            band: band_label(i),
            raw_mean: mean(cols[0][i]),
            raw_pct: pct(cols[0][i].1),
            h_mean: mean(cols[1][i]),
            h_pct: pct(cols[1][i].1),
            ho_mean: mean(cols[2][i]),
            ho_pct: pct(cols[2][i].1),
        })
        .collect();
    let overall = |pick: fn(&(f64, f64, f64)) -> f64| (n > 0).then(|| stages.iter().map(pick).sum::<f64>() / n as f64);
    let all = if n == 0 { 0.0 } else { 100.0 };
    rows.push(BandRow {
        band: "all".into(),
        raw_mean: overall(|s| s.0),
        raw_pct: all,
        h_mean: overall(|s| s.1),
        h_pct: all,
        ho_mean: overall(|s| s.2),
        ho_pct: all,
    });
    rows
}

#[derive(Serialize)]
struct RefineSummary {
    pairs: usize,
    refined: usize,
    interrupted: usize,
    skipped: usize,
    failures: usize,
    modifications: usize,
    /// Pairs whose recall rose between stages; always 0 unless a stage is broken.
    monotonicity_violations: usize,
    bands: Vec<BandRow>,
}

struct Done {
    row: RefineRow,
    refined_alignment: String,
    stage_recalls: std::collections::BTreeMap<String, f64>,
}

fn fill(row: &mut RefineRow, r: &RefineReport) {
    row.recall_raw = Some(r.recall_raw);
    row.recall_h = Some(r.recall_after_h);
    row.recall_ho = Some(r.recall_after_o);
    row.recall_final = Some(r.recall_final);
    row.holes_removed = r.holes_removed;
    row.intra_outliers_removed = r.intra_outliers_removed;
    row.close_onsets_merged = r.close_onsets_merged;
    row.jumps_adjusted = r.jumps_adjusted;
    row.jumps_dropped = r.jumps_dropped;
    row.notes_stripped = r.notes_stripped;
    row.notes_interpolated = r.notes_interpolated;
    row.modifications = r.modifications();
}

fn refine_one(ctx: &Context, record: &PieceRecord, e: &PerformanceEntry, restart: bool) -> Result<Option<Done>> {
    let mut row = RefineRow { path: e.path.clone(), ..RefineRow::default() };
    // continue from an earlier refinement unless asked to start over
    let (perf_path, align_path) = match (&e.refined, &e.refined_alignment, &e.alignment) {
        (Some(p), Some(a), _) if !restart => (p.clone(), a.clone()),
        (_, _, Some(a)) => (e.working_path().to_string(), a.clone()),
        _ => return Ok(None),
    };
    let score_path = match e.score_variant {
        Some(ScoreVariant::Minimal) => record.score.minimal.clone().ok_or_else(|| anyhow!("minimal score missing"))?,
        _ => record.score.maximal.clone(),
    };
    let score = load_midi_as(ctx.root.join(&score_path), SequenceKind::Score)?;
    let mut perf = load_midi_as(ctx.root.join(&perf_path), SequenceKind::Performance)?;
    let table = read_alignment_table(ctx.root.join(&align_path))?;
    table.apply_interpolated_flags(&mut perf);
    match refine(&score, &perf, &table.alignment, &ctx.settings.refine) {
        Ok(r) => {
            fill(&mut row, &r.report);
            row.status = "refined".into();
            row.refined = derived_path(&e.path, REFINED_SUFFIX);
            let refined_alignment = derived_path(&e.path, REFINED_ALIGN_SUFFIX);
            // index the alignment by the notes as they will be read back
            let (perf, map) = quantize(&r.perf)?;
            let pairs = r.alignment.matches().map(|(s, p)| (s, map[p]));
            let mut alignment = Alignment::from_matches(pairs, score.len(), perf.len())?;
            alignment.stage_recalls = r.alignment.stage_recalls.clone();
            if !ctx.dry_run {
                save_midi(&perf, ctx.root.join(&row.refined))?;
                AlignmentTable::from_sequences(&alignment, &score, &perf)?.write(ctx.root.join(&refined_alignment))?;
            }
            Ok(Some(Done { row, refined_alignment, stage_recalls: alignment.stage_recalls }))
        }
        Err(RefineError::BelowRecallFloor { report, .. }) => {
            fill(&mut row, &report);
            row.status = "interrupted".into();
            Ok(Some(Done { row, refined_alignment: String::new(), stage_recalls: Default::default() }))
        }
        Err(err) => Err(err.into()),
    }
}

/// Refines every matched pair. Pairs refined before are refined again from
/// their refined files (a no-op for converged pairs) unless `restart`.
pub fn cmd_refine(ctx: &Context, restart: bool) -> Result<(Outcome, Vec<RefineRow>, Vec<BandRow>)> {
    let mut manifest = ctx.manifest()?;
    let ids = manifest.performance_ids();
    let done: Vec<Result<Option<Done>>> = ctx.map(&ids, |&(r, p)| {
        let record = &manifest.records[r];
        refine_one(ctx, record, &record.performances[p], restart)
    });
    let mut rows = Vec::with_capacity(ids.len());
    let mut failures = 0;
    for (&(r, p), d) in ids.iter().zip(done) {
        let e = &mut manifest.records[r].performances[p];
        match d {
            Ok(Some(d)) => {
                if d.row.status == "refined" {
                    e.refined = Some(d.row.refined.clone());
                    e.refined_alignment = Some(d.refined_alignment);
                    let raw = e.stage_recalls.get("raw").copied();
                    e.stage_recalls = d.stage_recalls;
                    // keep the recall of the original match across reruns
                    if let Some(raw) = raw.filter(|_| !restart) {
                        e.stage_recalls.insert("raw".into(), raw);
                    }
                }
                rows.push(d.row);
            }
            Ok(None) => rows.push(RefineRow { path: e.path.clone(), status: "skipped".into(), ..RefineRow::default() }),
            Err(err) => {
                log::error!("{}: {err:#}", e.path);
                failures += 1;
                rows.push(RefineRow { path: e.path.clone(), status: "error".into(), error: err_text(&err), ..RefineRow::default() });
            }
        }
    }
    let stages: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((r.recall_raw?, r.recall_h?, r.recall_ho?)))
        .collect();
    let violations = stages.iter().filter(|s| !(s.0 >= s.1 && s.1 >= s.2)).count();
    if violations > 0 {
        log::error!("{violations} pair(s) gained recall during refinement");
    }
    let bands = band_table(&stages);
    let summary = RefineSummary {
        pairs: rows.len(),
        refined: rows.iter().filter(|r| r.status == "refined").count(),
        interrupted: rows.iter().filter(|r| r.status == "interrupted").count(),
        skipped: rows.iter().filter(|r| r.status == "skipped").count(),
        failures,
        modifications: rows.iter().map(|r| r.modifications).sum(),
        monotonicity_violations: violations,
        bands: bands.clone(),
    };
    let rep = ctx.reporter();
    rep.csv("refine.csv", &REFINE_HEADERS, &rows)?;
    rep.csv("refine_bands.csv", &BAND_HEADERS, &bands)?;
    rep.json("refine.json", &summary)?;
    ctx.save_manifest(&manifest)?;
    Ok((Outcome { command: "refine", processed: rows.len(), failures }, rows, bands))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bands_are_half_open_with_closed_top() {
        assert_eq!(band_of(1.0), 0);
        assert_eq!(band_of(0.95), 0);
        assert_eq!(band_of(0.9499), 1);
        assert_eq!(band_of(0.6), 6);
        assert_eq!(band_of(0.0), 7);
        assert_eq!(band_label(0), "0.95-1.00");
        assert_eq!(band_label(7), "0.00-0.60");
    }

    #[test]
    fn table_means_and_shares() {
        let t = band_table(&[(1.0, 1.0, 0.9), (0.96, 0.96, 0.96), (0.5, 0.4, 0.4), (0.8, 0.8, 0.8)]);
        assert_eq!(t.len(), 9);
        assert_eq!(t[0].raw_pct, 50.0);
        assert_eq!(t[0].raw_mean, Some(0.98));
        assert_eq!(t[0].ho_pct, 25.0);
        assert_eq!(t[1].ho_pct, 25.0);
        assert_eq!(t[7].h_mean, Some(0.4));
        assert_eq!(t[8].raw_mean, Some((1.0 + 0.96 + 0.5 + 0.8) / 4.0));
        assert!(band_table(&[]).iter().take(8).all(|r| r.raw_mean.is_none() && r.raw_pct == 0.0));
    }
}
