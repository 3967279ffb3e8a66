use std::fs;
use std::path::Path;

use anyhow::{Context as _, Result};
use perfcurate::curation::{cluster_duplicates, select_lead, similarity, LeadCandidate};
use perfcurate::midi::load_midi;
use perfcurate::note::NoteSequence;
use serde::Serialize;

use super::err_text;
use crate::manifest::{PerformanceEntry, PieceRecord};
use crate::{Context, Outcome};

pub const QUARANTINE_DIR: &str = "quarantine";

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DedupRow {
    pub path: String,
    /// Lead of the cluster this file belongs to.
    pub lead_path: String,
    pub lead: bool,
    pub cluster_size: usize,
    pub similarity_to_lead: Option<f64>,
    pub error: String,
}

pub const DEDUP_HEADERS: [&str; 6] = ["path", "lead_path", "lead", "cluster_size", "similarity_to_lead", "error"];

#[derive(Serialize)]
struct DedupSummary {
    performances: usize,
    clusters: usize,
    duplicates: usize,
    quarantined: usize,
    failures: usize,
}

fn lead_recall(e: &PerformanceEntry) -> Option<f64> {
    e.stage_recalls.get("onset").or_else(|| e.stage_recalls.get("raw")).copied()
}

/// Clusters one piece's performances; rows follow the record's order.
fn dedup_record(ctx: &Context, record: &PieceRecord) -> Vec<DedupRow> {
    let loaded: Vec<Result<NoteSequence>> =
        record.performances.iter().map(|e| load_midi(ctx.root.join(e.working_path())).map_err(Into::into)).collect();
    let mut rows: Vec<DedupRow> = record.performances.iter().map(|e| DedupRow { path: e.path.clone(), ..DedupRow::default() }).collect();
    let mut ok = Vec::new();
    let mut seqs = Vec::new();
    for (i, l) in loaded.into_iter().enumerate() {
        match l {
            Ok(s) if !s.is_empty() => {
                ok.push(i);
                seqs.push(s);
            }
            Ok(_) => rows[i].error = "no notes".into(),
            Err(e) => {
                log::error!("{}: {e:#}", rows[i].path);
                rows[i].error = err_text(&e);
            }
        }
    }
    let ids: Vec<String> = ok.iter().map(|&i| record.performances[i].path.clone()).collect();
    let s = &ctx.settings;
    for cluster in cluster_duplicates(&seqs, &ids, s.similarity_threshold, s.onset_tolerance) {
        let cands: Vec<LeadCandidate> = cluster
            .iter()
            .map(|&k| {
                let e = &record.performances[ok[k]];
                LeadCandidate { path: e.path.clone(), source: e.source(), recall: lead_recall(e) }
            })
            .collect();
        let lead = cluster[select_lead(&cands).expect("clusters are non-empty")];
        for &k in &cluster {
            let row = &mut rows[ok[k]];
            row.lead_path = ids[lead].clone();
            row.lead = k == lead;
            row.cluster_size = cluster.len();
            row.similarity_to_lead =
                Some(if k == lead { 1.0 } else { similarity(&seqs[k], &seqs[lead], s.onset_tolerance).map_or(0.0, |x| x.value) });
        }
    }
    rows
}

fn move_into_quarantine(root: &Path, rel: &str) -> Result<String> {
    let p = Path::new(rel);
    let dir = p.parent().map(|d| d.join(QUARANTINE_DIR)).unwrap_or_else(|| QUARANTINE_DIR.into());
    let target = dir.join(p.file_name().unwrap_or_default());
    fs::create_dir_all(root.join(&dir))?;
    fs::rename(root.join(rel), root.join(&target)).with_context(|| format!("moving {rel}"))?;
    Ok(target.to_string_lossy().replace('\\', "/"))
}

fn quarantine(root: &Path, e: &mut PerformanceEntry) -> Result<()> {
    e.path = move_into_quarantine(root, &e.path)?;
    for f in [&mut e.cleaned, &mut e.alignment, &mut e.refined, &mut e.refined_alignment].into_iter().flatten() {
        if root.join(f.as_str()).exists() {
            *f = move_into_quarantine(root, f)?;
        }
    }
    Ok(())
}

/// Marks near-duplicate performances of each piece; one lead per cluster.
/// With `quarantine` set, non-lead files are moved aside.
pub fn cmd_dedup(ctx: &Context) -> Result<(Outcome, Vec<DedupRow>)> {
    let mut manifest = ctx.manifest()?;
    let per_record: Vec<Vec<DedupRow>> = ctx.map(&manifest.records, |r| dedup_record(ctx, r));
    let mut failures = 0;
    let mut quarantined = 0;
    let mut rows = Vec::new();
    for (record, rec_rows) in manifest.records.iter_mut().zip(per_record) {
        for (e, row) in record.performances.iter_mut().zip(rec_rows) {
            if !row.error.is_empty() {
                failures += 1;
            } else {
                e.duplicate_of = Some(row.lead_path.clone());
                e.lead = Some(row.lead);
                if ctx.settings.quarantine && !row.lead && !ctx.dry_run {
                    quarantine(&ctx.root, e)?;
                    quarantined += 1;
                }
            }
            rows.push(row);
        }
    }
    let summary = DedupSummary {
        performances: rows.len(),
        clusters: rows.iter().filter(|r| r.lead).count(),
        duplicates: rows.iter().filter(|r| r.error.is_empty() && !r.lead).count(),
        quarantined,
        failures,
    };
    let rep = ctx.reporter();
    rep.csv("dedup.csv", &DEDUP_HEADERS, &rows)?;
    rep.json("dedup.json", &summary)?;
    ctx.save_manifest(&manifest)?;
    Ok((Outcome { command: "dedup", processed: rows.len(), failures }, rows))
}
