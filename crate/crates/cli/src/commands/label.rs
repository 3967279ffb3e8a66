use std::collections::BTreeMap;

use anyhow::Result;
use perfcurate::curation::{heuristic_label, star_filter, Label, Origin};
use serde::Serialize;

use crate::manifest::PerformanceEntry;
use crate::{Context, Outcome};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LabelRow {
    pub path: String,
    /// `score`, `recorded` or `transcribed`.
    pub origin: String,
    pub adjusted_ratio: Option<f64>,
    pub label: String,
    pub refined_recall: Option<f64>,
    pub star: bool,
}

pub const LABEL_HEADERS: [&str; 6] = ["path", "origin", "adjusted_ratio", "label", "refined_recall", "star"];

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LabelSummary {
    pub files: usize,
    pub counts: BTreeMap<String, usize>,
    pub star: usize,
    /// Transcribed files without an alignment (labelled NoLabel).
    pub unaligned: usize,
}

fn origin_name(o: Origin) -> &'static str {
    match o {
        Origin::Score => "score",
        Origin::Recorded => "recorded",
        Origin::Transcribed => "transcribed",
    }
}

/// Recall after hole and onset cleaning; only refined files have one.
fn refined_recall(e: &PerformanceEntry) -> Option<f64> {
    e.refined.as_ref().and(e.stage_recalls.get("onset").copied())
}

/// Labels every score and performance file from its origin and adjusted
/// alignment ratio, and applies the refined-recall filter.
pub fn cmd_label(ctx: &Context) -> Result<(Outcome, Vec<LabelRow>, LabelSummary)> {
    let mut manifest = ctx.manifest()?;
    let mut rows = Vec::new();
    let mut summary = LabelSummary::default();
    for l in [Label::Score, Label::HighQuality, Label::LowQuality, Label::Corrupted, Label::NoLabel] {
        summary.counts.insert(l.name().to_string(), 0);
    }
    let mut count = |rows: &mut Vec<LabelRow>, row: LabelRow| {
        *summary.counts.get_mut(&row.label).expect("known label") += 1;
        summary.star += usize::from(row.star);
        rows.push(row);
    };
    let mut unaligned = 0;
    for record in &mut manifest.records {
        let scores = std::iter::once(record.score.maximal.clone()).chain(record.score.minimal.clone());
        for path in scores {
            let q = heuristic_label(Origin::Score, None);
            count(&mut rows, LabelRow { path, origin: "score".into(), label: q.label.name().into(), ..LabelRow::default() });
        }
        for e in &mut record.performances {
            let origin = if e.recorded { Origin::Recorded } else { Origin::Transcribed };
            let ratio = e.adjusted_ratio.filter(|_| e.alignment.is_some());
            if origin == Origin::Transcribed && ratio.is_none() {
                unaligned += 1;
            }
            let q = heuristic_label(origin, ratio);
            let recall = refined_recall(e);
            let star = recall.is_some_and(|r| star_filter(&q, r));
            e.label = Some(q.label.name().to_string());
            e.star = Some(star);
            count(
                &mut rows,
                LabelRow {
                    path: e.path.clone(),
                    origin: origin_name(origin).into(),
                    adjusted_ratio: ratio,
                    label: q.label.name().into(),
                    refined_recall: recall,
                    star,
                },
            );
        }
    }
    summary.files = rows.len();
    summary.unaligned = unaligned;
    let rep = ctx.reporter();
    rep.csv("label.csv", &LABEL_HEADERS, &rows)?;
    rep.json("label.json", &summary)?;
    ctx.save_manifest(&manifest)?;
    Ok((Outcome { command: "label", processed: rows.len(), failures: 0 }, rows, summary))
}
