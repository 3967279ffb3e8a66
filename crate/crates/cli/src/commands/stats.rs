use std::collections::BTreeMap;

use anyhow::Result;
use perfcurate::matcher::normalize_composer;
use perfcurate::midi::load_midi;
use serde::Serialize;

use crate::{Context, Outcome};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorpusStats {
    pub pieces: usize,
    pub performances: usize,
    pub composers: usize,
    pub median_performances_per_piece: f64,
    pub mean_performances_per_piece: f64,
    /// Summed length of all readable performances.
    pub hours: f64,
    pub unreadable: usize,
    /// composer → (pieces, performances)
    pub per_composer: BTreeMap<String, (usize, usize)>,
    /// performances per piece → number of pieces
    pub histogram: BTreeMap<usize, usize>,
}

#[derive(Serialize)]
struct ComposerRow<'a> {
    composer: &'a str,
    pieces: usize,
    performances: usize,
}

#[derive(Serialize)]
struct HistogramRow {
    performances_per_piece: usize,
    pieces: usize,
}

fn median(sorted: &[usize]) -> f64 {
    match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2] as f64,
        n => (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0,
    }
}

/// Piece and performance counts per composer, performances-per-piece
/// distribution and total hours of performed music.
pub fn cmd_stats(ctx: &Context) -> Result<(Outcome, CorpusStats)> {
    let manifest = ctx.manifest()?;
    let ids = manifest.performance_ids();
    let lengths: Vec<Option<f64>> = ctx.map(&ids, |&(r, p)| {
        let e = &manifest.records[r].performances[p];
        match load_midi(ctx.root.join(e.working_path())) {
            Ok(s) => Some(s.end_time()),
            Err(err) => {
                log::warn!("{}: {err}", e.path);
                None
            }
        }
    });
    let mut st = CorpusStats {
        pieces: manifest.records.len(),
        performances: ids.len(),
        hours: lengths.iter().flatten().sum::<f64>() / 3600.0,
        unreadable: lengths.iter().filter(|l| l.is_none()).count(),
        ..CorpusStats::default()
    };
    let mut counts: Vec<usize> = Vec::with_capacity(st.pieces);
    for r in &manifest.records {
        let n = r.performances.len();
        counts.push(n);
        let c = st.per_composer.entry(normalize_composer(&r.composer)).or_default();
        c.0 += 1;
        c.1 += n;
        *st.histogram.entry(n).or_default() += 1;
    }
    counts.sort_unstable();
    st.composers = st.per_composer.len();
    st.median_performances_per_piece = median(&counts);
    st.mean_performances_per_piece = if counts.is_empty() { 0.0 } else { ids.len() as f64 / counts.len() as f64 };

    let composers: Vec<ComposerRow> =
        st.per_composer.iter().map(|(c, &(pieces, performances))| ComposerRow { composer: c, pieces, performances }).collect();
    let hist: Vec<HistogramRow> =
        st.histogram.iter().map(|(&performances_per_piece, &pieces)| HistogramRow { performances_per_piece, pieces }).collect();
    let rep = ctx.reporter();
    rep.csv("stats_composers.csv", &["composer", "pieces", "performances"], &composers)?;
    rep.csv("stats_histogram.csv", &["performances_per_piece", "pieces"], &hist)?;
    rep.json("stats.json", &st)?;
    Ok((Outcome { command: "stats", processed: ids.len(), failures: 0 }, st))
}
