use thiserror::Error;

use super::cluster::{cluster_onsets, jaccard_cost, OnsetCluster, PERF_EPSILON, SCORE_EPSILON};
use super::dtw::dtw;
use super::verify::DEFINITIVE_RECALL;
use crate::alignment::Alignment;
use crate::note::NoteSequence;

#[derive(Debug, Error, PartialEq)]
pub enum MatchError {
    #[error("cannot match an empty {0} sequence")]
    EmptyInput(&'static str),
}

/// Matcher parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    /// Score clustering epsilon in beats.
    pub score_epsilon: f64,
    /// Performance clustering epsilon in seconds.
    pub perf_epsilon: f64,
    /// Sakoe–Chiba band as a fraction of the longer cluster sequence.
    pub band_fraction: Option<f64>,
    /// Recall that must be exceeded for a definitive match.
    pub definitive_recall: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self { score_epsilon: SCORE_EPSILON, perf_epsilon: PERF_EPSILON, band_fraction: None, definitive_recall: DEFINITIVE_RECALL }
    }
}

impl MatchConfig {
    pub fn banded() -> Self {
        Self { band_fraction: Some(0.1), ..Self::default() }
    }
}

fn pitch_then_duration(seq: &NoteSequence, a: usize, b: usize, beats: bool) -> std::cmp::Ordering {
    let (x, y) = (&seq.notes[a], &seq.notes[b]);
    let (dx, dy) = if beats { (x.duration_beats, y.duration_beats) } else { (x.duration, y.duration) };
    x.pitch.cmp(&y.pitch).then(dx.total_cmp(&dy)).then(a.cmp(&b))
}

/// Two-level matcher with default parameters.
pub fn match_notes(score: &NoteSequence, perf: &NoteSequence) -> Result<Alignment, MatchError> {
    match_notes_with(score, perf, &MatchConfig::default())
}

/// Level 1 warps onset clusters with DTW on pitch-multiset Jaccard cost.
/// Level 2 visits warped cluster pairs and pairs still-free notes of equal
/// pitch, lowest pitch first, shorter durations first. Pairs that share a
/// cluster with another pair compete for its notes; they are visited by
/// distance from the time map through the one-to-one pairs, then by cost,
/// then in path order.
pub fn match_notes_with(score: &NoteSequence, perf: &NoteSequence, cfg: &MatchConfig) -> Result<Alignment, MatchError> {
    if score.is_empty() {
        return Err(MatchError::EmptyInput("score"));
    }
    if perf.is_empty() {
        return Err(MatchError::EmptyInput("performance"));
    }
    let sc = cluster_onsets(score, cfg.score_epsilon);
    let pc = cluster_onsets(perf, cfg.perf_epsilon);
    let band = cfg.band_fraction.map(|f| ((sc.len().max(pc.len()) as f64 * f).ceil() as usize).max(1));
    let local = |i: usize, j: usize| jaccard_cost(&sc[i].pitches, &pc[j].pitches);
    let warp = dtw(sc.len(), pc.len(), band, local).expect("non-empty cluster lists");

    let drift = timing_residuals(&warp.path, &sc, &pc, &local);
    let mut steps: Vec<(f64, f64, usize, usize, usize)> =
        warp.path.iter().enumerate().map(|(k, &(i, j))| (drift[k], local(i, j), k, i, j)).collect();
    steps.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut s_used = vec![false; score.len()];
    let mut p_used = vec![false; perf.len()];
    let mut pairs = Vec::new();
    for &(_, c, _, i, j) in &steps {
        if c >= 1.0 {
            continue;
        }
        let mut s_free: Vec<usize> = sc[i].note_indices.iter().copied().filter(|&k| !s_used[k]).collect();
        let mut p_free: Vec<usize> = pc[j].note_indices.iter().copied().filter(|&k| !p_used[k]).collect();
        s_free.sort_by(|&a, &b| pitch_then_duration(score, a, b, true));
        p_free.sort_by(|&a, &b| pitch_then_duration(perf, a, b, false));
        let (mut a, mut b) = (0, 0);
        while a < s_free.len() && b < p_free.len() {
            let (sp, pp) = (score.notes[s_free[a]].pitch, perf.notes[p_free[b]].pitch);
            match sp.cmp(&pp) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    s_used[s_free[a]] = true;
                    p_used[p_free[b]] = true;
                    pairs.push((s_free[a], p_free[b]));
                    a += 1;
                    b += 1;
                }
            }
        }
    }
    Ok(Alignment::from_matches(pairs, score.len(), perf.len()).expect("matcher emits each index once"))
}

/// Seconds between each path step's performance onset and the time
/// predicted for its score onset by piecewise-linear interpolation through
/// the one-to-one steps with cost below 1. Steps that own both clusters
/// alone get 0, since nothing competes for their notes.
fn timing_residuals(
    path: &[(usize, usize)],
    sc: &[OnsetCluster],
    pc: &[OnsetCluster],
    local: &impl Fn(usize, usize) -> f64,
) -> Vec<f64> {
    let (mut si, mut pj) = (vec![0usize; sc.len()], vec![0usize; pc.len()]);
    for &(i, j) in path {
        si[i] += 1;
        pj[j] += 1;
    }
    let alone = |i: usize, j: usize| si[i] == 1 && pj[j] == 1;
    let anchors: Vec<(f64, f64)> =
        path.iter().filter(|&&(i, j)| alone(i, j) && local(i, j) < 1.0).map(|&(i, j)| (sc[i].onset, pc[j].onset)).collect();
    let predict = |beat: f64| -> Option<f64> {
        if anchors.len() < 2 {
            return None;
        }
        let k = anchors.partition_point(|a| a.0 < beat).clamp(1, anchors.len() - 1);
        let ((b0, t0), (b1, t1)) = (anchors[k - 1], anchors[k]);
        Some(t0 + (beat - b0) * (t1 - t0) / (b1 - b0))
    };
    path.iter()
        .map(|&(i, j)| if alone(i, j) { 0.0 } else { predict(sc[i].onset).map_or(0.0, |t| (pc[j].onset - t).abs()) })
        .collect()
}
