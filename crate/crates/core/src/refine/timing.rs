//! Helpers shared by the stages: onset pairs, time maps, local tempo.

use crate::note::NoteSequence;

/// One distinct score onset with the performed notes matched to it.
#[derive(Debug, Clone, PartialEq)]
pub struct OnsetPair {
    /// Score onset in beats.
    pub score_onset: f64,
    /// Mean onset (seconds) of the matched performance notes.
    pub perf_time: f64,
    /// (score index, performance index) of the member matches.
    pub links: Vec<(usize, usize)>,
}

/// Groups matches by exact score onset. Matches to interpolated
/// performance notes are skipped unless `with_interpolated`.
pub fn onset_pairs(score: &NoteSequence, perf: &NoteSequence, s2p: &[Option<usize>], with_interpolated: bool) -> Vec<OnsetPair> {
    let mut links: Vec<(usize, usize)> = s2p
        .iter()
        .enumerate()
        .filter_map(|(s, p)| p.map(|p| (s, p)))
        .filter(|&(_, p)| with_interpolated || !perf.notes[p].flags.interpolated)
        .collect();
    links.sort_by(|a, b| score.notes[a.0].onset_beats.total_cmp(&score.notes[b.0].onset_beats).then(a.0.cmp(&b.0)));
    let mut out: Vec<OnsetPair> = Vec::new();
    for (s, p) in links {
        let o = score.notes[s].onset_beats;
        match out.last_mut() {
            Some(pair) if pair.score_onset == o => pair.links.push((s, p)),
            _ => out.push(OnsetPair { score_onset: o, perf_time: 0.0, links: vec![(s, p)] }),
        }
    }
    for pair in &mut out {
        pair.perf_time = pair.links.iter().map(|&(_, p)| perf.notes[p].onset).sum::<f64>() / pair.links.len() as f64;
    }
    out
}

/// Implied tempo between consecutive pairs in BPM (`None` when the
/// performed gap is not positive).
pub fn implied_bpm(prev: &OnsetPair, cur: &OnsetPair) -> Option<f64> {
    let dt = cur.perf_time - prev.perf_time;
    (dt > 0.0).then(|| 60.0 * (cur.score_onset - prev.score_onset) / dt)
}

/// Local tempo in beats per second for the step into pair `i`: total beats
/// over total seconds across pairs in the `window` seconds ending at pair
/// `i - 1`. Falls back to the median in-range tempo of the piece, then to
/// the global ratio. Clamped just inside `[min_bpm, max_bpm]`.
pub fn local_tempo(pairs: &[OnsetPair], i: usize, window: f64, min_bpm: f64, max_bpm: f64) -> f64 {
    let lo = min_bpm / 60.0 * (1.0 + 1e-6);
    let hi = max_bpm / 60.0 * (1.0 - 1e-6);
    let clamp = |t: f64| t.clamp(lo, hi);
    if i >= 1 && i <= pairs.len() {
        let end = &pairs[i - 1];
        let start = pairs[..i].iter().position(|p| p.perf_time >= end.perf_time - window).unwrap_or(i - 1);
        let beats = end.score_onset - pairs[start].score_onset;
        let secs = end.perf_time - pairs[start].perf_time;
        if start < i - 1 && secs > 0.0 && beats > 0.0 {
            return clamp(beats / secs);
        }
    }
    let mut tempos: Vec<f64> = pairs
        .windows(2)
        .filter_map(|w| implied_bpm(&w[0], &w[1]))
        .filter(|bpm| (min_bpm..=max_bpm).contains(bpm))
        .map(|bpm| bpm / 60.0)
        .collect();
    if !tempos.is_empty() {
        tempos.sort_by(f64::total_cmp);
        let m = tempos.len();
        let median = if m % 2 == 1 { tempos[m / 2] } else { 0.5 * (tempos[m / 2 - 1] + tempos[m / 2]) };
        return clamp(median);
    }
    if let (Some(f), Some(l)) = (pairs.first(), pairs.last()) {
        let (beats, secs) = (l.score_onset - f.score_onset, l.perf_time - f.perf_time);
        if beats > 0.0 && secs > 0.0 {
            return clamp(beats / secs);
        }
    }
    clamp(2.0)
}

/// Applies a monotone time map to note onsets, markers and controls.
/// Durations are kept.
pub fn map_times(perf: &mut NoteSequence, f: impl Fn(f64) -> f64) {
    for n in &mut perf.notes {
        n.onset = f(n.onset);
    }
    let tempo = perf.tempo.clone();
    let remap = |tick: u64| tempo.seconds_to_tick(f(tempo.tick_to_seconds(tick as f64)).max(0.0));
    for m in &mut perf.markers {
        m.tick = remap(m.tick);
    }
    for c in &mut perf.controls {
        c.tick = remap(c.tick);
    }
    perf.markers.sort_by_key(|m| m.tick);
    perf.controls.sort_by_key(|c| c.tick);
    perf.refresh_beats();
}

/// Restores canonical note order, remapping score→performance links.
pub fn recanonicalize(perf: &mut NoteSequence, s2p: &mut [Option<usize>]) {
    if perf.is_canonical() {
        return;
    }
    let mut order: Vec<usize> = (0..perf.len()).collect();
    order.sort_by(|&a, &b| perf.notes[a].canonical_cmp(&perf.notes[b]));
    let mut new_index = vec![0; perf.len()];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    perf.notes = order.iter().map(|&i| perf.notes[i]).collect();
    for p in s2p.iter_mut().flatten() {
        *p = new_index[*p];
    }
}

/// Recall of a score→performance map.
pub fn recall_of(s2p: &[Option<usize>]) -> f64 {
    if s2p.is_empty() {
        0.0
    } else {
        s2p.iter().filter(|p| p.is_some()).count() as f64 / s2p.len() as f64
    }
}
