use super::config::{JumpPolicy, RefineConfig};
use super::timing::{implied_bpm, local_tempo, map_times, onset_pairs, recanonicalize, OnsetPair};
use crate::note::NoteSequence;

// Guards deviation comparisons against float noise from time shifts.
const DEVIATION_SLACK: f64 = 1e-9;

/// Counters of the onset-cleaning stage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OnsetCleaning {
    pub intra_outliers_removed: usize,
    pub close_onsets_merged: usize,
    pub jumps_adjusted: usize,
    pub jumps_dropped: usize,
    /// Matches dropped because a backward shift would overtake them.
    pub overtaken_links_dropped: usize,
    /// Sum of absolute shifts applied, seconds.
    pub jump_shift_total: f64,
}

/// Links to remove by the intra-chord rule.
///
/// Chords with three or more members use their own standard deviation.
/// Two-note chords are compared with the pooled deviation of the larger
/// chords (or of all two-note chords when there are no larger ones) and lose
/// both notes when their half-spread exceeds the limit.
pub fn intra_outliers(pairs: &[OnsetPair], perf: &NoteSequence, sigma: f64) -> Vec<(usize, usize)> {
    let dev = |pair: &OnsetPair| -> Vec<f64> { pair.links.iter().map(|&(_, p)| perf.notes[p].onset - pair.perf_time).collect() };
    let pool = |min: usize, max: usize| {
        let (mut sq, mut n) = (0.0, 0usize);
        for pair in pairs.iter().filter(|p| (min..=max).contains(&p.links.len())) {
            for d in dev(pair) {
                sq += d * d;
                n += 1;
            }
        }
        (n > 0).then(|| (sq / n as f64).sqrt())
    };
    let reference = pool(3, usize::MAX).or_else(|| pool(2, 2));
    let mut out = Vec::new();
    for pair in pairs {
        match pair.links.len() {
            0 | 1 => {}
            2 => {
                let half = (perf.notes[pair.links[0].1].onset - perf.notes[pair.links[1].1].onset).abs() / 2.0;
                if reference.is_some_and(|r| half > sigma * r + DEVIATION_SLACK) {
                    out.extend_from_slice(&pair.links);
                }
            }
            n => {
                let d = dev(pair);
                let sd = (d.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
                for (k, x) in d.iter().enumerate() {
                    if x.abs() > sigma * sd + DEVIATION_SLACK {
                        out.push(pair.links[k]);
                    }
                }
            }
        }
    }
    out
}

enum Violation {
    Close,
    Jump,
}

fn check(prev: &OnsetPair, cur: &OnsetPair, cfg: &RefineConfig) -> Option<Violation> {
    let dt = cur.perf_time - prev.perf_time;
    if dt > -cfg.min_onset_gap && dt < cfg.min_onset_gap {
        return Some(Violation::Close);
    }
    match implied_bpm(prev, cur) {
        Some(bpm) if (cfg.tempo_min..=cfg.tempo_max).contains(&bpm) => None,
        _ => Some(Violation::Jump),
    }
}

/// Onset cleaning: intra-chord outliers, close onsets and alignment jumps,
/// repeated until nothing changes. Matches to interpolated notes are left
/// alone. Shifts move whole chords, so chords are never split and the
/// performance keeps its note order.
pub fn clean_onsets(score: &NoteSequence, perf: &mut NoteSequence, s2p: &mut [Option<usize>], cfg: &RefineConfig) -> OnsetCleaning {
    let mut stats = OnsetCleaning::default();
    let mut shift_budget = 4 * s2p.len() + 100;
    loop {
        // intra-chord fixed point
        loop {
            let pairs = onset_pairs(score, perf, s2p, false);
            let out = intra_outliers(&pairs, perf, cfg.intra_onset_sigma);
            if out.is_empty() {
                break;
            }
            stats.intra_outliers_removed += out.len();
            for (s, _) in out {
                s2p[s] = None;
            }
        }

        let pairs = onset_pairs(score, perf, s2p, false);
        let mut changed = false;
        let mut prev = 0;
        for i in 1..pairs.len() {
            let Some(v) = check(&pairs[prev], &pairs[i], cfg) else {
                prev = i;
                continue;
            };
            let drop = |s2p: &mut [Option<usize>]| pairs[i].links.iter().for_each(|&(s, _)| s2p[s] = None);
            match v {
                Violation::Close => {
                    stats.close_onsets_merged += 1;
                    drop(s2p);
                    changed = true;
                }
                Violation::Jump if cfg.jump_policy == JumpPolicy::Drop || shift_budget == 0 => {
                    stats.jumps_dropped += 1;
                    drop(s2p);
                    changed = true;
                }
                Violation::Jump => {
                    shift_budget -= 1;
                    if !shift_jump(&pairs, prev, i, perf, s2p, cfg, &mut stats) {
                        stats.jumps_dropped += 1;
                        drop(s2p);
                    }
                    changed = true;
                    break;
                }
            }
        }
        if !changed {
            return stats;
        }
    }
}

/// Moves pair `i` (and everything from its earliest note on) to the time
/// expected from the local tempo after pair `prev`. Returns false when a
/// forward shift would also move earlier chords; the caller drops the pair
/// instead.
fn shift_jump(
    pairs: &[OnsetPair],
    prev: usize,
    i: usize,
    perf: &mut NoteSequence,
    s2p: &mut [Option<usize>],
    cfg: &RefineConfig,
    stats: &mut OnsetCleaning,
) -> bool {
    // pairs between prev and i were dropped earlier in this scan
    let kept: Vec<OnsetPair> = pairs[..=prev].iter().cloned().chain(std::iter::once(pairs[i].clone())).collect();
    let j = kept.len() - 1;
    let tau = local_tempo(&kept, j, cfg.local_tempo_window, cfg.tempo_min, cfg.tempo_max);
    let expected = pairs[prev].perf_time + (pairs[i].score_onset - pairs[prev].score_onset) / tau;
    let delta = expected - pairs[i].perf_time;
    let later = &pairs[i..];
    let c = later.iter().flat_map(|p| &p.links).map(|&(_, p)| perf.notes[p].onset).fold(f64::INFINITY, f64::min);
    let earlier: Vec<(usize, usize)> = pairs[..=prev].iter().flat_map(|p| p.links.iter().copied()).collect();

    if delta >= 0.0 {
        if earlier.iter().any(|&(_, p)| perf.notes[p].onset >= c) {
            return false;
        }
        map_times(perf, |t| if t < c { t } else { t + delta });
    } else {
        let target = c + delta;
        let mut floor = f64::NEG_INFINITY;
        for &(s, p) in &earlier {
            let t = perf.notes[p].onset;
            if t >= target {
                s2p[s] = None;
                stats.overtaken_links_dropped += 1;
            } else {
                floor = floor.max(t);
            }
        }
        let first = perf.notes.iter().map(|n| n.onset).fold(f64::INFINITY, f64::min);
        if floor == f64::NEG_INFINITY {
            floor = first.min(target) - 1.0;
        }
        let scale = (target - floor) / (c - floor);
        map_times(perf, |t| {
            if t <= floor {
                t
            } else if t < c {
                floor + (t - floor) * scale
            } else {
                t + delta
            }
        });
    }
    recanonicalize(perf, s2p);
    stats.jumps_adjusted += 1;
    stats.jump_shift_total += delta.abs();
    true
}
