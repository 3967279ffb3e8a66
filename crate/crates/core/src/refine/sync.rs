use super::timing::{onset_pairs, recanonicalize};
use super::RefineError;
use crate::note::NoteSequence;
use crate::tempo::{TempoEvent, TempoMap, DEFAULT_US_PER_QUARTER};

/// Largest allowed gap between a note time and its tick position, seconds.
pub const SYNC_TOLERANCE: f64 = 0.000_25;

/// (time, tick) pairs -> tempo map whose ticks hit each knot time.
/// Knots must be sorted by time and start at (0 s, tick 0); ticks are
/// bumped to be strictly increasing. Tempo values are rounded with the
/// accumulated error carried forward.
fn tempo_through(knots: &mut [(f64, u64)], tpq: u16) -> TempoMap {
    for k in 1..knots.len() {
        if knots[k].1 <= knots[k - 1].1 {
            knots[k].1 = knots[k - 1].1 + 1;
        }
    }
    let scale = 1e6 * f64::from(tpq);
    let mut events: Vec<TempoEvent> = Vec::new();
    let mut realized = 0.0;
    for w in knots.windows(2) {
        let (t1, tick0, tick1) = (w[1].0, w[0].1, w[1].1);
        let dticks = (tick1 - tick0) as f64;
        let us = ((t1 - realized) * scale / dticks).round().clamp(1.0, f64::from(0xFF_FFFFu32)) as u32;
        realized += f64::from(us) * dticks / scale;
        if events.last().map(|e| e.us_per_quarter) != Some(us) {
            events.push(TempoEvent { tick: tick0, us_per_quarter: us });
        }
    }
    if events.is_empty() {
        events.push(TempoEvent { tick: 0, us_per_quarter: DEFAULT_US_PER_QUARTER });
    }
    TempoMap::new(tpq, events)
}

/// Re-expresses the performance on the score's beat grid: score beat `b`
/// sits at tick `b * tpq`, and tempo events between beats reproduce every
/// note time within [`SYNC_TOLERANCE`].
pub fn synchronize_beats(
    score: &NoteSequence,
    perf: &NoteSequence,
    s2p: &mut [Option<usize>],
    tpq: u16,
) -> Result<NoteSequence, RefineError> {
    let pairs = onset_pairs(score, perf, s2p, true);
    if pairs.is_empty() {
        return Err(RefineError::Sync("no matched onsets".into()));
    }
    let q = f64::from(tpq);
    let mut chords: Vec<(f64, f64)> = pairs.iter().map(|p| (p.perf_time, p.score_onset * q)).collect();
    if chords[0].1.round() == 0.0 {
        chords[0] = (0.0, 0.0);
    } else if chords[0].0 > 0.0 {
        chords.insert(0, (0.0, 0.0));
    } else {
        return Err(RefineError::Sync(format!("first onset at {} s precedes the start", chords[0].0)));
    }
    for w in chords.windows(2) {
        if !(w[1].0 > w[0].0) || !(w[1].1 > w[0].1) {
            return Err(RefineError::Sync(format!("beat-to-time mapping is not increasing at beat {}", w[1].1 / q)));
        }
    }
    let events: Vec<f64> = perf.notes.iter().flat_map(|n| [n.onset, n.offset()]).collect();
    if let Some(t) = events.iter().find(|t| **t < 0.0) {
        return Err(RefineError::Sync(format!("note time {t} is negative")));
    }

    let mut knots: Vec<(f64, u64)> = chords.iter().map(|&(t, tick)| (t, tick.round() as u64)).collect();
    let map = loop {
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        knots.dedup_by(|b, a| a.0 == b.0);
        let map = tempo_through(&mut knots, tpq);
        let tick_of = |t: f64| map.seconds_to_ticks(t).round().max(0.0) as u64;
        let mut extra = Vec::new();
        for n in &perf.notes {
            let (on, off) = (tick_of(n.onset), tick_of(n.offset()));
            for (t, tick) in [(n.onset, on), (n.offset(), off)] {
                if (map.tick_to_seconds(tick as f64) - t).abs() > SYNC_TOLERANCE {
                    extra.push((t, tick));
                }
            }
            if on == off && n.duration > 0.0 {
                extra.push((n.onset, on));
                extra.push((n.offset(), on + 1));
            }
        }
        extra.retain(|e| knots.binary_search_by(|k| k.0.total_cmp(&e.0)).is_err());
        if extra.is_empty() {
            break map;
        }
        knots.extend(extra);
    };

    let mut out = NoteSequence::new(perf.kind, map.clone());
    let tick_of = |t: f64| map.seconds_to_ticks(t).round().max(0.0);
    out.notes = perf
        .notes
        .iter()
        .map(|n| {
            let mut m = *n;
            let on = map.tick_to_seconds(tick_of(n.onset));
            m.onset = on;
            m.duration = map.tick_to_seconds(tick_of(n.offset())) - on;
            m
        })
        .collect();
    out.refresh_beats();
    let remap = |tick: u64| map.seconds_to_tick(perf.tempo.tick_to_seconds(tick as f64));
    out.markers = perf.markers.iter().map(|m| crate::note::Marker { tick: remap(m.tick), text: m.text.clone() }).collect();
    out.controls = perf.controls.iter().map(|c| crate::note::ControlEvent { tick: remap(c.tick), ..*c }).collect();
    recanonicalize(&mut out, s2p);
    Ok(out)
}
