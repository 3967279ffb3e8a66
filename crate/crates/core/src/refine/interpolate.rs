use std::collections::HashSet;

use super::config::RefineConfig;
use super::timing::{local_tempo, onset_pairs, recanonicalize, OnsetPair};
use super::RefineError;
use crate::clean::{truncate_overlaps, DEFAULT_MIN_DURATION};
use crate::note::{refresh_note_beats, Note, NoteSequence};

const WEIGHT_EPS: f64 = 1e-6;
const NUDGE: f64 = 0.001;

/// Tempo (beats/s) over pairs within `window` seconds of `anchor`, looking
/// forward or backward.
fn edge_tempo(pairs: &[OnsetPair], anchor: usize, forward: bool, cfg: &RefineConfig) -> f64 {
    let a = &pairs[anchor];
    let far = if forward {
        pairs[anchor..].iter().take_while(|p| p.perf_time <= a.perf_time + cfg.local_tempo_window).last()
    } else {
        pairs[..=anchor].iter().rev().take_while(|p| p.perf_time >= a.perf_time - cfg.local_tempo_window).last()
    };
    let lo = cfg.tempo_min / 60.0;
    let hi = cfg.tempo_max / 60.0;
    if let Some(f) = far {
        let (beats, secs) = ((f.score_onset - a.score_onset).abs(), (f.perf_time - a.perf_time).abs());
        if beats > 0.0 && secs > 0.0 {
            return (beats / secs).clamp(lo, hi);
        }
    }
    local_tempo(pairs, pairs.len(), cfg.local_tempo_window, cfg.tempo_min, cfg.tempo_max)
}

/// Performed onset for a score onset without matched notes.
fn placed_onset(pairs: &[OnsetPair], o: f64, cfg: &RefineConfig) -> f64 {
    let k = pairs.partition_point(|p| p.score_onset < o);
    let n = pairs.len();
    if k > 0 && k < n {
        let (mut j, mut l) = (k - 1, k);
        loop {
            let (a, b) = (&pairs[j], &pairs[l]);
            if b.perf_time - a.perf_time >= cfg.interp_min_time && b.score_onset - a.score_onset >= cfg.interp_min_beats {
                return a.perf_time + (o - a.score_onset) * (b.perf_time - a.perf_time) / (b.score_onset - a.score_onset);
            }
            if j == 0 && l == n - 1 {
                break;
            }
            j = j.saturating_sub(1);
            l = (l + 1).min(n - 1);
        }
    }
    // extrapolate from the nearest anchor
    let anchor = if k == 0 {
        0
    } else if k == n || o - pairs[k - 1].score_onset <= pairs[k].score_onset - o {
        k - 1
    } else {
        k
    };
    let forward = anchor == 0 || (anchor < n - 1 && k > anchor);
    let tau = edge_tempo(pairs, anchor, forward, cfg);
    pairs[anchor].perf_time + (o - pairs[anchor].score_onset) / tau
}

/// Fills every unmatched score note with a synthetic performance note.
///
/// Onsets come from the note's own chord when it has matched notes,
/// otherwise from linear interpolation between anchor chords at least
/// `interp_min_time` seconds and `interp_min_beats` beats apart (widened
/// outward as needed), or from extrapolation at the local tempo near the
/// ends. Velocity and articulation (seconds per score beat) are means over
/// the neighbouring chords weighted by inverse beat distance. Returns the
/// number of notes created.
pub fn interpolate_notes(
    score: &NoteSequence,
    perf: &mut NoteSequence,
    s2p: &mut [Option<usize>],
    cfg: &RefineConfig,
) -> Result<usize, RefineError> {
    let missing: Vec<usize> = (0..s2p.len()).filter(|&s| s2p[s].is_none()).collect();
    if missing.is_empty() {
        return Ok(0);
    }
    let pairs = onset_pairs(score, perf, s2p, true);
    if pairs.len() < 2 {
        return Err(RefineError::InterpolationImpossible { anchors: pairs.len() });
    }
    let mut taken: HashSet<(u8, u64)> = perf.notes.iter().map(|n| (n.pitch, n.onset.to_bits())).collect();
    let mut created = Vec::with_capacity(missing.len());
    for &s in &missing {
        let sn = &score.notes[s];
        let o = sn.onset_beats;
        let k = pairs.partition_point(|p| p.score_onset < o);
        let own = (k < pairs.len() && pairs[k].score_onset == o).then_some(k);
        let mut onset = match own {
            Some(k) => pairs[k].perf_time,
            None => placed_onset(&pairs, o, cfg),
        };

        let before = own.map_or(k, |k| k).checked_sub(1);
        let after = own.map_or(k, |k| k + 1);
        let neighbours = own.into_iter().chain(before).chain((after < pairs.len()).then_some(after));
        let (mut wsum, mut vel, mut artic) = (0.0, 0.0, 0.0);
        for idx in neighbours {
            let w = 1.0 / (WEIGHT_EPS + (pairs[idx].score_onset - o).abs());
            for &(ms, mp) in &pairs[idx].links {
                let pn = &perf.notes[mp];
                let beats = score.notes[ms].duration_beats;
                wsum += w;
                vel += w * f64::from(pn.velocity);
                artic += w * if beats > 0.0 { pn.duration / beats } else { pn.duration };
            }
        }
        let velocity = (vel / wsum).round().clamp(1.0, 127.0) as u8;
        let per_beat = artic / wsum;
        let duration = (per_beat * if sn.duration_beats > 0.0 { sn.duration_beats } else { 1.0 }).max(DEFAULT_MIN_DURATION);

        while taken.contains(&(sn.pitch, onset.to_bits())) {
            onset += NUDGE;
        }
        taken.insert((sn.pitch, onset.to_bits()));
        let mut note = Note::new(sn.pitch, onset, duration, velocity);
        note.channel = sn.channel;
        note.flags.interpolated = true;
        refresh_note_beats(&perf.tempo, &mut note);
        created.push((s, note));
    }
    let count = created.len();
    for (s, note) in created {
        s2p[s] = Some(perf.notes.len());
        perf.notes.push(note);
    }
    recanonicalize(perf, s2p);
    *perf = truncate_overlaps(perf).0;
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::note::SequenceKind;
    use crate::tempo::TempoMap;

    fn score(beats: &[f64]) -> NoteSequence {
        let notes = beats
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                let mut n = Note::new(60 + i as u8, 0.0, 0.0, 64);
                n.onset_beats = b;
                n.duration_beats = 0.5;
                n
            })
            .collect();
        NoteSequence::score_from_beats(TempoMap::default(), notes)
    }

    #[test]
    fn midpoint_between_anchors() {
        let s = score(&[0.0, 1.0, 2.0]);
        let notes = vec![Note::new(60, 0.0, 0.25, 60), Note::new(62, 1.0, 0.25, 80)];
        let mut perf = NoteSequence::from_notes(SequenceKind::Performance, TempoMap::default(), notes);
        let mut s2p = vec![Some(0), None, Some(1)];
        let n = interpolate_notes(&s, &mut perf, &mut s2p, &RefineConfig::default()).unwrap();
        assert_eq!(n, 1);
        let new = &perf.notes[s2p[1].unwrap()];
        assert_eq!(new.onset, 0.5);
        assert_eq!(new.velocity, 70);
        assert!(new.flags.interpolated);
        assert!((new.duration - 0.25).abs() < 1e-12);
    }

    #[test]
    fn edges_extrapolate_at_local_tempo() {
        let s = score(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let notes = vec![Note::new(61, 0.5, 0.2, 64), Note::new(62, 1.0, 0.2, 64), Note::new(63, 1.5, 0.2, 64)];
        let mut perf = NoteSequence::from_notes(SequenceKind::Performance, TempoMap::default(), notes);
        let mut s2p = vec![None, Some(0), Some(1), Some(2), None];
        interpolate_notes(&s, &mut perf, &mut s2p, &RefineConfig::default()).unwrap();
        assert!((perf.notes[s2p[0].unwrap()].onset - 0.0).abs() < 1e-12);
        assert!((perf.notes[s2p[4].unwrap()].onset - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_anchor_is_an_error() {
        let s = score(&[0.0, 1.0]);
        let mut perf = NoteSequence::from_notes(SequenceKind::Performance, TempoMap::default(), vec![Note::new(60, 0.0, 0.2, 64)]);
        let mut s2p = vec![Some(0), None];
        assert!(matches!(
            interpolate_notes(&s, &mut perf, &mut s2p, &RefineConfig::default()),
            Err(RefineError::InterpolationImpossible { anchors: 1 })
        ));
    }

    #[test]
    fn duplicate_pitch_and_onset_is_nudged() {
        // score has two notes of pitch 60 at beats 1 and 1 (voices); one is
        // matched, the other lands on the same onset and gets nudged
        let mut s = score(&[0.0, 1.0, 1.0, 2.0]);
        s.notes[2].pitch = 61;
        s.notes[1].pitch = 61;
        let notes = vec![Note::new(60, 0.0, 0.2, 64), Note::new(61, 0.5, 0.2, 64), Note::new(63, 1.0, 0.2, 64)];
        let mut perf = NoteSequence::from_notes(SequenceKind::Performance, TempoMap::default(), notes);
        let mut s2p = vec![Some(0), Some(1), None, Some(2)];
        interpolate_notes(&s, &mut perf, &mut s2p, &RefineConfig::default()).unwrap();
        let new = &perf.notes[s2p[2].unwrap()];
        assert!((new.onset - 0.501).abs() < 1e-12);
        assert_eq!(s2p.iter().flatten().collect::<HashSet<_>>().len(), 4);
    }
}
