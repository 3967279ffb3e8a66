use perfcurate::alignment::Alignment;
use perfcurate::matcher::match_notes;
use perfcurate::note::NoteSequence;
use perfcurate::refine::{implied_bpm, onset_pairs, refine, synchronize_beats, RefineConfig, Stage};
use perfcurate::synth::{insert_pause, random_score, render, ScoreShape, Warp};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Case {
    score: NoteSequence,
    perf: NoteSequence,
    alignment: Alignment,
}

fn with_pauses(seed: u64, n: usize) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let score = random_score(&mut rng, n, &ScoreShape::default());
    let beats = score.notes.last().unwrap().onset_beats + 1.0;
    let warp = Warp::random(&mut rng, beats, (50.0, 160.0));
    let mut perf = render(&score, &warp, 0.01, (30, 100), &mut rng).perf;
    let end = perf.end_time();
    for _ in 0..rng.gen_range(1..4) {
        let at = rng.gen_range(0.1 * end..0.9 * end);
        perf = insert_pause(&perf, at, rng.gen_range(2.0..20.0));
    }
    // a few stray notes and a dropped passage
    let drop_at = rng.gen_range(0..perf.len() - 40);
    let drop_len = rng.gen_range(0..40);
    let mut notes: Vec<_> = perf.notes.iter().enumerate().filter(|(i, _)| *i < drop_at || *i >= drop_at + drop_len).map(|(_, n)| n.clone()).collect();
    for _ in 0..rng.gen_range(0..10) {
        let mut x = notes[rng.gen_range(0..notes.len())].clone();
        x.onset += rng.gen_range(-0.3..0.3f64);
        x.onset = x.onset.max(0.0);
        x.pitch = rng.gen_range(30..100);
        notes.push(x);
    }
    notes.sort_by(|a, b| a.canonical_cmp(b));
    let perf = perfcurate::clean::truncate_overlaps(&perf.with_notes(notes)).0;
    let alignment = match_notes(&score, &perf).unwrap();
    Case { score, perf, alignment }
}

fn tempo_violations(score: &NoteSequence, perf: &NoteSequence, a: &Alignment, cfg: &RefineConfig) -> usize {
    let pairs = onset_pairs(score, perf, &a.score_to_perf(), false);
    pairs
        .windows(2)
        .filter_map(|w| implied_bpm(&w[0], &w[1]))
        .filter(|&b| !(cfg.tempo_min..=cfg.tempo_max).contains(&b))
        .count()
}

#[test]
fn onset_stage_bounds_tempo_after_pauses() {
    let mut cfg = RefineConfig::default();
    cfg.stages = [Stage::Holes, Stage::Onsets].into();
    let mut before = 0;
    for seed in 0..20 {
        let c = with_pauses(seed, 400);
        before += tempo_violations(&c.score, &c.perf, &c.alignment, &cfg);
        let r = refine(&c.score, &c.perf, &c.alignment, &cfg).unwrap();
        assert_eq!(tempo_violations(&c.score, &r.perf, &r.alignment, &cfg), 0, "seed {seed}");
    }
    assert!(before > 0);
}

#[test]
fn recall_never_increases_and_interpolation_completes() {
    let cfg = RefineConfig::default();
    for seed in 0..20 {
        let c = with_pauses(seed, 300);
        let r = refine(&c.score, &c.perf, &c.alignment, &cfg).unwrap();
        let rep = &r.report;
        assert!(rep.recall_raw >= rep.recall_after_h && rep.recall_after_h >= rep.recall_after_o, "{rep:?}");
        assert!(rep.recall_after_o >= rep.recall_final);
        assert_eq!(r.alignment.n_matched(), c.score.len());
        assert_eq!(r.alignment.n_perf(), c.score.len());
        assert!(r.perf.is_canonical());
    }
}

#[test]
fn refinement_is_idempotent() {
    let cfg = RefineConfig::default();
    for seed in 0..10 {
        let c = with_pauses(seed, 250);
        let once = refine(&c.score, &c.perf, &c.alignment, &cfg).unwrap();
        let twice = refine(&c.score, &once.perf, &once.alignment, &cfg).unwrap();
        assert_eq!(twice.report.modifications(), 0, "seed {seed}: {:?}", twice.report);
        assert_eq!(twice.perf.notes, once.perf.notes);
    }
}

#[test]
fn deleted_notes_are_restored_in_place() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let score = random_score(&mut rng, 500, &ScoreShape::default());
    let full = render(&score, &Warp::constant(0.5), 0.0, (70, 70), &mut rng).perf;
    let gone: std::collections::BTreeSet<usize> = sample(&mut rng, full.len(), full.len() / 5).into_iter().collect();
    let kept: Vec<_> = full.notes.iter().enumerate().filter(|(i, _)| !gone.contains(i)).map(|(_, n)| n.clone()).collect();
    let perf = full.with_notes(kept);
    let a = match_notes(&score, &perf).unwrap();
    let r = refine(&score, &perf, &a, &RefineConfig::default()).unwrap();
    assert_eq!(r.perf.len(), full.len());
    for &g in &gone {
        let orig = &full.notes[g];
        let found = r
            .perf
            .notes
            .iter()
            .filter(|n| n.flags.interpolated && n.pitch == orig.pitch)
            .min_by(|a, b| (a.onset - orig.onset).abs().total_cmp(&(b.onset - orig.onset).abs()))
            .unwrap();
        assert!((found.onset - orig.onset).abs() <= 0.001);
        assert!(found.velocity.abs_diff(orig.velocity) <= 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn synchronized_times_match(seed in any::<u64>()) {
        let c = with_pauses(seed, 150);
        let r = refine(&c.score, &c.perf, &c.alignment, &RefineConfig::default()).unwrap();
        let mut s2p = r.alignment.score_to_perf();
        let synced = synchronize_beats(&c.score, &r.perf, &mut s2p, 480).unwrap();
        prop_assert_eq!(synced.len(), r.perf.len());
        let mut chords: std::collections::BTreeMap<u64, (f64, f64, usize)> = Default::default();
        for (s, p) in s2p.iter().enumerate() {
            let p = p.unwrap();
            let beat = synced.tempo.seconds_to_beats(synced.notes[p].onset);
            let e = chords.entry(c.score.notes[s].onset_beats.to_bits()).or_default();
            e.0 = c.score.notes[s].onset_beats;
            e.1 += beat;
            e.2 += 1;
            let before = r.perf.notes[r.alignment.score_to_perf()[s].unwrap()].onset;
            prop_assert!((synced.notes[p].onset - before).abs() < 0.001);
        }
        // chord means sit on the score's beat grid; a chord at beat 0 is
        // pinned to the file start instead
        for (beat, sum, k) in chords.into_values().filter(|c| c.0 > 0.0) {
            prop_assert!((sum / k as f64 - beat).abs() < 0.01, "{} vs {}", sum / k as f64, beat);
        }
    }
}
