mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::Command;

use common::*;
use perfcurate::clean::{canonical_sort, truncate_overlaps};
use perfcurate::curation::{corrupt, scoreify, CorruptionLevel};
use perfcurate::midi::load_midi;
use perfcurate::note::{Note, NoteSequence, SequenceKind};
use perfcurate::synth::{random_score, render, ScoreShape, Warp};
use perfcurate::tempo::TempoMap;
use perfcurate_cli::commands::*;
use perfcurate_cli::manifest::{CorpusManifest, MANIFEST_FILE};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PIECE: &str = "Frederic_Chopin/Etude_Op10_No3";

fn copy_tree(from: &Path, to: &Path) {
    for e in fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let target = to.join(e.file_name());
        if e.path().is_dir() {
            fs::create_dir_all(&target).unwrap();
            copy_tree(&e.path(), &target);
        } else {
            fs::copy(e.path(), target).unwrap();
        }
    }
}

#[test]
fn scan_builds_hierarchy_and_manifest_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let s = score(1, 50);
    save(root, &format!("{PIECE}/score.mid"), &s);
    save(root, &format!("{PIECE}/score_mini.mid"), &s);
    save(root, &format!("{PIECE}/asap_a.mid"), &deadpan(&s));
    save(root, &format!("{PIECE}/atepp_b.mid"), &deadpan(&s));
    save(root, &format!("{PIECE}/atepp_b.clean.mid"), &deadpan(&s));
    save(root, "Bach/Prelude_BWV846/score.mid", &s);

    let mut m = CorpusManifest::scan(root).unwrap();
    assert_eq!(m.records.len(), 2);
    let r = m.records.iter().find(|r| r.composer == "Frederic Chopin").unwrap();
    assert_eq!(r.composition, "Etude Op10 No3");
    assert_eq!(r.score.minimal.as_deref(), Some(format!("{PIECE}/score_mini.mid").as_str()));
    assert_eq!(r.performances.len(), 2);
    assert!(r.performances[0].recorded && !r.performances[1].recorded);

    m.records[0].performances.first_mut().map(|p| p.label = Some("high_quality".into()));
    m.save().unwrap();
    assert_eq!(CorpusManifest::load(root).unwrap(), m);

    let text = fs::read_to_string(root.join(MANIFEST_FILE)).unwrap();
    let dup = text.replacen("atepp_b.mid", "asap_a.mid", 1);
    fs::write(root.join(MANIFEST_FILE), dup).unwrap();
    assert!(CorpusManifest::load(root).is_err());
}

/// A performance with known numbers of each defect, on disjoint pitches.
fn defective(seed: u64) -> (NoteSequence, [usize; 4]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut notes: Vec<Note> = (0..80).map(|i| Note::new(60 + (i % 12) as u8, i as f64 * 0.25, 0.2, rng.gen_range(30..90))).collect();
    let dups = rng.gen_range(0..6);
    for k in sample(&mut rng, 80, dups) {
        let mut d = notes[k];
        d.velocity = 20;
        notes.push(d);
    }
    let overlaps = rng.gen_range(0..5);
    for k in 0..overlaps {
        let t = 2.0 + k as f64 * 3.0;
        notes.push(Note::new(40 + k as u8, t, 1.0, 50));
        notes.push(Note::new(40 + k as u8, t + 0.5, 0.4, 50));
    }
    let short = rng.gen_range(0..5);
    for k in 0..short {
        notes.push(Note::new(100 + k as u8, 1.0 + k as f64, 0.002, 50));
    }
    let runaway = rng.gen_range(0..2);
    if runaway == 1 {
        notes.push(Note::new(30, 3.0, 60.0, 50));
    }
    (NoteSequence::from_notes(SequenceKind::Performance, TempoMap::default(), notes), [dups, overlaps, short, runaway])
}

#[test]
fn clean_counts_follow_the_injection_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    save(root, &format!("{PIECE}/score.mid"), &score(0, 50));
    let mut ledger = Vec::new();
    for seed in 0..8 {
        let (seq, counts) = defective(seed);
        let rel = format!("{PIECE}/atepp_take{seed}.mid");
        save(root, &rel, &seq);
        ledger.push((rel, counts));
    }
    let (outcome, rows) = cmd_clean(&ctx(root)).unwrap();
    assert_eq!(outcome.failures, 0);
    for (rel, [d, o, s, r]) in ledger {
        let row = rows.iter().find(|x| x.path == rel).unwrap();
        assert_eq!(
            [row.duplicates_removed, row.overlaps_truncated, row.short_removed, row.runaways_repaired],
            [d, o, s, r],
            "{rel}"
        );
    }
    let m = CorpusManifest::load(root).unwrap();
    assert!(m.records[0].performances.iter().all(|p| p.cleaned.is_some()));
    assert!(root.join("reports/clean.csv").exists());
}

#[test]
fn clean_corpus_needs_no_changes_and_reruns_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let s = score(3, 200);
    save(root, &format!("{PIECE}/score.mid"), &s);
    for k in 0..4 {
        save(root, &format!("{PIECE}/aria_t{k}.mid"), &performance(&s, k, 0.01));
    }
    let (_, rows) = cmd_clean(&ctx(root)).unwrap();
    for r in &rows {
        assert_eq!(r.duplicates_removed + r.overlaps_truncated + r.short_removed + r.runaways_repaired, 0, "{r:?}");
    }

    // the cleaned output of a defective corpus, cleaned again
    let dirty = tempfile::tempdir().unwrap();
    save(dirty.path(), &format!("{PIECE}/score.mid"), &s);
    for seed in 0..6 {
        save(dirty.path(), &format!("{PIECE}/atepp_x{seed}.mid"), &defective(seed).0);
    }
    cmd_clean(&ctx(dirty.path())).unwrap();
    let again = tempfile::tempdir().unwrap();
    for seed in 0..6 {
        let cleaned = load_midi(dirty.path().join(format!("{PIECE}/atepp_x{seed}.clean.mid"))).unwrap();
        save(again.path(), &format!("{PIECE}/atepp_x{seed}.mid"), &cleaned);
    }
    save(again.path(), &format!("{PIECE}/score.mid"), &s);
    let (_, rows) = cmd_clean(&ctx(again.path())).unwrap();
    assert!(rows.iter().all(|r| r.duplicates_removed + r.overlaps_truncated + r.short_removed + r.runaways_repaired == 0));
}

#[test]
fn match_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let s = score(10, 300);
    let other = score(11, 300);
    save(root, &format!("{PIECE}/score.mid"), &s);
    save(root, &format!("{PIECE}/asap_deadpan.mid"), &deadpan(&s));
    save(root, &format!("{PIECE}/atepp_other.mid"), &deadpan(&other));

    // repeat skipping: the maximal score plays everything twice
    let minimal = score(12, 200);
    let len = minimal.notes.last().unwrap().onset_beats + 1.0;
    let mut twice = minimal.notes.clone();
    twice.extend(minimal.notes.iter().map(|n| Note { onset_beats: n.onset_beats + len, ..*n }));
    let maximal = NoteSequence::score_from_beats(minimal.tempo.clone(), twice);
    save(root, "Frederic_Chopin/Nocturne_Op9_No2/score.mid", &maximal);
    save(root, "Frederic_Chopin/Nocturne_Op9_No2/score_mini.mid", &minimal);
    save(root, "Frederic_Chopin/Nocturne_Op9_No2/giantmidi_n.mid", &performance(&minimal, 1, 0.01));

    let (outcome, rows) = cmd_match(&ctx(root)).unwrap();
    assert_eq!(outcome.failures, 0);
    let get = |name: &str| rows.iter().find(|r| r.path.ends_with(name)).unwrap();
    let d = get("asap_deadpan.mid");
    assert!(d.definitive);
    assert_eq!(d.recall, Some(1.0));
    let o = get("atepp_other.mid");
    assert_eq!(o.status, "matched");
    assert!(!o.definitive && o.recall.unwrap() <= 0.7);
    let n = get("giantmidi_n.mid");
    assert_eq!(n.variant, "minimal");
    assert!(n.definitive);
    assert!(root.join(&d.alignment).exists());
}

/// Renderings with a few missing notes and loose timing, so recalls sit
/// near the top band edge.
fn refine_corpus(root: &Path, pairs: u64) {
    refine_corpus_with(root, pairs, 0.03, 8)
}

fn refine_corpus_with(root: &Path, pairs: u64, jitter: f64, drop_pct: usize) {
    for seed in 0..pairs {
        let dir = format!("Liszt_Franz/Etude_No{seed}");
        let s = score(100 + seed, 300);
        save(root, &format!("{dir}/score.mid"), &s);
        let p = performance(&s, seed, jitter);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(0..p.len() * drop_pct / 100);
        let drop: BTreeSet<usize> = sample(&mut rng, p.len(), k).into_iter().collect();
        let kept = p.notes.iter().enumerate().filter(|(i, _)| !drop.contains(i)).map(|(_, n)| *n).collect();
        save(root, &format!("{dir}/atepp_p.mid"), &p.with_notes(kept));
    }
}

/// Renderings with large chords, one late note in some of them and a few
/// missing notes. The late notes are intra-chord outliers, so onset
/// cleaning lowers recall and moves pairs across the top band edge.
fn boundary_corpus(root: &Path, pairs: u64) {
    let shape = ScoreShape { max_chord: 8, ..ScoreShape::default() };
    for seed in 0..pairs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dir = format!("Liszt_Franz/Study_No{seed}");
        let s = random_score(&mut rng, 300, &shape);
        save(root, &format!("{dir}/score.mid"), &s);
        let beats = s.notes.last().unwrap().onset_beats + 1.0;
        let warp = Warp::random(&mut rng, beats, (60.0, 120.0));
        let r = render(&s, &warp, 0.003, (40, 90), &mut rng);
        let mut notes = r.perf.notes.clone();
        let mut chords: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, n) in s.notes.iter().enumerate() {
            chords.entry(n.onset_beats.to_bits()).or_default().push(i);
        }
        for members in chords.values().filter(|m| m.len() >= 6) {
            if rng.gen_bool(0.5) {
                notes[r.truth[members[0]]].onset += 0.02;
            }
        }
        let k = rng.gen_range(0..notes.len() * 5 / 100);
        let drop: BTreeSet<usize> = sample(&mut rng, notes.len(), k).into_iter().collect();
        let kept: Vec<Note> = notes.iter().enumerate().filter(|(i, _)| !drop.contains(i)).map(|(_, n)| *n).collect();
        let perf = truncate_overlaps(&canonical_sort(&r.perf.with_notes(kept))).0;
        save(root, &format!("{dir}/atepp_p.mid"), &perf);
    }
}

#[test]
fn refine_reports_bands_and_converges() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    boundary_corpus(root, 24);
    cmd_clean(&ctx(root)).unwrap();
    cmd_match(&ctx(root)).unwrap();
    let (outcome, rows, bands) = cmd_refine(&ctx(root), false).unwrap();
    assert_eq!(outcome.failures, 0);
    for r in &rows {
        assert_eq!(r.status, "refined");
        let (a, h, o) = (r.recall_raw.unwrap(), r.recall_h.unwrap(), r.recall_ho.unwrap());
        assert!(a >= h && h >= o, "{r:?}");
    }
    let all = bands.last().unwrap();
    assert!(all.ho_mean.unwrap() < all.raw_mean.unwrap());
    assert!(bands[0].ho_pct < bands[0].raw_pct, "{bands:?}");

    let (_, again, _) = cmd_refine(&ctx(root), false).unwrap();
    assert!(again.iter().all(|r| r.modifications == 0), "{again:?}");

    let m = CorpusManifest::load(root).unwrap();
    let e = &m.records[0].performances[0];
    assert!(root.join(e.refined.as_ref().unwrap()).exists());
    assert!(e.stage_recalls.contains_key("interpolated"));
    let csv = fs::read_to_string(root.join("reports/refine_bands.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn recall_floor_interrupts() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    refine_corpus(root, 3);
    cmd_match(&ctx(root)).unwrap();
    let (outcome, rows, _) = cmd_refine(&ctx_with(root, |s| s.refine.recall_floor = Some(1.01)), false).unwrap();
    assert_eq!(outcome.failures, 0);
    assert!(rows.iter().all(|r| r.status == "interrupted" && r.recall_ho.is_some()));
}

#[test]
fn dedup_flags_copies_and_prefers_sources() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = score(20, 200);
    save(root, &format!("{PIECE}/score.mid"), &s);
    let originals: Vec<NoteSequence> = (0..6).map(|k| performance(&s, 50 + k, 0.01)).collect();
    for (k, p) in originals.iter().enumerate() {
        save(root, &format!("{PIECE}/atepp_o{k}.mid"), p);
    }
    for k in 0..3 {
        let mut copy = originals[k].clone();
        let shift = rng.gen_range(0.5..3.0);
        for n in &mut copy.notes {
            n.onset += shift + rng.gen_range(-0.04..0.04);
        }
        save(root, &format!("{PIECE}/asap_c{k}.mid"), &copy);
    }
    let (_, rows) = cmd_dedup(&ctx(root)).unwrap();
    for k in 0..3 {
        let copy = rows.iter().find(|r| r.path.ends_with(&format!("asap_c{k}.mid"))).unwrap();
        let orig = rows.iter().find(|r| r.path.ends_with(&format!("atepp_o{k}.mid"))).unwrap();
        assert!(copy.lead, "asap outranks atepp");
        assert_eq!(orig.lead_path, copy.path);
        assert_eq!(copy.cluster_size, 2);
    }
    for k in 3..6 {
        let r = rows.iter().find(|r| r.path.ends_with(&format!("atepp_o{k}.mid"))).unwrap();
        assert!(r.lead && r.cluster_size == 1);
    }

    let (_, _) = cmd_dedup(&ctx_with(root, |s| s.quarantine = true)).unwrap();
    assert!(root.join(format!("{PIECE}/quarantine/atepp_o0.mid")).exists());
    assert!(!root.join(format!("{PIECE}/atepp_o0.mid")).exists());
    let m = CorpusManifest::load(root).unwrap();
    assert!(m.records[0].performances.iter().any(|p| p.path.contains("quarantine/")));
}

#[test]
fn labels_by_origin_and_alignment() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let s = score(30, 300);
    save(root, &format!("{PIECE}/score.mid"), &s);
    for k in 0..3 {
        save(root, &format!("{PIECE}/asap_r{k}.mid"), &performance(&s, k, 0.01));
    }
    let (_, _, summary) = cmd_label(&ctx(root)).unwrap();
    assert_eq!(summary.counts["high_quality"], 3);

    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    for k in 0..4u64 {
        let s = score(40 + k, 300);
        let d = format!("Bach/Invention_No{k}");
        save(root, &format!("{d}/score.mid"), &s);
        save(root, &format!("{d}/aria_s.mid"), &scoreify(&deadpan(&s), k));
        let base = performance(&s, k, 0.01);
        save(root, &format!("{d}/atepp_c.mid"), &corrupt(&base, CorruptionLevel::Corrupted, k).unwrap());
    }
    cmd_match(&ctx(root)).unwrap();
    let (_, rows, summary) = cmd_label(&ctx(root)).unwrap();
    for r in rows.iter().filter(|r| r.path.ends_with("aria_s.mid")) {
        assert_eq!(r.label, "high_quality");
        assert!(r.adjusted_ratio.unwrap() > 0.99);
    }
    let bad = rows.iter().filter(|r| r.path.ends_with("atepp_c.mid")).filter(|r| r.label == "corrupted" || r.label == "no_label").count();
    assert!(bad >= 3, "{rows:?}");
    assert_eq!(summary.counts["score"], 4);
}

#[test]
fn stats_counts() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let s = score(50, 40);
    save(root, &format!("{PIECE}/score.mid"), &s);
    let p = deadpan(&s);
    for k in 0..8 {
        save(root, &format!("{PIECE}/atepp_{k}.mid"), &p);
    }
    for (piece, n) in [("Frederic_Chopin/Ballade_No1", 2), ("Bach_Johann_Sebastian/Fugue_No2", 3)] {
        save(root, &format!("{piece}/score.mid"), &s);
        for k in 0..n {
            save(root, &format!("{piece}/aria_{k}.mid"), &p);
        }
    }
    let (_, st) = cmd_stats(&ctx(root)).unwrap();
    assert_eq!((st.pieces, st.performances, st.composers), (3, 13, 2));
    assert_eq!(st.median_performances_per_piece, 3.0);
    assert!((st.mean_performances_per_piece - 13.0 / 3.0).abs() < 1e-12);
    assert_eq!(st.per_composer["chopin,frederic"], (2, 10));
    assert!((st.hours - 13.0 * p.end_time() / 3600.0).abs() < 1e-3);

    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    save(root, &format!("{PIECE}/score.mid"), &s);
    for k in 0..8 {
        save(root, &format!("{PIECE}/atepp_{k}.mid"), &p);
    }
    assert_eq!(cmd_stats(&ctx(root)).unwrap().1.median_performances_per_piece, 8.0);

    let empty = tempfile::tempdir().unwrap();
    let (_, st) = cmd_stats(&ctx(empty.path())).unwrap();
    assert_eq!((st.pieces, st.performances, st.hours, st.median_performances_per_piece), (0, 0, 0.0, 0.0));
    let csv = fs::read_to_string(empty.path().join("reports/stats_composers.csv")).unwrap();
    assert_eq!(csv, "composer,pieces,performances\n");
}

#[test]
fn one_bad_file_fails_only_its_row() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let s = score(60, 100);
    save(root, &format!("{PIECE}/score.mid"), &s);
    save(root, &format!("{PIECE}/atepp_good.mid"), &deadpan(&s));
    fs::write(root.join(format!("{PIECE}/atepp_bad.mid")), b"MThd garbage").unwrap();
    let (outcome, rows) = cmd_clean(&ctx(root)).unwrap();
    assert_eq!(outcome.failures, 1);
    assert_eq!(outcome.exit_code(), 1);
    assert!(rows.iter().any(|r| r.path.ends_with("atepp_good.mid") && r.error.is_empty()));
    let (outcome, rows) = cmd_match(&ctx(root)).unwrap();
    assert_eq!(outcome.failures, 1);
    assert!(rows.iter().any(|r| r.path.ends_with("atepp_good.mid") && r.definitive));
}

fn report_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(root.join("reports"))
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn identical_inputs_give_identical_reports() {
    let a = tempfile::tempdir().unwrap();
    refine_corpus(a.path(), 6);
    let b = tempfile::tempdir().unwrap();
    copy_tree(a.path(), b.path());
    for (root, workers) in [(a.path(), 1), (b.path(), 4)] {
        let c = ctx_with(root, |s| s.workers = workers);
        cmd_clean(&c).unwrap();
        cmd_match(&c).unwrap();
        cmd_refine(&c, false).unwrap();
        cmd_dedup(&c).unwrap();
        cmd_label(&c).unwrap();
        cmd_stats(&c).unwrap();
    }
    assert_eq!(report_bytes(a.path()), report_bytes(b.path()));
    assert_eq!(fs::read(a.path().join(MANIFEST_FILE)).unwrap(), fs::read(b.path().join(MANIFEST_FILE)).unwrap());
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    refine_corpus(root, 2);
    let c = perfcurate_cli::Context::new(root, perfcurate_cli::Settings::default(), true).unwrap();
    cmd_clean(&c).unwrap();
    cmd_match(&c).unwrap();
    assert!(!root.join("reports").exists());
    assert!(!root.join(MANIFEST_FILE).exists());
    assert_eq!(fs::read_dir(root.join("Liszt_Franz/Etude_No0")).unwrap().count(), 2);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_perfcurate"))
}

#[test]
fn binary_exit_codes_and_config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let status = bin().args(["--root", "/nonexistent/corpus", "clean"]).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let s = score(70, 80);
    save(root, &format!("{PIECE}/score.mid"), &s);
    save(root, &format!("{PIECE}/atepp_ok.mid"), &deadpan(&s));
    let status = bin().arg("--root").arg(root).arg("clean").status().unwrap();
    assert_eq!(status.code(), Some(0));
    let broken = tempfile::tempdir().unwrap();
    save(broken.path(), &format!("{PIECE}/score.mid"), &s);
    save(broken.path(), &format!("{PIECE}/atepp_ok.mid"), &deadpan(&s));
    fs::write(broken.path().join(format!("{PIECE}/atepp_broken.mid")), b"nope").unwrap();
    let status = bin().arg("--root").arg(broken.path()).arg("match").status().unwrap();
    assert_eq!(status.code(), Some(1));

    fs::write(root.join("perfcurate.conf"), "hole_window=15\ntempo_max=400\n").unwrap();
    let out = bin().arg("--root").arg(root).args(["--set", "tempo_max=300", "--workers", "3", "config"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("hole_window=15\n"));
    assert!(text.contains("tempo_max=300\n"));
    assert!(text.contains("workers=3\n"));
    let status = bin().arg("--root").arg(root).args(["--set", "bogus=1", "config"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

