use crate::note::{NoteSequence, SequenceKind};

/// Default clustering epsilon for scores, in beats.
pub const SCORE_EPSILON: f64 = 0.0;
/// Default clustering epsilon for performances, in seconds.
pub const PERF_EPSILON: f64 = 0.025;

/// Notes sharing (approximately) one onset.
#[derive(Debug, Clone, PartialEq)]
pub struct OnsetCluster {
    /// Onset of the first member (beats for scores, seconds otherwise).
    pub onset: f64,
    /// Member pitches, ascending.
    pub pitches: Vec<u8>,
    /// Member indices into the sequence, in sequence order.
    pub note_indices: Vec<usize>,
}

/// Greedy left-to-right grouping. A note joins the open cluster iff its
/// onset is within `epsilon` of the cluster's first onset (inclusive).
/// Scores are grouped on beat onsets, performances on seconds.
pub fn cluster_onsets(seq: &NoteSequence, epsilon: f64) -> Vec<OnsetCluster> {
    let onset_of = |i: usize| match seq.kind {
        SequenceKind::Score => seq.notes[i].onset_beats,
        SequenceKind::Performance => seq.notes[i].onset,
    };
    let mut order: Vec<usize> = (0..seq.len()).collect();
    order.sort_by(|&a, &b| onset_of(a).total_cmp(&onset_of(b)).then(a.cmp(&b)));
    let mut out: Vec<OnsetCluster> = Vec::new();
    for i in order {
        let t = onset_of(i);
        match out.last_mut() {
            Some(c) if t - c.onset <= epsilon => c.note_indices.push(i),
            _ => out.push(OnsetCluster { onset: t, pitches: Vec::new(), note_indices: vec![i] }),
        }
    }
    for c in &mut out {
        c.note_indices.sort_unstable();
        c.pitches = c.note_indices.iter().map(|&i| seq.notes[i].pitch).collect();
        c.pitches.sort_unstable();
    }
    out
}

/// Size of the multiset intersection of two ascending pitch lists.
pub fn multiset_intersection(a: &[u8], b: &[u8]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// `1 - |A ∩ B| / |A ∪ B|` over pitch multisets; 0 for two empty sets.
pub fn jaccard_cost(a: &[u8], b: &[u8]) -> f64 {
    let inter = multiset_intersection(a, b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}
