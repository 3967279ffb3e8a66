use crate::note::NoteSequence;

/// Removes performance notes without a match and compacts the indices.
/// Returns the number of notes removed.
pub fn strip_unaligned(perf: &mut NoteSequence, s2p: &mut [Option<usize>]) -> usize {
    let mut keep = vec![false; perf.len()];
    for p in s2p.iter().flatten() {
        keep[*p] = true;
    }
    let mut new_index = vec![usize::MAX; perf.len()];
    let mut next = 0;
    for (i, k) in keep.iter().enumerate() {
        if *k {
            new_index[i] = next;
            next += 1;
        }
    }
    let removed = perf.len() - next;
    if removed > 0 {
        let notes = perf.notes.iter().zip(&keep).filter(|(_, k)| **k).map(|(n, _)| *n).collect();
        perf.notes = notes;
        for p in s2p.iter_mut().flatten() {
            *p = new_index[*p];
        }
    }
    removed
}
