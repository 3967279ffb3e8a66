use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::config::RefineConfig;
use crate::alignment::{Alignment, Link};

/// Which note list a hole is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Score,
    Performance,
}

/// Maximal runs of notes whose centred window (truncated at the edges) has
/// an unaligned fraction above `ratio`. Lists shorter than `window` have no
/// holes.
pub fn hole_ranges(aligned: &[bool], window: usize, ratio: f64) -> Vec<Range<usize>> {
    let n = aligned.len();
    if n < window || n == 0 {
        return Vec::new();
    }
    let half = window / 2;
    let mut prefix = vec![0usize; n + 1];
    for (i, &a) in aligned.iter().enumerate() {
        prefix[i + 1] = prefix[i] + usize::from(!a);
    }
    let mut out: Vec<Range<usize>> = Vec::new();
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        let unaligned = (prefix[hi] - prefix[lo]) as f64 / (hi - lo) as f64;
        if unaligned > ratio {
            match out.last_mut() {
                Some(r) if r.end == i => r.end = i + 1,
                _ => out.push(i..i + 1),
            }
        }
    }
    out
}

/// Holes on one side of an alignment.
pub fn detect_holes(a: &Alignment, side: Side, cfg: &RefineConfig) -> Vec<Range<usize>> {
    let aligned: Vec<bool> = match side {
        Side::Score => a.score_to_perf().iter().map(Option::is_some).collect(),
        Side::Performance => a.perf_to_score().iter().map(Option::is_some).collect(),
    };
    hole_ranges(&aligned, cfg.hole_window, cfg.hole_ratio)
}

/// Unlinks every match whose score index lies in a score hole or whose
/// performance index lies in a performance hole. Returns the new alignment
/// and the number of matches removed.
pub fn remove_hole_links(a: &Alignment, score_holes: &[Range<usize>], perf_holes: &[Range<usize>]) -> (Alignment, usize) {
    let inside = |ranges: &[Range<usize>], i: usize| {
        let k = ranges.partition_point(|r| r.end <= i);
        k < ranges.len() && ranges[k].contains(&i)
    };
    let mut removed = 0;
    let mut links = Vec::with_capacity(a.links().len());
    for l in a.links() {
        match *l {
            Link::Match { score, perf } if inside(score_holes, score) || inside(perf_holes, perf) => {
                removed += 1;
                links.push(Link::Deletion { score });
                links.push(Link::Insertion { perf });
            }
            other => links.push(other),
        }
    }
    let mut out = Alignment::new(links, a.n_score(), a.n_perf()).expect("unlinking keeps indices unique");
    out.stage_recalls = a.stage_recalls.clone();
    (out, removed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fully_matched_has_no_holes() {
        assert!(hole_ranges(&[true; 100], 31, 0.75).is_empty());
    }

    #[test]
    fn fully_unmatched_is_one_hole() {
        assert_eq!(hole_ranges(&[false; 40], 31, 0.75), vec![0..40]);
    }

    #[test]
    fn short_lists_have_no_holes() {
        assert!(hole_ranges(&[false; 30], 31, 0.75).is_empty());
    }

    #[test]
    fn skipped_block() {
        let mask: Vec<bool> = (0..200).map(|i| !(80..140).contains(&i)).collect();
        let holes = hole_ranges(&mask, 31, 0.75);
        assert_eq!(holes.len(), 1);
        // a note at the block edge sees 15 unaligned of 31 neighbours; the
        // fraction passes 0.75 once 24 of 31 are unaligned, 8 notes inside
        assert_eq!(holes[0], 88..132);
    }

    #[test]
    fn removal_counts_each_link_once() {
        let a = Alignment::from_matches((0..10).map(|i| (i, i)), 10, 10).unwrap();
        let (b, removed) = remove_hole_links(&a, &[2..5], &[3..6]);
        assert_eq!(removed, 4);
        assert_eq!(b.n_matched(), 6);
        let (c, removed) = remove_hole_links(&a, &[], &[]);
        assert_eq!(removed, 0);
        assert_eq!(c, a);
    }
}
