use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::similarity::similarity;
use crate::matcher::Source;
use crate::note::NoteSequence;

/// Similarity at or above which two performances are duplicates.
pub const DEFAULT_SIM_THRESHOLD: f64 = 0.5;

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so the result does not depend on edge order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Pairwise similarities `(i, j, value)` with `i < j`.
pub fn pairwise_similarities(perfs: &[NoteSequence], tol: f64) -> Vec<(usize, usize, f64)> {
    let pairs: Vec<(usize, usize)> = (0..perfs.len()).flat_map(|i| (i + 1..perfs.len()).map(move |j| (i, j))).collect();
    pairs
        .par_iter()
        .map(|&(i, j)| (i, j, similarity(&perfs[i], &perfs[j], tol).map_or(0.0, |s| s.value)))
        .collect()
}

/// Single-linkage clusters over the edges with similarity ≥ `threshold`.
///
/// `ids` fixes a canonical order: members are listed by id and clusters by
/// their first member, so the result does not depend on input order.
/// Returned values are indices into `perfs`.
pub fn cluster_duplicates(perfs: &[NoteSequence], ids: &[String], threshold: f64, tol: f64) -> Vec<Vec<usize>> {
    assert_eq!(perfs.len(), ids.len(), "one id per performance");
    let mut order: Vec<usize> = (0..perfs.len()).collect();
    order.sort_by(|&a, &b| ids[a].cmp(&ids[b]).then(a.cmp(&b)));
    let sorted: Vec<NoteSequence> = order.iter().map(|&i| perfs[i].clone()).collect();
    let edges = pairwise_similarities(&sorted, tol);
    clusters_from_edges(sorted.len(), edges.into_iter().filter(|e| e.2 >= threshold).map(|e| (e.0, e.1)))
        .into_iter()
        .map(|c| c.into_iter().map(|k| order[k]).collect())
        .collect()
}

/// Connected components of an undirected graph, each sorted, ordered by
/// smallest member.
pub fn clusters_from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(n);
    for (a, b) in edges {
        uf.union(a, b);
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = uf.find(i);
        groups[r].push(i);
    }
    groups.into_iter().filter(|g| !g.is_empty()).collect()
}

/// Candidate for lead selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadCandidate {
    pub path: String,
    pub source: Source,
    pub recall: Option<f64>,
}

/// Lead rank of a source; lower is preferred.
pub fn source_priority(s: Source) -> u8 {
    match s {
        Source::Asap => 0,
        Source::GiantMidi => 1,
        Source::Atepp => 2,
        Source::Periscope => 3,
        Source::Aria => 4,
        Source::Other => 5,
    }
}

/// Index of the lead: best source, then highest alignment recall (known
/// recall beats unknown), then smallest path. `None` for an empty cluster.
pub fn select_lead(cluster: &[LeadCandidate]) -> Option<usize> {
    (0..cluster.len()).min_by(|&a, &b| {
        let (x, y) = (&cluster[a], &cluster[b]);
        source_priority(x.source)
            .cmp(&source_priority(y.source))
            .then_with(|| match (x.recall, y.recall) {
                (Some(p), Some(q)) => q.total_cmp(&p),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => std::cmp::Ordering::Equal,
            })
            .then_with(|| x.path.cmp(&y.path))
    })
}
