//! Dynamic time warping with an optional Sakoe–Chiba band.

/// Accumulated cost and warping path (pairs of indices, both
/// non-decreasing, from `(0, 0)` to `(n - 1, m - 1)`).
#[derive(Debug, Clone, PartialEq)]
pub struct DtwResult {
    pub cost: f64,
    pub path: Vec<(usize, usize)>,
}

const DIAG: u8 = 0;
const UP: u8 = 1;
const LEFT: u8 = 2;

/// Column range `[lo, hi]` allowed in each row. With `band = None` the
/// whole matrix is used; otherwise a band of half-width `band` around the
/// rescaled diagonal, widened where needed so rows stay connected.
fn row_ranges(n: usize, m: usize, band: Option<usize>) -> Vec<(usize, usize)> {
    let Some(w) = band else { return vec![(0, m - 1); n] };
    let slope = if n > 1 { (m - 1) as f64 / (n - 1) as f64 } else { 0.0 };
    let mut r: Vec<(usize, usize)> = (0..n)
        .map(|i| {
            let c = i as f64 * slope;
            let lo = (c - w as f64).floor().max(0.0) as usize;
            let hi = ((c + w as f64).ceil() as usize).min(m - 1);
            (lo, hi)
        })
        .collect();
    r[0].0 = 0;
    r[n - 1].1 = m - 1;
    for i in 1..n {
        if r[i].0 > r[i - 1].1 + 1 {
            r[i - 1].1 = r[i].0 - 1;
        }
    }
    r
}

/// DTW over an `n × m` grid with steps (1,1), (1,0), (0,1). Ties prefer
/// the diagonal step, then (1,0). Returns `None` for an empty side.
pub fn dtw(n: usize, m: usize, band: Option<usize>, cost: impl Fn(usize, usize) -> f64) -> Option<DtwResult> {
    if n == 0 || m == 0 {
        return None;
    }
    let ranges = row_ranges(n, m, band);
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0usize);
    for &(lo, hi) in &ranges {
        offsets.push(offsets.last().unwrap() + hi - lo + 1);
    }
    let mut dirs = vec![DIAG; *offsets.last().unwrap()];
    let mut prev: Vec<f64> = Vec::new();
    let mut prev_range = (0, 0);
    for (i, &(lo, hi)) in ranges.iter().enumerate() {
        let mut cur = vec![f64::INFINITY; hi - lo + 1];
        let prev_at = |j: usize, prev: &Vec<f64>| -> f64 {
            if i == 0 || j < prev_range.0 || j > prev_range.1 {
                f64::INFINITY
            } else {
                prev[j - prev_range.0]
            }
        };
        for j in lo..=hi {
            let c = cost(i, j);
            let (best, dir) = if i == 0 && j == 0 {
                (0.0, DIAG)
            } else {
                let diag = if j > 0 { prev_at(j - 1, &prev) } else { f64::INFINITY };
                let up = prev_at(j, &prev);
                let left = if j > lo { cur[j - 1 - lo] } else { f64::INFINITY };
                let mut b = (diag, DIAG);
                if up < b.0 {
                    b = (up, UP);
                }
                if left < b.0 {
                    b = (left, LEFT);
                }
                b
            };
            cur[j - lo] = best + c;
            dirs[offsets[i] + j - lo] = dir;
        }
        prev = cur;
        prev_range = (lo, hi);
    }
    let total = prev[m - 1 - prev_range.0];
    let mut path = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while i > 0 || j > 0 {
        match dirs[offsets[i] + j - ranges[i].0] {
            DIAG => {
                i -= 1;
                j -= 1;
            }
            UP => i -= 1,
            _ => j -= 1,
        }
        path.push((i, j));
    }
    path.reverse();
    Some(DtwResult { cost: total, path })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_zero_cost_diagonal() {
        let a = [1.0f64, 3.0, 2.0, 5.0];
        let r = dtw(4, 4, None, |i, j| (a[i] - a[j]).abs()).unwrap();
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.path, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
    }

    #[test]
    fn stretched_sequence() {
        let a = [0.0f64, 1.0, 2.0];
        let b = [0.0, 0.0, 1.0, 2.0, 2.0];
        let r = dtw(3, 5, None, |i, j| (a[i] - b[j]).abs()).unwrap();
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.path, vec![(0, 0), (0, 1), (1, 2), (2, 3), (2, 4)]);
    }

    #[test]
    fn band_rows_stay_connected() {
        for (n, m) in [(3, 40), (40, 3), (17, 17), (1, 5), (5, 1)] {
            let r = row_ranges(n, m, Some(1));
            assert_eq!(r[0].0, 0);
            assert_eq!(r[n - 1].1, m - 1);
            for i in 1..n {
                assert!(r[i].0 <= r[i - 1].1 + 1);
                assert!(r[i].0 >= r[i - 1].0);
            }
            assert!(dtw(n, m, Some(1), |_, _| 1.0).unwrap().cost.is_finite());
        }
    }

    #[test]
    fn empty_side() {
        assert!(dtw(0, 3, None, |_, _| 0.0).is_none());
    }
}
