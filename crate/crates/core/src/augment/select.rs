//! Position selection rules for the interval-aware operators.
//!
//! Gap index `j` refers to the interval between items `j` and `j + 1`
//! (0-based).

use std::collections::BTreeSet;

use crate::sequence::scaled_variance;

/// Indices of the `k` largest gaps, largest first; equal gaps keep their
/// original order.
pub fn largest_gaps(gaps: &[i64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..gaps.len()).collect();
    order.sort_by(|&a, &b| gaps[b].cmp(&gaps[a]));
    order.truncate(k);
    order
}

/// Indices of the `h` smallest gaps, smallest first; equal gaps keep their
/// original order.
pub fn smallest_gaps(gaps: &[i64], h: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..gaps.len()).collect();
    order.sort_by_key(|&j| gaps[j]);
    order.truncate(h);
    order
}

/// Maps selected gaps to the items they remove or replace.
///
/// Gap `j` targets item `j + 1`, except the last gap which targets item `j`
/// so the most recent item is never touched. Duplicates are dropped (first
/// occurrence wins) and at most `n_items - keep_at_least` targets are
/// returned, dropping from the end of the selection.
pub fn gap_targets(selected: &[usize], n_items: usize, keep_at_least: usize) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    let mut targets: Vec<usize> = selected
        .iter()
        .map(|&j| if j + 2 == n_items { j } else { j + 1 })
        .filter(|&item| seen.insert(item))
        .collect();
    targets.truncate(n_items.saturating_sub(keep_at_least));
    targets
}

/// Start of the length-`len` window whose gaps have the smallest population
/// variance; the earliest start wins ties.
///
/// Every window has the same number of gaps, so windows are compared on the
/// exact integer quantity `m * sum(x^2) - sum(x)^2` maintained with sliding
/// sums.
pub fn min_std_window(timestamps: &[i64], len: usize) -> usize {
    let n = timestamps.len();
    assert!(len >= 1 && len <= n, "window length {len} invalid for {n} items");
    let m = len - 1;
    if m <= 1 {
        return 0;
    }
    let gaps: Vec<i128> = timestamps.windows(2).map(|w| (w[1] - w[0]) as i128).collect();
    let mut sum: i128 = gaps[..m].iter().sum();
    let mut sum_sq: i128 = gaps[..m].iter().map(|g| g * g).sum();
    let m_i = m as i128;

    let mut best_start = 0;
    let mut best = m_i * sum_sq - sum * sum;
    for start in 1..=(n - len) {
        let out = gaps[start - 1];
        let inc = gaps[start + m - 1];
        sum += inc - out;
        sum_sq += inc * inc - out * out;
        let v = m_i * sum_sq - sum * sum;
        if v < best {
            best = v;
            best_start = start;
        }
    }
    debug_assert_eq!(
        best,
        scaled_variance(
            &timestamps[best_start..best_start + len]
                .windows(2)
                .map(|w| w[1] - w[0])
                .collect::<Vec<_>>()
        )
    );
    best_start
}
