//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the selection code it checks.

#![allow(dead_code)]

use rand::Rng;
use tiaug::UserSequence;

pub fn gaps_of(ts: &[i64]) -> Vec<i64> {
    ts.windows(2).map(|w| w[1] - w[0]).collect()
}

/// `sum((m * x - S)^2)`: `m^3` times the population variance, exact.
pub fn two_pass_scaled_variance(gaps: &[i64]) -> i128 {
    let m = gaps.len() as i128;
    let s: i128 = gaps.iter().map(|&g| g as i128).sum();
    gaps.iter().map(|&g| (m * g as i128 - s).pow(2)).sum()
}

/// Two-pass floating point population std.
pub fn naive_std(gaps: &[i64]) -> f64 {
    if gaps.len() < 2 {
        return 0.0;
    }
    let n = gaps.len() as f64;
    let mean = gaps.iter().map(|&g| g as f64).sum::<f64>() / n;
    (gaps.iter().map(|&g| (g as f64 - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Earliest start of the length-`len` window with minimal interval variance,
/// scanning every window.
pub fn brute_force_min_window(ts: &[i64], len: usize) -> usize {
    let mut best: Option<(i128, usize)> = None;
    for start in 0..=ts.len() - len {
        let v = two_pass_scaled_variance(&gaps_of(&ts[start..start + len]));
        if best.is_none_or(|(b, _)| v < b) {
            best = Some((v, start));
        }
    }
    best.unwrap().1
}

/// Interval indices of the `h` smallest gaps, ties to the earlier index.
pub fn top_h_ascending(gaps: &[i64], h: usize) -> Vec<usize> {
    let mut pairs: Vec<(i64, usize)> = gaps.iter().copied().zip(0..).collect();
    pairs.sort();
    pairs.into_iter().take(h).map(|(_, j)| j).collect()
}

/// Item positions touched by interval selection `chosen` in a sequence of
/// `n` items, keeping at least `keep` items.
pub fn endpoint_targets(chosen: &[usize], n: usize, keep: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for &j in chosen {
        let t = if j + 1 == n - 1 { j } else { j + 1 };
        if !out.contains(&t) {
            out.push(t);
        }
    }
    while out.len() + keep > n {
        out.pop();
    }
    out.sort();
    out
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Timestamps from `n - 1` random gaps. Small gap ranges make ties common.
pub fn random_timestamps<R: Rng>(rng: &mut R, n: usize) -> Vec<i64> {
    let hi = *[3i64, 10, 1_000, 1_000_000]
        .get(rng.random_range(0..4))
        .unwrap();
    let mut t = rng.random_range(0..1_000_000i64);
    let mut ts = vec![t];
    for _ in 1..n {
        t += rng.random_range(0..=hi);
        ts.push(t);
    }
    ts
}

pub fn sequence(user: &str, ts: &[i64]) -> UserSequence {
    let items = (0..ts.len()).map(|i| format!("{user}-v{i}")).collect();
    UserSequence::new(user, items, ts.to_vec()).unwrap()
}
