//! Uniformity statistics: per-user interval profiles, the ascending-std
//! ranking, ratio thresholds, the uniform-proportion curve and the
//! top-sigma gate.
//!
//! A sequence counts as uniform at a threshold when its std is `<=` the
//! threshold, so ratio 0 captures every zero-std sequence.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sequence::{Dataset, IntervalProfile};

/// `floor(ratio * n)`, tolerant of binary rounding just below an integer
/// (e.g. `0.29 * 100`).
pub fn ratio_count(ratio: f64, n: usize) -> usize {
    let raw = ratio * n as f64;
    let count = (raw + 1e-9).floor();
    (count.max(0.0) as usize).min(n)
}

pub fn profile(ds: &Dataset) -> BTreeMap<String, IntervalProfile> {
    let seqs: Vec<_> = ds.sequences().collect();
    seqs.par_iter()
        .map(|s| (s.user_id().to_string(), IntervalProfile::of(s)))
        .collect()
}

/// Users ordered from most to least uniform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityRanking {
    entries: Vec<(String, f64)>,
}

impl UniformityRanking {
    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn users(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.entries.iter().map(|(u, _)| u.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Ascending std, ties by user id.
pub fn rank_by_std(ds: &Dataset) -> UniformityRanking {
    let mut entries: Vec<(String, f64)> = profile(ds)
        .into_iter()
        .map(|(user, p)| (user, p.std))
        .collect();
    entries.sort_by(|a, b| match a.1.total_cmp(&b.1) {
        Ordering::Equal => a.0.cmp(&b.0),
        other => other,
    });
    UniformityRanking { entries }
}

fn mean_std(ds: &Dataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Domain("dataset has no users".into()));
    }
    let total: f64 = profile(ds).values().map(|p| p.std).sum();
    Ok(total / ds.len() as f64)
}

/// `ratio` times the mean per-user interval std.
pub fn uniformity_threshold(ds: &Dataset, ratio: f64) -> Result<f64> {
    check_ratio(ratio)?;
    Ok(ratio * mean_std(ds)?)
}

fn check_ratio(ratio: f64) -> Result<()> {
    if !ratio.is_finite() || ratio < 0.0 {
        return Err(Error::Invalid(format!("ratio must be a non-negative number, got {ratio}")));
    }
    Ok(())
}

/// Fraction of users whose std is at most `ratio * mean std`, for each
/// ratio. Ratios must be ascending.
pub fn uniform_ratio_curve(ds: &Dataset, ratios: &[f64]) -> Result<Vec<(f64, f64)>> {
    for &r in ratios {
        check_ratio(r)?;
    }
    if ratios.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Invalid("ratios must be sorted ascending".into()));
    }
    let mean = mean_std(ds)?;
    let mut stds: Vec<f64> = profile(ds).values().map(|p| p.std).collect();
    stds.sort_by(f64::total_cmp);
    let n = stds.len() as f64;
    Ok(ratios
        .iter()
        .map(|&r| {
            let threshold = r * mean;
            let uniform = stds.partition_point(|&s| s <= threshold);
            (r, uniform as f64 / n)
        })
        .collect())
}

/// The `floor(sigma * |users|)` most uniform users.
pub fn classify_top_sigma(ds: &Dataset, sigma: f64) -> Result<BTreeSet<String>> {
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::Invalid(format!("sigma must lie in [0, 1], got {sigma}")));
    }
    let ranking = rank_by_std(ds);
    let count = ratio_count(sigma, ranking.len());
    Ok(ranking.users().take(count).map(str::to_string).collect())
}
