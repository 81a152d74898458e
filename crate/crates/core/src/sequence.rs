//! Domain types shared across the crate: interaction records, per-user
//! sequences, interval sequences and datasets.
//!
//! Timestamps are integer seconds, so interval arithmetic is exact. The
//! interval standard deviation is the population deviation, evaluated from
//! exact integer moments `n * sum(x^2) - sum(x)^2` and only then converted to
//! floating point. Two interval sequences holding the same multiset of gaps
//! therefore always get bit-identical deviations, regardless of order.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One `(user, item, timestamp)` event.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub user_id: String,
    pub item_id: String,
    pub timestamp: i64,
}

impl InteractionRecord {
    pub fn new(
        user_id: impl Into<String>,
        item_id: impl Into<String>,
        timestamp: i64,
    ) -> Result<Self> {
        let user_id = user_id.into();
        let item_id = item_id.into();
        if user_id.is_empty() {
            return Err(Error::Invalid("empty user id".into()));
        }
        if item_id.is_empty() {
            return Err(Error::Invalid("empty item id".into()));
        }
        if timestamp < 0 {
            return Err(Error::Invalid(format!("negative timestamp {timestamp}")));
        }
        Ok(Self {
            user_id,
            item_id,
            timestamp,
        })
    }
}

/// Chronologically ordered items of a single user.
///
/// Always non-empty, with one timestamp per item and non-decreasing
/// timestamps. Equal timestamps are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserSequence {
    user_id: String,
    items: Vec<String>,
    timestamps: Vec<i64>,
}

impl UserSequence {
    pub fn new(user_id: impl Into<String>, items: Vec<String>, timestamps: Vec<i64>) -> Result<Self> {
        let user_id = user_id.into();
        if user_id.is_empty() {
            return Err(Error::Invalid("empty user id".into()));
        }
        if items.is_empty() {
            return Err(Error::Invalid(format!("sequence for {user_id} is empty")));
        }
        if items.len() != timestamps.len() {
            return Err(Error::Invalid(format!(
                "sequence for {user_id} has {} items but {} timestamps",
                items.len(),
                timestamps.len()
            )));
        }
        if items.iter().any(String::is_empty) {
            return Err(Error::Invalid(format!("sequence for {user_id} has an empty item id")));
        }
        if timestamps.iter().any(|&t| t < 0) {
            return Err(Error::Invalid(format!("sequence for {user_id} has a negative timestamp")));
        }
        if timestamps.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Invalid(format!(
                "timestamps for {user_id} are not non-decreasing"
            )));
        }
        Ok(Self {
            user_id,
            items,
            timestamps,
        })
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn intervals(&self) -> IntervalSequence {
        intervals(self)
    }

    pub fn interval_std(&self) -> f64 {
        interval_std(&self.intervals())
    }

    /// Contiguous sub-sequence `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::Invalid(format!(
                "slice {start}..{end} out of bounds for length {}",
                self.len()
            )));
        }
        Ok(Self {
            user_id: self.user_id.clone(),
            items: self.items[start..end].to_vec(),
            timestamps: self.timestamps[start..end].to_vec(),
        })
    }

    /// Keeps the `max_len` most recent interactions.
    pub fn keep_last(&self, max_len: usize) -> Self {
        let start = self.len().saturating_sub(max_len.max(1));
        Self {
            user_id: self.user_id.clone(),
            items: self.items[start..].to_vec(),
            timestamps: self.timestamps[start..].to_vec(),
        }
    }

    pub fn with_user_id(&self, user_id: impl Into<String>) -> Self {
        Self {
            user_id: user_id.into(),
            items: self.items.clone(),
            timestamps: self.timestamps.clone(),
        }
    }

    pub fn into_parts(self) -> (String, Vec<String>, Vec<i64>) {
        (self.user_id, self.items, self.timestamps)
    }

    /// Flattens back into interaction records, in sequence order.
    pub fn records(&self) -> impl Iterator<Item = InteractionRecord> + '_ {
        self.items
            .iter()
            .zip(&self.timestamps)
            .map(move |(item, &timestamp)| InteractionRecord {
                user_id: self.user_id.clone(),
                item_id: item.clone(),
                timestamp,
            })
    }
}

/// Gaps between consecutive timestamps of one sequence (`N - 1` entries).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntervalSequence(Vec<i64>);

impl IntervalSequence {
    /// Builds from raw gaps; every gap must be non-negative.
    pub fn new(gaps: Vec<i64>) -> Result<Self> {
        if let Some(g) = gaps.iter().find(|&&g| g < 0) {
            return Err(Error::Invalid(format!("negative interval {g}")));
        }
        Ok(Self(gaps))
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<i64> {
        self.0
    }

    pub fn mean(&self) -> f64 {
        interval_mean(&self.0)
    }

    pub fn std(&self) -> f64 {
        interval_std(&self.0)
    }
}

impl Deref for IntervalSequence {
    type Target = [i64];

    fn deref(&self) -> &[i64] {
        &self.0
    }
}

/// Pairwise timestamp differences of `seq`, in order.
pub fn intervals(seq: &UserSequence) -> IntervalSequence {
    IntervalSequence(timestamp_gaps(&seq.timestamps))
}

pub(crate) fn timestamp_gaps(timestamps: &[i64]) -> Vec<i64> {
    timestamps.windows(2).map(|w| w[1] - w[0]).collect()
}

/// `n * sum(x^2) - (sum x)^2`, i.e. `n^2` times the population variance,
/// computed exactly.
pub fn scaled_variance(gaps: &[i64]) -> i128 {
    let n = gaps.len() as i128;
    let (sum, sum_sq) = gaps.iter().fold((0i128, 0i128), |(s, q), &x| {
        let x = x as i128;
        (s + x, q + x * x)
    });
    n * sum_sq - sum * sum
}

/// Population standard deviation of `gaps`; zero for fewer than two gaps.
pub fn interval_std(gaps: &[i64]) -> f64 {
    let n = gaps.len();
    if n <= 1 {
        return 0.0;
    }
    let numerator = scaled_variance(gaps);
    let denom = (n as f64) * (n as f64);
    (numerator as f64 / denom).sqrt()
}

pub fn interval_mean(gaps: &[i64]) -> f64 {
    if gaps.is_empty() {
        return 0.0;
    }
    let sum: i128 = gaps.iter().map(|&x| x as i128).sum();
    sum as f64 / gaps.len() as f64
}

/// Interval statistics for one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalProfile {
    pub user_id: String,
    pub std: f64,
    pub mean: f64,
    pub n_intervals: usize,
}

impl IntervalProfile {
    pub fn of(seq: &UserSequence) -> Self {
        let iv = seq.intervals();
        Self {
            user_id: seq.user_id.clone(),
            std: iv.std(),
            mean: iv.mean(),
            n_intervals: iv.len(),
        }
    }
}

/// All user sequences plus the item catalog they draw from.
///
/// Users are kept in lexicographic order so iteration, serialization and
/// every downstream tie-break are deterministic. The catalog may contain
/// items that no sequence uses (e.g. after partitioning).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    sequences: BTreeMap<String, UserSequence>,
    item_catalog: BTreeSet<String>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Catalog is the union of the sequences' items. Duplicate users are rejected.
    pub fn from_sequences(sequences: impl IntoIterator<Item = UserSequence>) -> Result<Self> {
        let mut ds = Self::new();
        for seq in sequences {
            ds.insert(seq)?;
        }
        Ok(ds)
    }

    /// Like [`Dataset::from_sequences`] but with an explicit catalog that
    /// must cover every item used.
    pub fn with_catalog(
        sequences: impl IntoIterator<Item = UserSequence>,
        item_catalog: BTreeSet<String>,
    ) -> Result<Self> {
        let mut ds = Self {
            sequences: BTreeMap::new(),
            item_catalog,
        };
        for seq in sequences {
            if let Some(item) = seq.items().iter().find(|i| !ds.item_catalog.contains(*i)) {
                return Err(Error::Invalid(format!(
                    "item {item} of user {} is not in the catalog",
                    seq.user_id()
                )));
            }
            ds.insert(seq)?;
        }
        Ok(ds)
    }

    pub fn insert(&mut self, seq: UserSequence) -> Result<()> {
        if self.sequences.contains_key(seq.user_id()) {
            return Err(Error::Invalid(format!("duplicate user {}", seq.user_id())));
        }
        self.item_catalog.extend(seq.items().iter().cloned());
        self.sequences.insert(seq.user_id.clone(), seq);
        Ok(())
    }

    /// Adds items to the catalog without touching any sequence.
    pub fn extend_catalog<I: IntoIterator<Item = String>>(&mut self, items: I) {
        self.item_catalog.extend(items);
    }

    pub fn get(&self, user_id: &str) -> Option<&UserSequence> {
        self.sequences.get(user_id)
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn sequences(&self) -> impl ExactSizeIterator<Item = &UserSequence> + '_ {
        self.sequences.values()
    }

    pub fn users(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.sequences.keys().map(String::as_str)
    }

    pub fn item_catalog(&self) -> &BTreeSet<String> {
        &self.item_catalog
    }

    pub fn n_interactions(&self) -> usize {
        self.sequences.values().map(UserSequence::len).sum()
    }

    /// Sub-dataset of the named users; unknown names are ignored. The full
    /// catalog is kept so rankings over subsets still cover every item.
    pub fn subset<'a>(&self, users: impl IntoIterator<Item = &'a str>) -> Self {
        let sequences = users
            .into_iter()
            .filter_map(|u| self.sequences.get(u).map(|s| (u.to_string(), s.clone())))
            .collect();
        Self {
            sequences,
            item_catalog: self.item_catalog.clone(),
        }
    }

    pub fn records(&self) -> impl Iterator<Item = InteractionRecord> + '_ {
        self.sequences.values().flat_map(UserSequence::records)
    }

    pub fn into_sequences(self) -> impl Iterator<Item = UserSequence> {
        self.sequences.into_values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(ts: &[i64]) -> UserSequence {
        let items = (0..ts.len()).map(|i| format!("i{i}")).collect();
        UserSequence::new("u", items, ts.to_vec()).unwrap()
    }

    #[test]
    fn intervals_are_pairwise_differences() {
        assert_eq!(seq(&[0, 10, 20, 30]).intervals().as_slice(), &[10, 10, 10]);
        assert!(seq(&[5]).intervals().is_empty());
        assert_eq!(seq(&[0, 1, 2, 10]).intervals().as_slice(), &[1, 1, 8]);
    }

    #[test]
    fn std_examples() {
        assert_eq!(interval_std(&[10, 10, 10]), 0.0);
        assert_eq!(interval_std(&[]), 0.0);
        assert_eq!(interval_std(&[42]), 0.0);
        // independent evaluation: sqrt(((1-10/3)^2*2 + (8-10/3)^2)/3)
        let expected = 3.299_831_645_537_222;
        assert!((interval_std(&[1, 1, 8]) - expected).abs() < 1e-12);
    }

    #[test]
    fn std_is_order_independent_bitwise() {
        let a = interval_std(&[3, 17, 1, 900, 4]);
        let b = interval_std(&[900, 4, 1, 3, 17]);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn sequence_validation() {
        assert!(UserSequence::new("u", vec![], vec![]).is_err());
        assert!(UserSequence::new("u", vec!["a".into()], vec![1, 2]).is_err());
        assert!(UserSequence::new("u", vec!["a".into(), "b".into()], vec![5, 4]).is_err());
        assert!(UserSequence::new("", vec!["a".into()], vec![1]).is_err());
        assert!(UserSequence::new("u", vec!["a".into(), "b".into()], vec![4, 4]).is_ok());
    }

    #[test]
    fn record_validation() {
        assert!(InteractionRecord::new("u", "i", -1).is_err());
        assert!(InteractionRecord::new("", "i", 1).is_err());
        assert!(InteractionRecord::new("u", "", 1).is_err());
        assert!(InteractionRecord::new("u", "i", 0).is_ok());
    }

    #[test]
    fn profile_of_short_sequences_is_zero() {
        let p = IntervalProfile::of(&seq(&[7, 7]));
        assert_eq!(p.std, 0.0);
        assert_eq!(p.n_intervals, 1);
    }

    #[test]
    fn dataset_rejects_duplicates_and_foreign_items() {
        let mut ds = Dataset::new();
        ds.insert(seq(&[0, 1])).unwrap();
        assert!(ds.insert(seq(&[0, 1])).is_err());
        let catalog: BTreeSet<String> = ["i0".to_string()].into();
        assert!(Dataset::with_catalog([seq(&[0, 1])], catalog).is_err());
    }
}
