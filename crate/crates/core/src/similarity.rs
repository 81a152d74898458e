//! Item-item co-occurrence model.
//!
//! Two occurrences at distance `1..=window` in the same training sequence
//! count as one co-occurrence of their items (self pairs are skipped). The
//! similarity of two items is the cosine
//! `count(a, b) / (sqrt(pop(a)) * sqrt(pop(b)))`, where `pop` is the number of
//! occurrences of an item. Scaling every count by a constant leaves the
//! cosine unchanged.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::Dataset;

pub const DEFAULT_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityModel {
    window: usize,
    items: Vec<String>,
    index: HashMap<String, usize>,
    cooc: Vec<HashMap<usize, u64>>,
    popularity: Vec<u64>,
    norms: Vec<f64>,
}

impl SimilarityModel {
    /// Fits on the training split; the catalog of `train` defines the
    /// candidate items.
    pub fn fit(train: &Dataset, window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::Invalid("similarity window must be at least 1".into()));
        }
        let items: Vec<String> = train.item_catalog().iter().cloned().collect();
        let index: HashMap<String, usize> =
            items.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let mut cooc = vec![HashMap::new(); items.len()];
        let mut popularity = vec![0u64; items.len()];

        for seq in train.sequences() {
            let ids: Vec<usize> = seq.items().iter().map(|i| index[i]).collect();
            for (p, &a) in ids.iter().enumerate() {
                popularity[a] += 1;
                for &b in ids.iter().skip(p + 1).take(window) {
                    if a != b {
                        *cooc[a].entry(b).or_insert(0) += 1;
                        *cooc[b].entry(a).or_insert(0) += 1;
                    }
                }
            }
        }
        Ok(Self::assemble(window, items, index, cooc, popularity))
    }

    fn assemble(
        window: usize,
        items: Vec<String>,
        index: HashMap<String, usize>,
        cooc: Vec<HashMap<usize, u64>>,
        popularity: Vec<u64>,
    ) -> Self {
        let norms = popularity.iter().map(|&p| (p as f64).sqrt()).collect();
        Self {
            window,
            items,
            index,
            cooc,
            popularity,
            norms,
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Catalog items in index order (lexicographic).
    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn index_of(&self, item: &str) -> Option<usize> {
        self.index.get(item).copied()
    }

    pub fn item(&self, idx: usize) -> &str {
        &self.items[idx]
    }

    pub fn count(&self, a: &str, b: &str) -> u64 {
        match (self.index_of(a), self.index_of(b)) {
            (Some(a), Some(b)) => self.cooc[a].get(&b).copied().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn popularity(&self, item: &str) -> u64 {
        self.index_of(item).map_or(0, |i| self.popularity[i])
    }

    pub fn popularity_by_index(&self) -> &[u64] {
        &self.popularity
    }

    pub fn cosine(&self, a: &str, b: &str) -> f64 {
        match (self.index_of(a), self.index_of(b)) {
            (Some(a), Some(b)) => self.cosine_idx(a, b),
            _ => 0.0,
        }
    }

    fn cosine_idx(&self, a: usize, b: usize) -> f64 {
        let c = self.cooc[a].get(&b).copied().unwrap_or(0);
        if c == 0 {
            return 0.0;
        }
        c as f64 / (self.norms[a] * self.norms[b])
    }

    /// Adds `cosine(context, v)` to `scores[v]` for every co-occurring `v`.
    pub fn accumulate_cosine(&self, context: usize, scores: &mut [f64]) {
        let norm_c = self.norms[context];
        for (&v, &c) in &self.cooc[context] {
            scores[v] += c as f64 / (norm_c * self.norms[v]);
        }
    }

    /// Summed cosine score of every catalog item against `context`.
    pub fn context_scores(&self, context: &[usize]) -> Vec<f64> {
        let mut scores = vec![0.0; self.items.len()];
        for &c in context {
            self.accumulate_cosine(c, &mut scores);
        }
        scores
    }

    /// The non-excluded item with the highest summed cosine to `context`.
    ///
    /// Context items outside the catalog are ignored. When every candidate
    /// scores zero the most popular candidate is returned instead. Exact ties
    /// are broken uniformly at random with `rng`.
    pub fn similar_to<R: Rng + ?Sized>(
        &self,
        context: &[&str],
        exclude: &BTreeSet<String>,
        rng: &mut R,
    ) -> Result<String> {
        let ctx: Vec<usize> = context.iter().filter_map(|c| self.index_of(c)).collect();
        let mut excluded = vec![false; self.items.len()];
        for e in exclude {
            if let Some(i) = self.index_of(e) {
                excluded[i] = true;
            }
        }
        self.similar_to_idx(&ctx, &excluded, rng)
            .map(|i| self.items[i].clone())
    }

    pub(crate) fn similar_to_idx<R: Rng + ?Sized>(
        &self,
        context: &[usize],
        excluded: &[bool],
        rng: &mut R,
    ) -> Result<usize> {
        let scores = self.context_scores(context);
        let candidates = || (0..self.items.len()).filter(|&i| !excluded[i]);

        let best = candidates().map(|i| scores[i]).fold(0.0f64, f64::max);
        let tied: Vec<usize> = if best > 0.0 {
            candidates().filter(|&i| scores[i] == best).collect()
        } else {
            let top = candidates().map(|i| self.popularity[i]).max().ok_or_else(|| {
                Error::Domain("every catalog item is excluded; nothing to select".into())
            })?;
            candidates().filter(|&i| self.popularity[i] == top).collect()
        };
        Ok(match tied.len() {
            1 => tied[0],
            n => tied[rng.random_range(0..n)],
        })
    }

    pub fn to_dump(&self) -> ModelDump {
        let mut pairs = Vec::new();
        for (a, row) in self.cooc.iter().enumerate() {
            for (&b, &c) in row {
                if a < b {
                    pairs.push((a, b, c));
                }
            }
        }
        pairs.sort_unstable();
        ModelDump {
            window: self.window,
            items: self.items.clone(),
            popularity: self.popularity.clone(),
            pairs,
        }
    }

    pub fn from_dump(dump: ModelDump) -> Result<Self> {
        let n = dump.items.len();
        if dump.popularity.len() != n {
            return Err(Error::Invalid("popularity length does not match items".into()));
        }
        if dump.window == 0 {
            return Err(Error::Invalid("similarity window must be at least 1".into()));
        }
        let index: HashMap<String, usize> =
            dump.items.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        if index.len() != n {
            return Err(Error::Invalid("duplicate items in model dump".into()));
        }
        let mut cooc = vec![HashMap::new(); n];
        for (a, b, c) in dump.pairs {
            if a >= n || b >= n || a == b {
                return Err(Error::Invalid(format!("bad pair ({a}, {b}) in model dump")));
            }
            cooc[a].insert(b, c);
            cooc[b].insert(a, c);
        }
        Ok(Self::assemble(dump.window, dump.items, index, cooc, dump.popularity))
    }
}

/// Serializable form of a fitted model; `pairs` holds `(a, b, count)` with
/// `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDump {
    pub window: usize,
    pub items: Vec<String>,
    pub popularity: Vec<u64>,
    pub pairs: Vec<(usize, usize, u64)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::sequence::UserSequence;

    fn ds(seqs: &[&[&str]]) -> Dataset {
        Dataset::from_sequences(seqs.iter().enumerate().map(|(u, items)| {
            let ts = (0..items.len() as i64).collect();
            UserSequence::new(
                format!("u{u}"),
                items.iter().map(|s| s.to_string()).collect(),
                ts,
            )
            .unwrap()
        }))
        .unwrap()
    }

    #[test]
    fn pair_counts_within_window() {
        let m = SimilarityModel::fit(&ds(&[&["a", "b"]]), 1).unwrap();
        assert_eq!(m.count("a", "b"), 1);
        assert_eq!(m.count("b", "a"), 1);

        let m = SimilarityModel::fit(&ds(&[&["a", "b", "c"]]), 2).unwrap();
        assert_eq!(m.count("a", "b"), 1);
        assert_eq!(m.count("b", "c"), 1);
        assert_eq!(m.count("a", "c"), 1);

        let m = SimilarityModel::fit(&ds(&[&["a", "b", "c"]]), 1).unwrap();
        assert_eq!(m.count("a", "c"), 0);
        assert_eq!(m.count("a", "a"), 0);
        assert!(SimilarityModel::fit(&ds(&[&["a"]]), 0).is_err());
    }

    #[test]
    fn unique_neighbour_is_returned() {
        let m = SimilarityModel::fit(&ds(&[&["q", "x"], &["y", "z"], &["y", "z"]]), 1).unwrap();
        let mut r = rng::seeded(0);
        let got = m.similar_to(&["q"], &BTreeSet::new(), &mut r).unwrap();
        assert_eq!(got, "x");
    }

    #[test]
    fn cold_context_falls_back_to_popularity() {
        let m = SimilarityModel::fit(&ds(&[&["a", "b"], &["b", "c"], &["b"], &["d"]]), 1).unwrap();
        let mut r = rng::seeded(0);
        let excl: BTreeSet<String> = ["d".to_string()].into();
        assert_eq!(m.similar_to(&["d"], &excl, &mut r).unwrap(), "b");
        assert_eq!(m.similar_to(&["unknown"], &BTreeSet::new(), &mut r).unwrap(), "b");
    }

    #[test]
    fn exhausted_catalog_is_domain_error() {
        let m = SimilarityModel::fit(&ds(&[&["a", "b"]]), 1).unwrap();
        let excl: BTreeSet<String> = ["a".to_string(), "b".to_string()].into();
        let err = m.similar_to(&["a"], &excl, &mut rng::seeded(0)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn hand_computed_cosine_argmax() {
        // window 1 counts: a-b 2, a-c 1, b-c 1, c-d 1, d-e 1
        // popularity: a 3, b 2, c 3, d 1, e 1
        let m = SimilarityModel::fit(
            &ds(&[&["a", "b", "a"], &["c", "d", "e"], &["b", "c"], &["a", "c"]]),
            1,
        )
        .unwrap();
        assert_eq!(m.count("a", "b"), 2);
        assert_eq!(m.popularity("c"), 3);
        // cos(a, b) = 2 / sqrt(6) = 0.8165, cos(a, c) = 1 / 3
        assert!((m.cosine("a", "b") - 0.816_496_580_927_726_1).abs() < 1e-12);
        let mut r = rng::seeded(1);
        assert_eq!(m.similar_to(&["a"], &BTreeSet::new(), &mut r).unwrap(), "b");
        let excl: BTreeSet<String> = ["b".to_string()].into();
        assert_eq!(m.similar_to(&["a"], &excl, &mut r).unwrap(), "c");
        // context {b, d}: a 0.8165, c 0.9856, e 1.0
        let excl: BTreeSet<String> = ["b".to_string(), "d".to_string()].into();
        assert_eq!(m.similar_to(&["b", "d"], &excl, &mut r).unwrap(), "e");
    }

    #[test]
    fn dump_round_trip() {
        let m = SimilarityModel::fit(&ds(&[&["a", "b", "c", "a"], &["c", "d"]]), 2).unwrap();
        let json = serde_json::to_string(&m.to_dump()).unwrap();
        let back = SimilarityModel::from_dump(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
