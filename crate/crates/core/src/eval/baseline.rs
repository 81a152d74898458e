use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::{SimilarityModel, DEFAULT_WINDOW};
use crate::sequence::Dataset;

/// Mixture weights `(markov, knn, pop)`; non-negative and summing to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub markov: f64,
    pub knn: f64,
    pub pop: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            markov: 0.5,
            knn: 0.3,
            pop: 0.2,
        }
    }
}

impl Weights {
    pub fn new(markov: f64, knn: f64, pop: f64) -> Result<Self> {
        let w = Self { markov, knn, pop };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.markov, self.knn, self.pop];
        if parts.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config(format!("weights {parts:?} must be non-negative")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("weights {parts:?} sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// Everything needed to rebuild a baseline from a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub weights: Weights,
    /// Number of most recent history items the similarity term averages over.
    pub recent: usize,
    /// Co-occurrence window of the similarity model.
    pub window: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            weights: Weights::default(),
            recent: 5,
            window: DEFAULT_WINDOW,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.recent == 0 {
            return Err(Error::Config("recent window must be at least 1".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("similarity window must be at least 1".into()));
        }
        Ok(())
    }

    /// Fits the similarity model and the baseline on `train`.
    pub fn fit(&self, train: &Dataset) -> Result<BaselineModel> {
        self.validate()?;
        let sim = SimilarityModel::fit(train, self.window)?;
        train_baseline(train, sim, self.weights, self.recent)
    }
}

/// Markov + co-occurrence + popularity mixture over the similarity model's
/// catalog.
#[derive(Debug, Clone)]
pub struct BaselineModel {
    sim: Arc<SimilarityModel>,
    transitions: Vec<HashMap<usize, u64>>,
    out_totals: Vec<u64>,
    popularity: Vec<u64>,
    max_popularity: u64,
    weights: Weights,
    recent: usize,
}

/// Counts consecutive pairs and item frequencies of `train`.
///
/// Every training item must be in the catalog of `sim`.
pub fn train_baseline(
    train: &Dataset,
    sim: impl Into<Arc<SimilarityModel>>,
    weights: Weights,
    recent: usize,
) -> Result<BaselineModel> {
    weights.validate()?;
    if recent == 0 {
        return Err(Error::Config("recent window must be at least 1".into()));
    }
    if train.is_empty() || train.n_interactions() == 0 {
        return Err(Error::Domain("cannot train a baseline on an empty training set".into()));
    }
    let sim = sim.into();
    let n = sim.n_items();
    let mut transitions = vec![HashMap::new(); n];
    let mut out_totals = vec![0u64; n];
    let mut popularity = vec![0u64; n];
    for seq in train.sequences() {
        let ids = seq
            .items()
            .iter()
            .map(|i| {
                sim.index_of(i).ok_or_else(|| {
                    Error::Invalid(format!("training item {i:?} is not in the similarity catalog"))
                })
            })
            .collect::<Result<Vec<usize>>>()?;
        for &a in &ids {
            popularity[a] += 1;
        }
        for w in ids.windows(2) {
            *transitions[w[0]].entry(w[1]).or_insert(0) += 1;
            out_totals[w[0]] += 1;
        }
    }
    let max_popularity = popularity.iter().copied().max().unwrap_or(0);
    Ok(BaselineModel {
        sim,
        transitions,
        out_totals,
        popularity,
        max_popularity,
        weights,
        recent,
    })
}

impl BaselineModel {
    pub fn similarity(&self) -> &SimilarityModel {
        &self.sim
    }

    /// Catalog in ranking tie-break order.
    pub fn items(&self) -> &[String] {
        self.sim.items()
    }

    pub fn weights(&self) -> Weights {
        self.weights
    }

    pub fn recent(&self) -> usize {
        self.recent
    }

    pub fn transition(&self, from: &str, to: &str) -> u64 {
        match (self.sim.index_of(from), self.sim.index_of(to)) {
            (Some(a), Some(b)) => self.transitions[a].get(&b).copied().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn popularity(&self, item: &str) -> u64 {
        self.sim.index_of(item).map_or(0, |i| self.popularity[i])
    }

    /// Mixture score of every catalog item, indexed like [`Self::items`].
    ///
    /// Items of `history` outside the catalog contribute nothing. An empty
    /// history leaves only the popularity term.
    pub fn score_all(&self, history: &[&str]) -> Vec<f64> {
        let n = self.sim.n_items();
        let w = self.weights;
        let mut scores = vec![0.0; n];

        if let Some(last) = history.last().and_then(|i| self.sim.index_of(i)) {
            let total = self.out_totals[last];
            if total > 0 && w.markov > 0.0 {
                for (&v, &c) in &self.transitions[last] {
                    scores[v] += w.markov * c as f64 / total as f64;
                }
            }
        }

        let tail = &history[history.len().saturating_sub(self.recent)..];
        if !tail.is_empty() && w.knn > 0.0 {
            let ctx: Vec<usize> = tail.iter().filter_map(|i| self.sim.index_of(i)).collect();
            let summed = self.sim.context_scores(&ctx);
            let scale = w.knn / tail.len() as f64;
            for (s, c) in scores.iter_mut().zip(summed) {
                *s += scale * c;
            }
        }

        if self.max_popularity > 0 && w.pop > 0.0 {
            let scale = w.pop / self.max_popularity as f64;
            for (s, &p) in scores.iter_mut().zip(&self.popularity) {
                *s += scale * p as f64;
            }
        }
        scores
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::UserSequence;

    fn ds(seqs: &[&[&str]]) -> Dataset {
        Dataset::from_sequences(seqs.iter().enumerate().map(|(u, items)| {
            UserSequence::new(
                format!("u{u}"),
                items.iter().map(|s| s.to_string()).collect(),
                (0..items.len() as i64).collect(),
            )
            .unwrap()
        }))
        .unwrap()
    }

    fn fit(train: &Dataset, weights: Weights) -> BaselineModel {
        BaselineConfig {
            weights,
            ..BaselineConfig::default()
        }
        .fit(train)
        .unwrap()
    }

    #[test]
    fn counts_transitions_and_popularity() {
        let m = fit(&ds(&[&["a", "b", "a", "b"]]), Weights::default());
        assert_eq!(m.transition("a", "b"), 2);
        assert_eq!(m.transition("b", "a"), 1);
        assert_eq!(m.transition("b", "b"), 0);
        assert_eq!(m.popularity("a"), 2);
        assert_eq!(m.popularity("b"), 2);
    }

    #[test]
    fn weights_must_be_a_distribution() {
        assert!(Weights::new(0.5, 0.5, 0.1).is_err());
        assert!(Weights::new(-0.1, 0.6, 0.5).is_err());
        assert!(Weights::new(0.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn empty_training_set_is_a_domain_error() {
        let cfg = BaselineConfig::default();
        let empty = Dataset::new();
        let sim = SimilarityModel::fit(&empty, 5).unwrap();
        assert!(matches!(
            train_baseline(&empty, sim, cfg.weights, 5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn unseen_last_item_gives_zero_markov_term() {
        let m = fit(&ds(&[&["a", "b"], &["c"]]), Weights::new(1.0, 0.0, 0.0).unwrap());
        assert!(m.score_all(&["zzz"]).iter().all(|&s| s == 0.0));
        // c never precedes anything
        assert!(m.score_all(&["c"]).iter().all(|&s| s == 0.0));
    }

    #[test]
    fn hand_computed_mixture() {
        // a->b twice, a->c once, b->d once, c->d once
        let train = ds(&[&["a", "b", "d"], &["a", "c", "d"], &["a", "b"]]);
        let m = fit(&train, Weights::new(0.5, 0.0, 0.5).unwrap());
        let s = m.score_all(&["a"]);
        // items: a b c d ; popularity 3 2 1 2
        let expect = [0.5, 0.5 * 2.0 / 3.0 + 0.5 * 2.0 / 3.0, 0.5 / 3.0 + 0.5 / 3.0, 0.5 * 2.0 / 3.0];
        for (got, want) in s.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{s:?}");
        }
    }
}
