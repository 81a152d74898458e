use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baseline::{BaselineConfig, BaselineModel};
use super::report::{fmt_metric, Table};
use crate::error::{Error, Result};
use crate::ingest::{SplitDataset, Target};

/// 1-based rank of `target` under `scores`; higher scores rank first and
/// equal scores keep catalog order.
pub fn rank_of(scores: &[f64], target: usize) -> usize {
    let t = scores[target];
    let above = scores
        .iter()
        .enumerate()
        .filter(|&(i, &s)| s > t || (s == t && i < target))
        .count();
    above + 1
}

pub fn hit(rank: usize, k: usize) -> f64 {
    if rank <= k {
        1.0
    } else {
        0.0
    }
}

/// `1 / log2(rank + 1)` inside the cutoff, 0 outside.
pub fn ndcg_contribution(rank: usize, k: usize) -> f64 {
    if rank <= k {
        1.0 / ((rank + 1) as f64).log2()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAtK {
    pub k: usize,
    pub hr: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub target: Target,
    pub n_users: usize,
    /// Sorted by ascending `k`.
    pub metrics: Vec<MetricAtK>,
    pub baseline: BaselineConfig,
}

impl EvalReport {
    pub fn hr(&self, k: usize) -> Option<f64> {
        self.metrics.iter().find(|m| m.k == k).map(|m| m.hr)
    }

    pub fn ndcg(&self, k: usize) -> Option<f64> {
        self.metrics.iter().find(|m| m.k == k).map(|m| m.ndcg)
    }

    /// `(name, value)` pairs: every `hr@k`, then every `ndcg@k`.
    pub fn named_values(&self) -> Vec<(String, f64)> {
        let hr = self.metrics.iter().map(|m| (format!("hr@{}", m.k), m.hr));
        let ndcg = self.metrics.iter().map(|m| (format!("ndcg@{}", m.k), m.ndcg));
        hr.chain(ndcg).collect()
    }

    pub fn table(&self) -> Table {
        let mut header = vec!["n_users".to_string()];
        let mut row = vec![self.n_users.to_string()];
        for (name, v) in self.named_values() {
            header.push(name);
            row.push(fmt_metric(v));
        }
        Table::new(header, vec![row])
    }
}

/// Ranks each user's held-out `target` item against the full catalog.
///
/// Users without that target are skipped. Ranks are computed in parallel and
/// averaged in user order, so the result does not depend on thread count.
pub fn evaluate(
    model: &BaselineModel,
    split: &SplitDataset,
    target: Target,
    k_list: &[usize],
) -> Result<EvalReport> {
    if k_list.is_empty() || k_list.contains(&0) {
        return Err(Error::Config(format!("cutoffs {k_list:?} must be non-empty and positive")));
    }
    let targets: Vec<(&String, &crate::ingest::HeldOut)> = split.targets(target).iter().collect();
    if targets.is_empty() {
        return Err(Error::Domain(format!("no users have a {target:?} target")));
    }
    let ranks: Vec<usize> = targets
        .par_iter()
        .map(|(user, held)| {
            let history = split
                .history(user, target)
                .ok_or_else(|| Error::Invalid(format!("user {user:?} has no history")))?;
            let idx = model.similarity().index_of(&held.item).ok_or_else(|| {
                Error::Invalid(format!("target item {:?} is not in the catalog", held.item))
            })?;
            Ok(rank_of(&model.score_all(&history), idx))
        })
        .collect::<Result<_>>()?;

    let mut ks = k_list.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let n = ranks.len() as f64;
    let metrics = ks
        .into_iter()
        .map(|k| MetricAtK {
            k,
            hr: ranks.iter().map(|&r| hit(r, k)).sum::<f64>() / n,
            ndcg: ranks.iter().map(|&r| ndcg_contribution(r, k)).sum::<f64>() / n,
        })
        .collect();
    Ok(EvalReport {
        target,
        n_users: ranks.len(),
        metrics,
        baseline: BaselineConfig {
            weights: model.weights(),
            recent: model.recent(),
            window: model.similarity().window(),
        },
    })
}
