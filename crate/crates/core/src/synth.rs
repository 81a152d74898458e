//! Synthetic interaction data with interval-coupled preference drift.
//!
//! Items are split evenly into contiguous categories. Each user starts in a
//! random category; after a gap of `t` seconds the user moves to a different
//! random category with probability `1 - exp(-t / tau)` and then picks an
//! item uniformly from the current category. Long gaps therefore predict a
//! change of interest, short gaps predict continuity.

use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::sequence::{Dataset, UserSequence};

/// 2019-01-01T00:00:00Z.
pub const DEFAULT_START: i64 = 1_546_300_800;
const START_SPREAD: i64 = 30 * 86_400;
const MAX_GAP: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GapProfile {
    /// `gap` seconds plus integer jitter uniform in `[-jitter, jitter]`.
    Uniform { gap: i64, jitter: i64 },
    /// Log-normal gaps: `exp(N(log_mu, log_sigma^2))` seconds.
    HeavyTail { log_mu: f64, log_sigma: f64 },
}

impl GapProfile {
    pub fn median(&self) -> f64 {
        match *self {
            GapProfile::Uniform { gap, .. } => gap as f64,
            GapProfile::HeavyTail { log_mu, .. } => log_mu.exp(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            GapProfile::Uniform { gap, jitter } if gap < 0 || jitter < 0 => Err(Error::Config(
                "uniform gap and jitter must be non-negative".into(),
            )),
            GapProfile::HeavyTail { log_mu, log_sigma }
                if !log_mu.is_finite() || !log_sigma.is_finite() || log_sigma < 0.0 =>
            {
                Err(Error::Config("heavy-tail parameters must be finite, sigma >= 0".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Uniform,
    HeavyTail,
}

impl FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Self::Uniform),
            "heavytail" | "heavy-tail" => Ok(Self::HeavyTail),
            other => Err(Error::Config(format!("unknown interval profile {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_items: usize,
    pub n_categories: usize,
    /// Inclusive sequence length range.
    pub seq_len: (usize, usize),
    pub gaps: GapProfile,
    /// Drift timescale `tau` in seconds; `f64::INFINITY` disables drift.
    pub drift_timescale: f64,
    pub seed: u64,
    /// First-interaction times are spread over 30 days after this instant.
    pub start: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let gaps = GapProfile::HeavyTail {
            log_mu: (86_400f64).ln(),
            log_sigma: 1.5,
        };
        Self {
            n_users: 2000,
            n_items: 200,
            n_categories: 10,
            seq_len: (5, 20),
            gaps,
            drift_timescale: tau_for_switch_probability(gaps.median(), 0.3),
            seed: 0,
            start: DEFAULT_START,
        }
    }
}

/// `tau` such that a gap of `gap` seconds switches category with probability `p`.
pub fn tau_for_switch_probability(gap: f64, p: f64) -> f64 {
    -gap / (1.0 - p).ln()
}

pub fn switch_probability(gap: f64, tau: f64) -> f64 {
    if tau.is_infinite() {
        0.0
    } else {
        1.0 - (-gap / tau).exp()
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_items == 0 || self.n_categories == 0 {
            return Err(Error::Config("need at least one item and one category".into()));
        }
        if self.n_categories > self.n_items {
            return Err(Error::Config(format!(
                "{} categories for {} items",
                self.n_categories, self.n_items
            )));
        }
        let (lo, hi) = self.seq_len;
        if lo < 3 || hi < lo {
            return Err(Error::Config(format!(
                "sequence length range ({lo}, {hi}) must satisfy 3 <= min <= max"
            )));
        }
        if self.drift_timescale.is_nan() || self.drift_timescale <= 0.0 {
            return Err(Error::Config("drift timescale must be positive".into()));
        }
        if self.start < 0 {
            return Err(Error::Config("start time must be non-negative".into()));
        }
        self.gaps.validate()
    }

    pub fn item_id(&self, idx: usize) -> String {
        let width = (self.n_items.max(2) - 1).to_string().len();
        format!("i{idx:0width$}")
    }

    pub fn user_id(&self, idx: usize) -> String {
        let width = (self.n_users.max(2) - 1).to_string().len();
        format!("u{idx:0width$}")
    }

    pub fn category_of(&self, item_idx: usize) -> usize {
        item_idx * self.n_categories / self.n_items
    }

    /// Category of a generated item id, `None` for foreign ids.
    pub fn category_of_item(&self, item: &str) -> Option<usize> {
        let idx: usize = item.strip_prefix('i')?.parse().ok()?;
        (idx < self.n_items).then(|| self.category_of(idx))
    }

    fn category_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.n_categories];
        for i in 0..self.n_items {
            members[self.category_of(i)].push(i);
        }
        members
    }
}

fn sample_gap<R: Rng + ?Sized>(profile: &GapProfile, ln: Option<&LogNormal<f64>>, rng: &mut R) -> i64 {
    match *profile {
        GapProfile::Uniform { gap, jitter } => {
            let j = if jitter > 0 { rng.random_range(-jitter..=jitter) } else { 0 };
            (gap + j).max(0)
        }
        GapProfile::HeavyTail { .. } => {
            let g = ln.expect("log-normal prepared").sample(rng);
            g.round().clamp(0.0, MAX_GAP) as i64
        }
    }
}

/// Generates a dataset; identical configs give identical datasets.
pub fn generate(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let members = cfg.category_members();
    let ln = match cfg.gaps {
        GapProfile::HeavyTail { log_mu, log_sigma } => Some(
            LogNormal::new(log_mu, log_sigma)
                .map_err(|e| Error::Config(format!("log-normal: {e}")))?,
        ),
        GapProfile::Uniform { .. } => None,
    };
    let items: Vec<String> = (0..cfg.n_items).map(|i| cfg.item_id(i)).collect();

    let sequences: Vec<UserSequence> = (0..cfg.n_users)
        .into_par_iter()
        .map(|u| {
            let user = cfg.user_id(u);
            let mut rng = rng::stream(cfg.seed, &user);
            let len = rng.random_range(cfg.seq_len.0..=cfg.seq_len.1);
            let mut category = rng.random_range(0..cfg.n_categories);
            let mut t = cfg.start + rng.random_range(0..START_SPREAD);
            let mut seq_items = Vec::with_capacity(len);
            let mut stamps = Vec::with_capacity(len);
            for step in 0..len {
                if step > 0 {
                    let gap = sample_gap(&cfg.gaps, ln.as_ref(), &mut rng);
                    t += gap;
                    let p = switch_probability(gap as f64, cfg.drift_timescale);
                    if cfg.n_categories > 1 && rng.random::<f64>() < p {
                        let other = rng.random_range(0..cfg.n_categories - 1);
                        category = if other >= category { other + 1 } else { other };
                    }
                }
                let pool = &members[category];
                seq_items.push(items[pool[rng.random_range(0..pool.len())]].clone());
                stamps.push(t);
            }
            UserSequence::new(user, seq_items, stamps)
        })
        .collect::<Result<_>>()?;

    let mut ds = Dataset::from_sequences(sequences)?;
    ds.extend_catalog(items);
    Ok(ds)
}
