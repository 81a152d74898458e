//! Uniform / non-uniform dataset partitions.
//!
//! Both ranked strategies walk the ascending-std ranking. Strategy S puts
//! `floor(n / 2)` users into the uniform subset; strategy I adds users until
//! the uniform subset first holds at least half of all interactions.
//! Subsets keep the full item catalog.

use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::sequence::Dataset;
use crate::stats::rank_by_std;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    S,
    I,
    Random,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s" => Ok(Self::S),
            "i" => Ok(Self::I),
            "random" => Ok(Self::Random),
            other => Err(Error::Invalid(format!("unknown partition strategy {other:?}"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::S => "s",
            Self::I => "i",
            Self::Random => "random",
        })
    }
}

/// `(uniform, non_uniform)` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub uniform: Dataset,
    pub non_uniform: Dataset,
}

fn split_ranking(ds: &Dataset, n_uniform: usize) -> Partition {
    let ranking = rank_by_std(ds);
    let users: Vec<&str> = ranking.users().collect();
    let (head, tail) = users.split_at(n_uniform.min(users.len()));
    Partition {
        uniform: ds.subset(head.iter().copied()),
        non_uniform: ds.subset(tail.iter().copied()),
    }
}

/// Equal numbers of sequences; the uniform side gets `floor(n / 2)`.
pub fn partition_s(ds: &Dataset) -> Partition {
    split_ranking(ds, ds.len() / 2)
}

/// Equal numbers of interactions, first-crossing rule.
pub fn partition_i(ds: &Dataset) -> Partition {
    let ranking = rank_by_std(ds);
    let total = ds.n_interactions();
    let mut taken = 0usize;
    let mut n_uniform = 0usize;
    for user in ranking.users() {
        // taken >= total / 2, without rounding
        if 2 * taken >= total {
            break;
        }
        taken += ds.get(user).map_or(0, |s| s.len());
        n_uniform += 1;
    }
    split_ranking(ds, n_uniform)
}

/// Uniform sample of `floor(n / 2)` users, deterministic for a seed.
pub fn partition_random(ds: &Dataset, seed: u64) -> Dataset {
    partition_random_split(ds, seed).uniform
}

/// The random sample together with its complement.
pub fn partition_random_split(ds: &Dataset, seed: u64) -> Partition {
    let users: Vec<&str> = ds.users().collect();
    let mut rng = rng::stream(seed, "partition-random");
    let mut picked = vec![false; users.len()];
    for i in index::sample(&mut rng, users.len(), users.len() / 2) {
        picked[i] = true;
    }
    let chosen = users.iter().zip(&picked).filter(|(_, &p)| p).map(|(u, _)| *u);
    let rest = users.iter().zip(&picked).filter(|(_, &p)| !p).map(|(u, _)| *u);
    Partition {
        uniform: ds.subset(chosen),
        non_uniform: ds.subset(rest),
    }
}

pub fn partition(ds: &Dataset, strategy: Strategy, seed: u64) -> Partition {
    match strategy {
        Strategy::S => partition_s(ds),
        Strategy::I => partition_i(ds),
        Strategy::Random => partition_random_split(ds, seed),
    }
}
