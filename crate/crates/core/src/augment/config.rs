use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Operator, OperatorSet};
use crate::error::{Error, Result};

/// Operator ratios, the uniform gate and the short-sequence threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Insert ratio.
    pub beta: f64,
    /// Crop / reorder window ratio.
    pub eta: f64,
    /// Mask ratio.
    pub mu: f64,
    /// Substitute ratio; falls back to `mu` when unset.
    pub gamma: Option<f64>,
    /// Fraction of most-uniform sequences left untouched.
    pub sigma: f64,
    /// Sequences with `N <= short_threshold` only get substitute, insert or mask.
    pub short_threshold: usize,
    pub max_len: usize,
    pub seed: u64,
    pub operators: OperatorSet,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            beta: 0.3,
            eta: 0.6,
            mu: 0.3,
            gamma: None,
            sigma: 0.2,
            short_threshold: 8,
            max_len: 50,
            seed: 0,
            operators: OperatorSet::all_ti(),
        }
    }
}

pub const CONFIG_KEYS: [&str; 9] = [
    "beta",
    "eta",
    "mu",
    "gamma",
    "sigma",
    "short_threshold",
    "max_len",
    "seed",
    "operators",
];

fn parse_ratio(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: {value:?} is not a number")))?;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Config(format!("{key}: {v} is outside [0, 1]")));
    }
    Ok(v)
}

fn parse_int<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: {value:?} is not a non-negative integer")))
}

impl AugmentConfig {
    pub fn substitute_ratio(&self) -> f64 {
        self.gamma.unwrap_or(self.mu)
    }

    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("beta", self.beta),
            ("eta", self.eta),
            ("mu", self.mu),
            ("gamma", self.substitute_ratio()),
            ("sigma", self.sigma),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{key}: {v} is outside [0, 1]")));
            }
        }
        if self.short_threshold < 1 {
            return Err(Error::Config("short_threshold must be at least 1".into()));
        }
        if self.max_len < 2 {
            return Err(Error::Config("max_len must be at least 2".into()));
        }
        if self.operators.is_empty() {
            return Err(Error::Config("operator set is empty".into()));
        }
        Ok(())
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "beta" => self.beta = parse_ratio(key, value)?,
            "eta" => self.eta = parse_ratio(key, value)?,
            "mu" => self.mu = parse_ratio(key, value)?,
            "gamma" => self.gamma = Some(parse_ratio(key, value)?),
            "sigma" => self.sigma = parse_ratio(key, value)?,
            "short_threshold" => {
                self.short_threshold = parse_int(key, value)?;
                if self.short_threshold < 1 {
                    return Err(Error::Config("short_threshold must be at least 1".into()));
                }
            }
            "max_len" => {
                self.max_len = parse_int(key, value)?;
                if self.max_len < 2 {
                    return Err(Error::Config("max_len must be at least 2".into()));
                }
            }
            "seed" => self.seed = parse_int(key, value)?,
            "operators" => self.operators = value.parse()?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` text on top of the defaults. Blank lines
    /// and `#` comments are ignored; unknown or repeated keys are errors.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.merge_kv_str(text)?;
        Ok(cfg)
    }

    pub fn merge_kv_str(&mut self, text: &str) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", idx + 1))
            })?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {key:?}", idx + 1)));
            }
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {}", idx + 1, strip_prefix(&e))))?;
        }
        self.validate()
    }

    /// Inverse of [`AugmentConfig::from_kv_str`].
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "beta = {}", self.beta);
        let _ = writeln!(out, "eta = {}", self.eta);
        let _ = writeln!(out, "mu = {}", self.mu);
        if let Some(g) = self.gamma {
            let _ = writeln!(out, "gamma = {g}");
        }
        let _ = writeln!(out, "sigma = {}", self.sigma);
        let _ = writeln!(out, "short_threshold = {}", self.short_threshold);
        let _ = writeln!(out, "max_len = {}", self.max_len);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "operators = {}", self.operators);
        out
    }

    /// Same config with `from` replaced by `to` in the operator set.
    pub fn with_swapped(&self, from: Operator, to: Operator) -> Self {
        let mut cfg = self.clone();
        if cfg.operators.remove(from) {
            cfg.operators.insert(to);
        }
        cfg
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_text() {
        let cfg = AugmentConfig::from_kv_str(
            "# tuned\nbeta = 0.4\neta=0.5\n\nsigma = 0.1 # gate\noperators = TI,TM,S\nseed = 9\n",
        )
        .unwrap();
        assert_eq!(cfg.beta, 0.4);
        assert_eq!(cfg.eta, 0.5);
        assert_eq!(cfg.sigma, 0.1);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.operators.to_string(), "S,TI,TM");
        assert_eq!(cfg.substitute_ratio(), cfg.mu);
    }

    #[test]
    fn rejects_unknown_duplicate_and_out_of_range() {
        assert!(matches!(AugmentConfig::from_kv_str("lambda = 1"), Err(Error::Config(_))));
        assert!(AugmentConfig::from_kv_str("beta = 0.1\nbeta = 0.2").is_err());
        assert!(AugmentConfig::from_kv_str("beta = 1.5").is_err());
        assert!(AugmentConfig::from_kv_str("max_len = 1").is_err());
        assert!(AugmentConfig::from_kv_str("short_threshold = 0").is_err());
        assert!(AugmentConfig::from_kv_str("operators = XX").is_err());
        assert!(AugmentConfig::from_kv_str("no equals sign").is_err());
    }

    #[test]
    fn kv_round_trip() {
        let cfg = AugmentConfig {
            gamma: Some(0.7),
            operators: "TI,C,R".parse().unwrap(),
            ..AugmentConfig::default()
        };
        let back = AugmentConfig::from_kv_str(&cfg.to_kv_string()).unwrap();
        assert_eq!(back, cfg);
    }
}
