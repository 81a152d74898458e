//! Interval-aware sequence augmentation.
//!
//! Five operators pick their targets from the interval structure of a
//! sequence instead of at random:
//!
//! * insert (`TI`) splits the largest gaps with a correlated item placed at
//!   the midpoint timestamp,
//! * crop (`TC`) keeps the contiguous window with the smallest interval std,
//! * mask (`TM`) deletes items next to the smallest gaps,
//! * substitute (`TS`) replaces the items mask would delete,
//! * reorder (`TR`) shuffles items inside the crop window.
//!
//! Each has a random counterparts (`I`, `C`, `M`, `S`, `R`) used for
//! ablations. [`augment_dataset`] applies one operator per non-uniform
//! sequence, restricting short sequences to substitute/insert/mask.

mod config;
mod ops;
pub mod select;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{AugmentConfig, CONFIG_KEYS};
pub use ops::{
    apply, crop_length, mask_count, insert_count, random_crop, random_insert, random_mask,
    random_reorder, random_substitute, substitute_count, ti_crop, ti_insert, ti_insert_at,
    ti_mask, ti_reorder, ti_substitute, traditional_op, Ratios,
};

use crate::error::{Error, Result};
use crate::rng;
use crate::sequence::{Dataset, UserSequence};
use crate::similarity::SimilarityModel;
use crate::stats::classify_top_sigma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpKind {
    Substitute,
    Insert,
    Mask,
    Crop,
    Reorder,
}

impl OpKind {
    pub const ALL: [OpKind; 5] = [
        OpKind::Substitute,
        OpKind::Insert,
        OpKind::Mask,
        OpKind::Crop,
        OpKind::Reorder,
    ];

    /// Kinds allowed on sequences no longer than the short threshold.
    pub fn short_safe(self) -> bool {
        matches!(self, OpKind::Substitute | OpKind::Insert | OpKind::Mask)
    }

    fn letter(self) -> char {
        match self {
            OpKind::Substitute => 'S',
            OpKind::Insert => 'I',
            OpKind::Mask => 'M',
            OpKind::Crop => 'C',
            OpKind::Reorder => 'R',
        }
    }
}

/// Interval-aware or random target selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Ti,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Operator {
    pub kind: OpKind,
    pub mode: Mode,
}

impl Operator {
    pub const fn ti(kind: OpKind) -> Self {
        Self {
            kind,
            mode: Mode::Ti,
        }
    }

    pub const fn random(kind: OpKind) -> Self {
        Self {
            kind,
            mode: Mode::Random,
        }
    }

    pub fn counterpart(self) -> Self {
        Self {
            kind: self.kind,
            mode: match self.mode {
                Mode::Ti => Mode::Random,
                Mode::Random => Mode::Ti,
            },
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mode == Mode::Ti {
            f.write_str("T")?;
        }
        write!(f, "{}", self.kind.letter())
    }
}

impl FromStr for Operator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tag = s.trim().to_ascii_uppercase();
        let (mode, letter) = match tag.len() {
            2 if tag.starts_with('T') => (Mode::Ti, &tag[1..]),
            1 => (Mode::Random, &tag[..]),
            _ => return Err(Error::Config(format!("unknown operator {s:?}"))),
        };
        let kind = OpKind::ALL
            .into_iter()
            .find(|k| letter.starts_with(k.letter()))
            .ok_or_else(|| Error::Config(format!("unknown operator {s:?}")))?;
        Ok(Self { kind, mode })
    }
}

/// Set of operators a run may choose from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OperatorSet(BTreeSet<Operator>);

impl OperatorSet {
    pub fn all_ti() -> Self {
        Self(OpKind::ALL.into_iter().map(Operator::ti).collect())
    }

    pub fn all_random() -> Self {
        Self(OpKind::ALL.into_iter().map(Operator::random).collect())
    }

    pub fn only(op: Operator) -> Self {
        Self([op].into())
    }

    pub fn contains(&self, op: Operator) -> bool {
        self.0.contains(&op)
    }

    pub fn insert(&mut self, op: Operator) -> bool {
        self.0.insert(op)
    }

    pub fn remove(&mut self, op: Operator) -> bool {
        self.0.remove(&op)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Members in canonical order: S, I, M, C, R kinds, interval-aware first.
    pub fn iter(&self) -> impl Iterator<Item = Operator> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<Operator> for OperatorSet {
    fn from_iter<T: IntoIterator<Item = Operator>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Display for OperatorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tags: Vec<String> = self.iter().map(|o| o.to_string()).collect();
        f.write_str(&tags.join(","))
    }
}

impl FromStr for OperatorSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let set: OperatorSet = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        if set.is_empty() {
            return Err(Error::Config("operator set is empty".into()));
        }
        Ok(set)
    }
}

impl Serialize for OperatorSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OperatorSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// What happened to one sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Applied(Operator),
    /// Exempt as one of the most uniform sequences.
    UniformGate,
    /// Operator not applicable (sequence too short or zero ratio).
    Skipped,
    /// Read back without provenance.
    Passthrough,
    /// Operator failed; the original sequence is kept.
    Failed,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Applied(op) => write!(f, "{op}"),
            Step::UniformGate => f.write_str("uniform-gate"),
            Step::Skipped => f.write_str("skipped"),
            Step::Passthrough => f.write_str("passthrough"),
            Step::Failed => f.write_str("failed"),
        }
    }
}

impl FromStr for Step {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "uniform-gate" => Step::UniformGate,
            "skipped" => Step::Skipped,
            "passthrough" => Step::Passthrough,
            "failed" => Step::Failed,
            op => Step::Applied(op.parse()?),
        })
    }
}

/// Operator tag plus the input positions it touched.
///
/// Positions index the input sequence: gap indices for insert (an item was
/// added after each), kept window slots for crop and reorder, removed or
/// replaced items for mask and substitute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(with = "step_serde")]
    pub op: Step,
    pub positions: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

mod step_serde {
    use super::Step;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(step: &Step, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(step)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Step, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Provenance {
    pub fn applied(op: Operator, positions: Vec<usize>) -> Self {
        Self {
            op: Step::Applied(op),
            positions,
            note: None,
        }
    }

    pub fn skipped(reason: impl Into<String>) -> Self {
        Self {
            op: Step::Skipped,
            positions: Vec::new(),
            note: Some(reason.into()),
        }
    }

    pub fn uniform_gate() -> Self {
        Self {
            op: Step::UniformGate,
            positions: Vec::new(),
            note: None,
        }
    }

    pub fn passthrough() -> Self {
        Self {
            op: Step::Passthrough,
            positions: Vec::new(),
            note: None,
        }
    }

    pub fn failed(reason: impl Into<String>) -> Self {
        Self {
            op: Step::Failed,
            positions: Vec::new(),
            note: Some(reason.into()),
        }
    }

    pub fn is_transformed(&self) -> bool {
        matches!(self.op, Step::Applied(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedSequence {
    pub sequence: UserSequence,
    pub provenance: Provenance,
}

impl AugmentedSequence {
    pub(crate) fn unchanged(seq: &UserSequence, provenance: Provenance) -> Self {
        Self {
            sequence: seq.clone(),
            provenance,
        }
    }
}

/// A user whose operator failed; the original sequence was kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub user: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AugmentedDataset {
    sequences: BTreeMap<String, AugmentedSequence>,
}

impl AugmentedDataset {
    pub fn from_sequences(seqs: impl IntoIterator<Item = AugmentedSequence>) -> Result<Self> {
        let mut sequences = BTreeMap::new();
        for aug in seqs {
            let user = aug.sequence.user_id().to_string();
            if sequences.insert(user.clone(), aug).is_some() {
                return Err(Error::Invalid(format!("duplicate user {user}")));
            }
        }
        Ok(Self { sequences })
    }

    pub fn get(&self, user: &str) -> Option<&AugmentedSequence> {
        self.sequences.get(user)
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn sequences(&self) -> impl Iterator<Item = &AugmentedSequence> + '_ {
        self.sequences.values()
    }

    /// Users whose operator failed.
    pub fn failures(&self) -> Vec<Failure> {
        self.sequences
            .values()
            .filter(|a| a.provenance.op == Step::Failed)
            .map(|a| Failure {
                user: a.sequence.user_id().to_string(),
                reason: a.provenance.note.clone().unwrap_or_default(),
            })
            .collect()
    }

    /// Number of sequences per provenance tag.
    pub fn step_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for a in self.sequences.values() {
            *counts.entry(a.provenance.op.to_string()).or_insert(0) += 1;
        }
        counts
    }

    /// All sequences as a plain dataset over `catalog`.
    pub fn to_dataset(&self, catalog: &BTreeSet<String>) -> Result<Dataset> {
        let mut catalog = catalog.clone();
        for a in self.sequences.values() {
            catalog.extend(a.sequence.items().iter().cloned());
        }
        Dataset::with_catalog(self.sequences.values().map(|a| a.sequence.clone()), catalog)
    }

    /// Only the sequences an operator actually changed.
    pub fn transformed(&self) -> impl Iterator<Item = &AugmentedSequence> + '_ {
        self.sequences.values().filter(|a| a.provenance.is_transformed())
    }
}

/// Picks the operator for a sequence of length `n`.
///
/// Sequences with `n <= short_threshold` choose uniformly among the
/// configured substitute, insert and mask operators; longer ones among all
/// configured operators.
pub fn choose_operator<R: Rng + ?Sized>(
    n: usize,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<Operator> {
    let short = n <= cfg.short_threshold;
    let pool: Vec<Operator> = cfg
        .operators
        .iter()
        .filter(|op| !short || op.kind.short_safe())
        .collect();
    if pool.is_empty() {
        return Err(Error::Config(format!(
            "no configured operator ({}) applies to a sequence of length {n} with short_threshold {}",
            cfg.operators, cfg.short_threshold
        )));
    }
    Ok(pool[rng.random_range(0..pool.len())])
}

/// Augments every non-gated sequence once.
///
/// The `floor(sigma * |users|)` most uniform users pass through unchanged.
/// Each other user draws from an independent random stream derived from
/// `(cfg.seed, user_id)`, so the output does not depend on iteration order
/// or thread count. Per-user failures keep the original sequence and are
/// reported through provenance.
pub fn augment_dataset(
    train: &Dataset,
    cfg: &AugmentConfig,
    model: &SimilarityModel,
) -> Result<AugmentedDataset> {
    cfg.validate()?;
    let gated = classify_top_sigma(train, cfg.sigma)?;
    let seqs: Vec<&UserSequence> = train.sequences().collect();
    let out: Vec<AugmentedSequence> = seqs
        .par_iter()
        .map(|seq| {
            if gated.contains(seq.user_id()) {
                return AugmentedSequence::unchanged(seq, Provenance::uniform_gate());
            }
            let mut rng = rng::stream(cfg.seed, seq.user_id());
            choose_operator(seq.len(), cfg, &mut rng)
                .and_then(|op| apply(seq, op, cfg, model, &mut rng))
                .unwrap_or_else(|e| AugmentedSequence::unchanged(seq, Provenance::failed(e.to_string())))
        })
        .collect();
    AugmentedDataset::from_sequences(out)
}
