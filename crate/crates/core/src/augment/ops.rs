//! The operators themselves.
//!
//! Target counts are `max(1, floor(ratio * N))` for any non-zero ratio; a
//! zero ratio turns the operator into a no-op reported as skipped.

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::select::{gap_targets, largest_gaps, min_std_window, smallest_gaps};
use super::{AugmentConfig, AugmentedSequence, Mode, OpKind, Operator, Provenance};
use crate::error::{Error, Result};
use crate::sequence::UserSequence;
use crate::similarity::SimilarityModel;
use crate::stats::ratio_count;

/// Ratios consumed by the operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratios {
    pub beta: f64,
    pub eta: f64,
    pub mu: f64,
    pub gamma: f64,
}

impl From<&AugmentConfig> for Ratios {
    fn from(cfg: &AugmentConfig) -> Self {
        Self {
            beta: cfg.beta,
            eta: cfg.eta,
            mu: cfg.mu,
            gamma: cfg.substitute_ratio(),
        }
    }
}

fn check_ratio(name: &str, r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Invalid(format!("{name} must lie in [0, 1], got {r}")));
    }
    Ok(())
}

fn op_count(ratio: f64, n: usize) -> usize {
    if ratio <= 0.0 {
        0
    } else {
        ratio_count(ratio, n).max(1)
    }
}

/// Number of gaps split by insert, capped at `n - 1`.
pub fn insert_count(beta: f64, n: usize) -> usize {
    op_count(beta, n).min(n.saturating_sub(1))
}

/// Window length for crop and reorder: `max(2, floor(eta * n))`, at most `n`.
/// `None` for a zero ratio.
pub fn crop_length(eta: f64, n: usize) -> Option<usize> {
    (eta > 0.0).then(|| ratio_count(eta, n).max(2).min(n))
}

pub fn mask_count(mu: f64, n: usize) -> usize {
    op_count(mu, n)
}

pub fn substitute_count(gamma: f64, n: usize) -> usize {
    op_count(gamma, n)
}

fn excluded_mask(seq: &UserSequence, model: &SimilarityModel) -> Vec<bool> {
    let mut excluded = vec![false; model.n_items()];
    for item in seq.items() {
        if let Some(i) = model.index_of(item) {
            excluded[i] = true;
        }
    }
    excluded
}

fn skip(seq: &UserSequence, op: Operator, min: usize) -> AugmentedSequence {
    AugmentedSequence::unchanged(
        seq,
        Provenance::skipped(format!("{op} needs at least {min} items, got {}", seq.len())),
    )
}

fn zero_ratio(seq: &UserSequence, op: Operator) -> AugmentedSequence {
    AugmentedSequence::unchanged(seq, Provenance::skipped(format!("{op} ratio is zero")))
}

/// Inserts one correlated item after each gap in `gaps`, time-stamped at the
/// floor of the flanking midpoint. Gaps are processed in the given order;
/// each pick is excluded from later picks, as are the user's own items.
fn insert_at<R: Rng + ?Sized>(
    seq: &UserSequence,
    gaps: &[usize],
    op: Operator,
    model: &SimilarityModel,
    rng: &mut R,
) -> Result<AugmentedSequence> {
    let n = seq.len();
    if let Some(&bad) = gaps.iter().find(|&&j| j + 1 >= n) {
        return Err(Error::Invalid(format!("gap {bad} out of range for length {n}")));
    }
    let mut excluded = excluded_mask(seq, model);
    let mut inserted: Vec<Option<usize>> = vec![None; n];
    for &j in gaps {
        if inserted[j].is_some() {
            return Err(Error::Invalid(format!("gap {j} selected twice")));
        }
        let context: Vec<usize> = [&seq.items()[j], &seq.items()[j + 1]]
            .into_iter()
            .filter_map(|i| model.index_of(i))
            .collect();
        let pick = model.similar_to_idx(&context, &excluded, rng)?;
        excluded[pick] = true;
        inserted[j] = Some(pick);
    }

    let ts = seq.timestamps();
    let mut items = Vec::with_capacity(n + gaps.len());
    let mut timestamps = Vec::with_capacity(n + gaps.len());
    for j in 0..n {
        items.push(seq.items()[j].clone());
        timestamps.push(ts[j]);
        if let Some(pick) = inserted[j] {
            items.push(model.item(pick).to_string());
            timestamps.push(ts[j] + (ts[j + 1] - ts[j]) / 2);
        }
    }
    let mut positions = gaps.to_vec();
    positions.sort_unstable();
    Ok(AugmentedSequence {
        sequence: UserSequence::new(seq.user_id(), items, timestamps)?,
        provenance: Provenance::applied(op, positions),
    })
}

/// Interval-aware insert: splits the `max(1, floor(beta * N))` largest gaps.
pub fn ti_insert<R: Rng + ?Sized>(
    seq: &UserSequence,
    beta: f64,
    model: &SimilarityModel,
    rng: &mut R,
) -> Result<AugmentedSequence> {
    check_ratio("beta", beta)?;
    let op = Operator::ti(OpKind::Insert);
    if seq.len() < 2 {
        return Ok(skip(seq, op, 2));
    }
    let k = insert_count(beta, seq.len());
    if k == 0 {
        return Ok(zero_ratio(seq, op));
    }
    let gaps = largest_gaps(&seq.intervals(), k);
    insert_at(seq, &gaps, op, model, rng)
}

/// Insert at explicitly chosen gaps, tagged as the interval-aware operator.
pub fn ti_insert_at<R: Rng + ?Sized>(
    seq: &UserSequence,
    gaps: &[usize],
    model: &SimilarityModel,
    rng: &mut R,
) -> Result<AugmentedSequence> {
    insert_at(seq, gaps, Operator::ti(OpKind::Insert), model, rng)
}

/// Random insert: same count, gaps drawn uniformly without replacement.
pub fn random_insert<R: Rng + ?Sized>(
    seq: &UserSequence,
    beta: f64,
    model: &SimilarityModel,
    rng: &mut R,
) -> Result<AugmentedSequence> {
    check_ratio("beta", beta)?;
    let op = Operator::random(OpKind::Insert);
    if seq.len() < 2 {
        return Ok(skip(seq, op, 2));
    }
    let k = insert_count(beta, seq.len());
    if k == 0 {
        return Ok(zero_ratio(seq, op));
    }
    let gaps = index::sample(rng, seq.len() - 1, k).into_vec();
    insert_at(seq, &gaps, op, model, rng)
}

fn crop_window(seq: &UserSequence, start: usize, len: usize, op: Operator) -> Result<AugmentedSequence> {
    Ok(AugmentedSequence {
        sequence: seq.slice(start, start + len)?,
        provenance: Provenance::applied(op, (start..start + len).collect()),
    })
}

/// Keeps the length-`max(2, floor(eta * N))` window with the smallest
/// interval std (earliest on ties).
pub fn ti_crop(seq: &UserSequence, eta: f64) -> Result<AugmentedSequence> {
    check_ratio("eta", eta)?;
    let op = Operator::ti(OpKind::Crop);
    if seq.len() < 3 {
        return Ok(skip(seq, op, 3));
    }
    let Some(len) = crop_length(eta, seq.len()) else {
        return Ok(zero_ratio(seq, op));
    };
    let start = min_std_window(seq.timestamps(), len);
    crop_window(seq, start, len, op)
}

pub fn random_crop<R: Rng + ?Sized>(seq: &UserSequence, eta: f64, rng: &mut R) -> Result<AugmentedSequence> {
    check_ratio("eta", eta)?;
    let op = Operator::random(OpKind::Crop);
    if seq.len() < 3 {
        return Ok(skip(seq, op, 3));
    }
    let Some(len) = crop_length(eta, seq.len()) else {
        return Ok(zero_ratio(seq, op));
    };
    let start = rng.random_range(0..=seq.len() - len);
    crop_window(seq, start, len, op)
}

fn remove_items(seq: &UserSequence, targets: &[usize], op: Operator) -> Result<AugmentedSequence> {
    let mut drop = vec![false; seq.len()];
    for &t in targets {
        drop[t] = true;
    }
    let (items, timestamps): (Vec<String>, Vec<i64>) = seq
        .items()
        .iter()
        .zip(seq.timestamps())
        .zip(&drop)
        .filter(|(_, &d)| !d)
        .map(|((i, &t), _)| (i.clone(), t))
        .unzip();
    let mut positions = targets.to_vec();
    positions.sort_unstable();
    Ok(AugmentedSequence {
        sequence: UserSequence::new(seq.user_id(), items, timestamps)?,
        provenance: Provenance::applied(op, positions),
    })
}

/// Deletes the items next to the `max(1, floor(mu * N))` smallest gaps.
/// The most recent item is never deleted and at least two items remain.
pub fn ti_mask(seq: &UserSequence, mu: f64) -> Result<AugmentedSequence> {
    check_ratio("mu", mu)?;
    let op = Operator::ti(OpKind::Mask);
    let n = seq.len();
    if n < 3 {
        return Ok(skip(seq, op, 3));
    }
    let h = mask_count(mu, n);
    if h == 0 {
        return Ok(zero_ratio(seq, op));
    }
    let selected = smallest_gaps(&seq.intervals(), h);
    let targets = gap_targets(&selected, n, 2);
    remove_items(seq, &targets, op)
}

/// Random mask: same count, items drawn uniformly among all but the last.
pub fn random_mask<R: Rng + ?Sized>(seq: &UserSequence, mu: f64, rng: &mut R) -> Result<AugmentedSequence> {
    check_ratio("mu", mu)?;
    let op = Operator::random(OpKind::Mask);
    let n = seq.len();
    if n < 3 {
        return Ok(skip(seq, op, 3));
    }
    let h = mask_count(mu, n);
    if h == 0 {
        return Ok(zero_ratio(seq, op));
    }
    let targets = index::sample(rng, n - 1, h.min(n - 2)).into_vec();
    remove_items(seq, &targets, op)
}

fn substitute_at<R: Rng + ?Sized>(
    seq: &UserSequence,
    targets: &[usize],
    op: Operator,
    model: &SimilarityModel,
    rng: &mut R,
) -> Result<AugmentedSequence> {
    let mut excluded = excluded_mask(seq, model);
    let mut items = seq.items().to_vec();
    for &p in targets {
        let context: Vec<usize> = model.index_of(&seq.items()[p]).into_iter().collect();
        let pick = model.similar_to_idx(&context, &excluded, rng)?;
        excluded[pick] = true;
        items[p] = model.item(pick).to_string();
    }
    let mut positions = targets.to_vec();
    positions.sort_unstable();
    Ok(AugmentedSequence {
        sequence: UserSequence::new(seq.user_id(), items, seq.timestamps().to_vec())?,
        provenance: Provenance::applied(op, positions),
    })
}

/// Replaces the items that [`ti_mask`] would delete (count from `gamma`)
/// with correlated items the user has not interacted with. Timestamps are
/// untouched.
pub fn ti_substitute<R: Rng + ?Sized>(
    seq: &UserSequence,
    gamma: f64,
    model: &SimilarityModel,
    rng: &mut R,
) -> Result<AugmentedSequence> {
    check_ratio("gamma", gamma)?;
    let op = Operator::ti(OpKind::Substitute);
    let n = seq.len();
    if n < 2 {
        return Ok(skip(seq, op, 2));
    }
    let h = substitute_count(gamma, n);
    if h == 0 {
        return Ok(zero_ratio(seq, op));
    }
    let selected = smallest_gaps(&seq.intervals(), h);
    let targets = gap_targets(&selected, n, 0);
    substitute_at(seq, &targets, op, model, rng)
}

pub fn random_substitute<R: Rng + ?Sized>(
    seq: &UserSequence,
    gamma: f64,
    model: &SimilarityModel,
    rng: &mut R,
) -> Result<AugmentedSequence> {
    check_ratio("gamma", gamma)?;
    let op = Operator::random(OpKind::Substitute);
    let n = seq.len();
    if n < 2 {
        return Ok(skip(seq, op, 2));
    }
    let h = substitute_count(gamma, n);
    if h == 0 {
        return Ok(zero_ratio(seq, op));
    }
    let targets = index::sample(rng, n - 1, h.min(n - 1)).into_vec();
    substitute_at(seq, &targets, op, model, rng)
}

fn shuffle_window<R: Rng + ?Sized>(
    seq: &UserSequence,
    start: usize,
    len: usize,
    op: Operator,
    rng: &mut R,
) -> Result<AugmentedSequence> {
    let mut items = seq.items().to_vec();
    items[start..start + len].shuffle(rng);
    Ok(AugmentedSequence {
        sequence: UserSequence::new(seq.user_id(), items, seq.timestamps().to_vec())?,
        provenance: Provenance::applied(op, (start..start + len).collect()),
    })
}

/// Shuffles the items of the minimum-std window; timestamps keep their slots.
pub fn ti_reorder<R: Rng + ?Sized>(seq: &UserSequence, eta: f64, rng: &mut R) -> Result<AugmentedSequence> {
    check_ratio("eta", eta)?;
    let op = Operator::ti(OpKind::Reorder);
    if seq.len() < 3 {
        return Ok(skip(seq, op, 3));
    }
    let Some(len) = crop_length(eta, seq.len()) else {
        return Ok(zero_ratio(seq, op));
    };
    let start = min_std_window(seq.timestamps(), len);
    shuffle_window(seq, start, len, op, rng)
}

pub fn random_reorder<R: Rng + ?Sized>(seq: &UserSequence, eta: f64, rng: &mut R) -> Result<AugmentedSequence> {
    check_ratio("eta", eta)?;
    let op = Operator::random(OpKind::Reorder);
    if seq.len() < 3 {
        return Ok(skip(seq, op, 3));
    }
    let Some(len) = crop_length(eta, seq.len()) else {
        return Ok(zero_ratio(seq, op));
    };
    let start = rng.random_range(0..=seq.len() - len);
    shuffle_window(seq, start, len, op, rng)
}

/// Random counterpart of an operator kind.
pub fn traditional_op<R: Rng + ?Sized>(
    seq: &UserSequence,
    kind: OpKind,
    ratios: &Ratios,
    model: &SimilarityModel,
    rng: &mut R,
) -> Result<AugmentedSequence> {
    match kind {
        OpKind::Insert => random_insert(seq, ratios.beta, model, rng),
        OpKind::Crop => random_crop(seq, ratios.eta, rng),
        OpKind::Mask => random_mask(seq, ratios.mu, rng),
        OpKind::Substitute => random_substitute(seq, ratios.gamma, model, rng),
        OpKind::Reorder => random_reorder(seq, ratios.eta, rng),
    }
}

/// Applies `op` with the ratios of `cfg`. Insert output longer than
/// `cfg.max_len` keeps only its most recent `max_len` items.
pub fn apply<R: Rng + ?Sized>(
    seq: &UserSequence,
    op: Operator,
    cfg: &AugmentConfig,
    model: &SimilarityModel,
    rng: &mut R,
) -> Result<AugmentedSequence> {
    let ratios = Ratios::from(cfg);
    let mut out = match op.mode {
        Mode::Random => traditional_op(seq, op.kind, &ratios, model, rng)?,
        Mode::Ti => match op.kind {
            OpKind::Insert => ti_insert(seq, ratios.beta, model, rng)?,
            OpKind::Crop => ti_crop(seq, ratios.eta)?,
            OpKind::Mask => ti_mask(seq, ratios.mu)?,
            OpKind::Substitute => ti_substitute(seq, ratios.gamma, model, rng)?,
            OpKind::Reorder => ti_reorder(seq, ratios.eta, rng)?,
        },
    };
    if op.kind == OpKind::Insert && out.sequence.len() > cfg.max_len {
        out.sequence = out.sequence.keep_last(cfg.max_len);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::Step;
    use crate::rng;
    use crate::sequence::{interval_std, Dataset};

    fn seq(ts: &[i64]) -> UserSequence {
        let items = (0..ts.len()).map(|i| format!("v{i}")).collect();
        UserSequence::new("u", items, ts.to_vec()).unwrap()
    }

    fn model() -> SimilarityModel {
        let other = UserSequence::new(
            "w",
            ["v0", "x", "v1", "y", "v2", "z"].iter().map(|s| s.to_string()).collect(),
            (0..6).collect(),
        )
        .unwrap();
        let mut ds = Dataset::from_sequences([seq(&[0, 1, 5, 6, 10]), other]).unwrap();
        ds.extend_catalog(["v3".to_string(), "v4".to_string()]);
        SimilarityModel::fit(&ds, 2).unwrap()
    }

    #[test]
    fn insert_splits_largest_gap_at_midpoint() {
        let m = model();
        let out = ti_insert(&seq(&[0, 1, 9, 10]), 0.25, &m, &mut rng::seeded(0)).unwrap();
        assert_eq!(out.sequence.timestamps(), &[0, 1, 5, 9, 10]);
        assert_eq!(out.sequence.intervals().as_slice(), &[1, 4, 4, 1]);
        assert_eq!(out.provenance.positions, vec![1]);
        assert_eq!(out.provenance.op, Step::Applied(Operator::ti(OpKind::Insert)));
        assert!(!seq(&[0, 1, 9, 10]).items().contains(&out.sequence.items()[2]));
    }

    #[test]
    fn insert_floor_midpoint_and_equal_gap_tie() {
        let m = model();
        let out = ti_insert(&seq(&[0, 3, 6]), 0.1, &m, &mut rng::seeded(0)).unwrap();
        assert_eq!(out.sequence.timestamps(), &[0, 1, 3, 6]);
    }

    #[test]
    fn crop_picks_flat_window() {
        let out = ti_crop(&seq(&[0, 3, 4, 5, 6, 9]), 4.0 / 6.0).unwrap();
        assert_eq!(out.sequence.timestamps(), &[3, 4, 5, 6]);
        assert_eq!(out.provenance.positions, vec![1, 2, 3, 4]);
        let whole = ti_crop(&seq(&[0, 3, 4, 9]), 1.0).unwrap();
        assert_eq!(whole.sequence.timestamps(), &[0, 3, 4, 9]);
    }

    #[test]
    fn mask_drops_item_after_smallest_gap() {
        let out = ti_mask(&seq(&[0, 1, 5, 6, 10]), 0.2).unwrap();
        assert_eq!(out.sequence.timestamps(), &[0, 5, 6, 10]);
        assert_eq!(out.provenance.positions, vec![1]);
    }

    #[test]
    fn mask_on_last_gap_keeps_most_recent_item() {
        let out = ti_mask(&seq(&[0, 10, 20, 21]), 0.25).unwrap();
        assert_eq!(out.sequence.items(), &["v0", "v1", "v3"]);
    }

    #[test]
    fn zero_ratio_is_identity() {
        let s = seq(&[0, 1, 5, 6, 10]);
        let out = ti_mask(&s, 0.0).unwrap();
        assert_eq!(out.sequence, s);
        assert_eq!(out.provenance.op, Step::Skipped);
    }

    #[test]
    fn short_inputs_are_skipped() {
        let s = seq(&[0, 1]);
        assert_eq!(ti_crop(&s, 0.5).unwrap().provenance.op, Step::Skipped);
        assert_eq!(ti_mask(&s, 0.5).unwrap().provenance.op, Step::Skipped);
        assert_eq!(ti_reorder(&s, 0.5, &mut rng::seeded(1)).unwrap().provenance.op, Step::Skipped);
        let one = seq(&[0]);
        assert_eq!(
            ti_insert(&one, 0.5, &model(), &mut rng::seeded(1)).unwrap().provenance.op,
            Step::Skipped
        );
    }

    #[test]
    fn substitute_replaces_mask_position() {
        let s = seq(&[0, 1, 5, 6, 10]);
        let out = ti_substitute(&s, 0.2, &model(), &mut rng::seeded(4)).unwrap();
        assert_eq!(out.provenance.positions, vec![1]);
        assert_eq!(out.sequence.timestamps(), s.timestamps());
        for (i, (a, b)) in s.items().iter().zip(out.sequence.items()).enumerate() {
            assert_eq!(a == b, i != 1, "position {i}");
        }
        assert!(!s.items().contains(&out.sequence.items()[1]));
    }

    #[test]
    fn reorder_permutes_window_only() {
        let s = seq(&[0, 3, 4, 5, 6, 9]);
        let out = ti_reorder(&s, 4.0 / 6.0, &mut rng::seeded(8)).unwrap();
        assert_eq!(out.sequence.timestamps(), s.timestamps());
        assert_eq!(out.sequence.items()[0], "v0");
        assert_eq!(out.sequence.items()[5], "v5");
        let mut got = out.sequence.items().to_vec();
        got.sort();
        assert_eq!(got, s.items());
        assert_eq!(interval_std(&out.sequence.intervals()), interval_std(&s.intervals()));
    }

    #[test]
    fn exhausted_catalog_is_domain_error() {
        let s = seq(&[0, 1, 5, 6, 10]);
        let ds = Dataset::from_sequences([s.clone()]).unwrap();
        let m = SimilarityModel::fit(&ds, 2).unwrap();
        assert!(matches!(
            ti_insert(&s, 0.2, &m, &mut rng::seeded(0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn insert_respects_max_len() {
        let cfg = AugmentConfig {
            beta: 1.0,
            max_len: 5,
            ..AugmentConfig::default()
        };
        let s = seq(&[0, 1, 5, 6]);
        let out = apply(&s, Operator::ti(OpKind::Insert), &cfg, &model(), &mut rng::seeded(0)).unwrap();
        assert_eq!(out.sequence.len(), 5);
        assert_eq!(out.sequence.timestamps().last(), Some(&6));
    }

    #[test]
    fn random_ops_are_seeded() {
        let s = seq(&[0, 1, 5, 6, 10, 30, 31, 90]);
        let m = model();
        let r = Ratios {
            beta: 0.3,
            eta: 0.5,
            mu: 0.3,
            gamma: 0.3,
        };
        for kind in OpKind::ALL {
            let a = traditional_op(&s, kind, &r, &m, &mut rng::seeded(11)).unwrap();
            let b = traditional_op(&s, kind, &r, &m, &mut rng::seeded(11)).unwrap();
            assert_eq!(a, b, "{kind:?}");
        }
        let crop = random_crop(&s, 0.5, &mut rng::seeded(2)).unwrap();
        assert_eq!(crop.sequence.len(), 4);
    }
}
