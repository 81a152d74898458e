use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::baseline::BaselineConfig;
use super::metrics::{evaluate, EvalReport};
use super::report::{fmt_metric, Table};
use crate::augment::{augment_dataset, AugmentConfig, AugmentedDataset, OpKind, Operator, OperatorSet};
use crate::error::{Error, Result};
use crate::ingest::{leave_one_out, SplitDataset, Target};
use crate::partition::{partition, partition_random, Strategy};
use crate::rng::derive_seed;
use crate::sequence::Dataset;
use crate::similarity::SimilarityModel;

/// Gate fractions of the sigma sweep; 0 is the all-non-uniform reference.
pub const SIGMA_GRID: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub baseline: BaselineConfig,
    pub augment: AugmentConfig,
    pub k_list: Vec<usize>,
    pub target: Target,
    /// Augmented copies added to training per transformed user.
    pub views: usize,
    /// Seed of the random partition.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            baseline: BaselineConfig::default(),
            augment: AugmentConfig::default(),
            k_list: vec![10, 20],
            target: Target::Test,
            views: 1,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.baseline.validate()?;
        self.augment.validate()?;
        if self.k_list.is_empty() || self.k_list.contains(&0) {
            return Err(Error::Config(format!(
                "cutoffs {:?} must be non-empty and positive",
                self.k_list
            )));
        }
        if self.views == 0 {
            return Err(Error::Config("views must be at least 1".into()));
        }
        Ok(())
    }
}

/// `train` plus every transformed sequence of each view, keyed
/// `"{user}#aug{view}"`.
pub fn with_views(train: &Dataset, views: &[AugmentedDataset]) -> Result<Dataset> {
    let mut out = train.clone();
    for (j, view) in views.iter().enumerate() {
        for a in view.transformed() {
            let id = format!("{}#aug{j}", a.sequence.user_id());
            out.insert(a.sequence.with_user_id(id))?;
        }
    }
    Ok(out)
}

fn augment_views(
    train: &Dataset,
    sim: &SimilarityModel,
    aug: &AugmentConfig,
    views: usize,
) -> Result<Vec<AugmentedDataset>> {
    (0..views)
        .map(|j| {
            let mut cfg = aug.clone();
            if j > 0 {
                cfg.seed = derive_seed(aug.seed, &format!("view-{j}"));
            }
            augment_dataset(train, &cfg, sim)
        })
        .collect()
}

fn fit_and_evaluate(train: &Dataset, split: &SplitDataset, cfg: &ExperimentConfig) -> Result<EvalReport> {
    let model = cfg.baseline.fit(train)?;
    evaluate(&model, split, cfg.target, &cfg.k_list)
}

/// Trains the baseline on `split.train`, plus augmented views when `augment`
/// is given, and evaluates on `cfg.target`.
///
/// Augmentation only sees training data, so held-out targets never leak into
/// the added sequences.
pub fn train_and_evaluate(
    split: &SplitDataset,
    augment: Option<&AugmentConfig>,
    cfg: &ExperimentConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    match augment {
        None => fit_and_evaluate(&split.train, split, cfg),
        Some(aug) => {
            let sim = SimilarityModel::fit(&split.train, cfg.baseline.window)?;
            let views = augment_views(&split.train, &sim, aug, cfg.views)?;
            fit_and_evaluate(&with_views(&split.train, &views)?, split, cfg)
        }
    }
}

/// Relative change `(value - reference) / reference` in percent per metric.
fn improvement(value: &EvalReport, reference: &EvalReport) -> BTreeMap<String, f64> {
    value
        .named_values()
        .into_iter()
        .zip(reference.named_values())
        .map(|((name, v), (_, r))| {
            let pct = if r == 0.0 {
                if v == 0.0 { 0.0 } else { f64::INFINITY }
            } else {
                (v - r) / r * 100.0
            };
            (name, pct)
        })
        .collect()
}

fn difference(value: &EvalReport, reference: &EvalReport) -> BTreeMap<String, f64> {
    value
        .named_values()
        .into_iter()
        .zip(reference.named_values())
        .map(|((name, v), (_, r))| (name, v - r))
        .collect()
}

fn metric_header(lead: &[&str], report: &EvalReport) -> Vec<String> {
    lead.iter()
        .map(|s| s.to_string())
        .chain(report.named_values().into_iter().map(|(n, _)| n))
        .collect()
}

fn metric_cells(report: &EvalReport) -> impl Iterator<Item = String> + '_ {
    report.named_values().into_iter().map(|(_, v)| fmt_metric(v))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetResult {
    pub name: String,
    pub n_users: usize,
    pub n_interactions: usize,
    pub report: EvalReport,
}

fn evaluate_subset(name: &str, ds: &Dataset, cfg: &ExperimentConfig) -> Result<SubsetResult> {
    let split = leave_one_out(ds);
    if split.targets(cfg.target).is_empty() {
        return Err(Error::Domain(format!(
            "subset {name} has no user with at least 3 interactions to evaluate"
        )));
    }
    let report = fit_and_evaluate(&split.train, &split, cfg).map_err(|e| match e {
        Error::Domain(m) => Error::Domain(format!("subset {name}: {m}")),
        other => other,
    })?;
    Ok(SubsetResult {
        name: name.to_string(),
        n_users: ds.len(),
        n_interactions: ds.n_interactions(),
        report,
    })
}

/// Uniform vs non-uniform subset comparison, with a random half as control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub strategy: Strategy,
    pub seed: u64,
    pub uniform: SubsetResult,
    pub non_uniform: SubsetResult,
    pub random: SubsetResult,
    /// Uniform relative to non-uniform, in percent.
    pub improve: BTreeMap<String, f64>,
}

impl AssumptionReport {
    pub fn table(&self) -> Table {
        let header = metric_header(&["subset", "n_users", "n_interactions"], &self.uniform.report);
        let mut rows: Vec<Vec<String>> = [&self.uniform, &self.non_uniform, &self.random]
            .into_iter()
            .map(|s| {
                [s.name.clone(), s.n_users.to_string(), s.n_interactions.to_string()]
                    .into_iter()
                    .chain(metric_cells(&s.report))
                    .collect()
            })
            .collect();
        let improve = self
            .uniform
            .report
            .named_values()
            .into_iter()
            .map(|(n, _)| format!("{:.2}%", self.improve[&n]));
        rows.push(
            ["improve".to_string(), String::new(), String::new()]
                .into_iter()
                .chain(improve)
                .collect(),
        );
        Table::new(header, rows)
    }
}

/// Partitions `ds`, then trains and evaluates one baseline per subset.
///
/// The random control is always a seeded random half of all users, whatever
/// the strategy.
pub fn run_assumption_experiment(
    ds: &Dataset,
    strategy: Strategy,
    cfg: &ExperimentConfig,
) -> Result<AssumptionReport> {
    cfg.validate()?;
    let parts = partition(ds, strategy, cfg.seed);
    let uniform = evaluate_subset("uniform", &parts.uniform, cfg)?;
    let non_uniform = evaluate_subset("non-uniform", &parts.non_uniform, cfg)?;
    let random = evaluate_subset("random", &partition_random(ds, cfg.seed), cfg)?;
    let improve = improvement(&uniform.report, &non_uniform.report);
    Ok(AssumptionReport {
        strategy,
        seed: cfg.seed,
        uniform,
        non_uniform,
        random,
        improve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub operators: OperatorSet,
    pub report: EvalReport,
    /// Metric minus the all-Ti row's metric.
    pub delta: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    /// Training without augmentation, for reference.
    pub no_augmentation: EvalReport,
    /// The all-Ti row first, then one row per swapped operator.
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn table(&self) -> Table {
        let mut header = metric_header(&["row", "operators"], &self.no_augmentation);
        header.push("delta_ndcg".into());
        let k = self.no_augmentation.metrics.first().map(|m| m.k).unwrap_or(10);
        let key = format!("ndcg@{k}");
        let mut rows = vec![["none".to_string(), "-".to_string()]
            .into_iter()
            .chain(metric_cells(&self.no_augmentation))
            .chain([String::new()])
            .collect()];
        for r in &self.rows {
            rows.push(
                [r.label.clone(), r.operators.to_string()]
                    .into_iter()
                    .chain(metric_cells(&r.report))
                    .chain([format!("{:+.6}", r.delta[&key])])
                    .collect(),
            );
        }
        Table::new(header, rows)
    }
}

/// Replaces one interval-aware operator at a time with its random
/// counterpart and compares against the full interval-aware set.
///
/// Every row starts from `cfg.augment` with the operator set forced to all
/// five interval-aware operators.
pub fn run_ablation_experiment(ds: &Dataset, cfg: &ExperimentConfig) -> Result<AblationReport> {
    cfg.validate()?;
    let split = leave_one_out(ds);
    let sim = SimilarityModel::fit(&split.train, cfg.baseline.window)?;
    let run = |aug: &AugmentConfig| -> Result<EvalReport> {
        let views = augment_views(&split.train, &sim, aug, cfg.views)?;
        fit_and_evaluate(&with_views(&split.train, &views)?, &split, cfg)
    };

    let mut all_ti = cfg.augment.clone();
    all_ti.operators = OperatorSet::all_ti();
    let control = run(&all_ti)?;
    let mut rows = vec![AblationRow {
        label: "all-Ti".into(),
        operators: all_ti.operators.clone(),
        delta: difference(&control, &control),
        report: control.clone(),
    }];
    for kind in OpKind::ALL {
        let (from, to) = (Operator::ti(kind), Operator::random(kind));
        let swapped = all_ti.with_swapped(from, to);
        let report = run(&swapped)?;
        rows.push(AblationRow {
            label: format!("{from}->{to}"),
            operators: swapped.operators,
            delta: difference(&report, &control),
            report,
        });
    }
    Ok(AblationReport {
        no_augmentation: fit_and_evaluate(&split.train, &split, cfg)?,
        rows,
    })
}

/// No augmentation vs all interval-aware vs all random operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenefitReport {
    pub no_augmentation: EvalReport,
    pub all_ti: EvalReport,
    pub all_random: EvalReport,
}

impl BenefitReport {
    pub fn table(&self) -> Table {
        let header = metric_header(&["training"], &self.no_augmentation);
        let rows = [
            ("none", &self.no_augmentation),
            ("all-Ti", &self.all_ti),
            ("all-random", &self.all_random),
        ]
        .into_iter()
        .map(|(label, r)| std::iter::once(label.to_string()).chain(metric_cells(r)).collect())
        .collect();
        Table::new(header, rows)
    }
}

pub fn run_benefit_experiment(ds: &Dataset, cfg: &ExperimentConfig) -> Result<BenefitReport> {
    cfg.validate()?;
    let split = leave_one_out(ds);
    let sim = SimilarityModel::fit(&split.train, cfg.baseline.window)?;
    let run = |ops: OperatorSet| -> Result<EvalReport> {
        let mut aug = cfg.augment.clone();
        aug.operators = ops;
        let views = augment_views(&split.train, &sim, &aug, cfg.views)?;
        fit_and_evaluate(&with_views(&split.train, &views)?, &split, cfg)
    };
    Ok(BenefitReport {
        no_augmentation: fit_and_evaluate(&split.train, &split, cfg)?,
        all_ti: run(OperatorSet::all_ti())?,
        all_random: run(OperatorSet::all_random())?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRow {
    pub sigma: f64,
    pub report: EvalReport,
    /// Relative to the `sigma = 0` row, in percent.
    pub improve: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSweepReport {
    pub no_augmentation: EvalReport,
    /// One row per entry of [`SIGMA_GRID`], ascending.
    pub rows: Vec<SigmaRow>,
}

impl SigmaSweepReport {
    pub fn table(&self) -> Table {
        let mut header = metric_header(&["sigma"], &self.no_augmentation);
        let k = self.no_augmentation.metrics.first().map(|m| m.k).unwrap_or(10);
        let key = format!("ndcg@{k}");
        header.push(format!("improve_{key}"));
        let rows = self
            .rows
            .iter()
            .map(|r| {
                std::iter::once(format!("{:.1}", r.sigma))
                    .chain(metric_cells(&r.report))
                    .chain([format!("{:.2}%", r.improve[&key])])
                    .collect()
            })
            .collect();
        Table::new(header, rows)
    }
}

/// Augments with each gate fraction in [`SIGMA_GRID`] and compares against
/// gating nothing.
pub fn run_sigma_sweep(ds: &Dataset, cfg: &ExperimentConfig) -> Result<SigmaSweepReport> {
    cfg.validate()?;
    let split = leave_one_out(ds);
    let sim = SimilarityModel::fit(&split.train, cfg.baseline.window)?;
    let mut reports = Vec::with_capacity(SIGMA_GRID.len());
    for sigma in SIGMA_GRID {
        let mut aug = cfg.augment.clone();
        aug.sigma = sigma;
        let views = augment_views(&split.train, &sim, &aug, cfg.views)?;
        reports.push((sigma, fit_and_evaluate(&with_views(&split.train, &views)?, &split, cfg)?));
    }
    let reference = reports[0].1.clone();
    Ok(SigmaSweepReport {
        no_augmentation: fit_and_evaluate(&split.train, &split, cfg)?,
        rows: reports
            .into_iter()
            .map(|(sigma, report)| SigmaRow {
                sigma,
                improve: improvement(&report, &reference),
                report,
            })
            .collect(),
    })
}
