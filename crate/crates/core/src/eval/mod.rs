//! Next-item baseline recommender, ranking metrics and experiment runners.
//!
//! The baseline mixes a first-order transition estimate, the mean cosine
//! similarity to the most recent items and normalized popularity. Every
//! catalog item is ranked; nothing already seen is filtered out.

mod baseline;
mod experiment;
mod metrics;
mod report;

pub use baseline::{train_baseline, BaselineConfig, BaselineModel, Weights};
pub use experiment::{
    run_ablation_experiment, run_assumption_experiment, run_benefit_experiment, run_sigma_sweep,
    train_and_evaluate, with_views, AblationReport, AblationRow, AssumptionReport,
    BenefitReport, ExperimentConfig, SigmaRow, SigmaSweepReport, SubsetResult, SIGMA_GRID,
};
pub use metrics::{evaluate, hit, ndcg_contribution, rank_of, EvalReport, MetricAtK};
pub use report::Table;
