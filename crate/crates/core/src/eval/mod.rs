//! Leave-one-subject-out folds, metrics and the experiment suite.

mod experiments;
mod folds;
mod metrics;
mod plot;

pub use experiments::{
    evaluate_scored, run_experiment, DropColumn, EvalReport, ExperimentKind, ExperimentReport, FoldMetrics, FusionPlan,
    MeanStd, PredictionRow, PredictionTable, RandomDropReport, Scored, SummaryStats, FUSION_NAME, RANDOM_DROP_FRACTION,
    RANDOM_DROP_TRIALS,
};
pub use folds::{loso_folds, FoldPlan};
pub use metrics::{kappa, pearson, roc_auc, weighted_metrics, Confusion, RocPoint, WeightedMetrics};
pub use plot::{roc_csv, roc_svg};
