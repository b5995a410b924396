//! Experiment protocols, metrics and reports.

mod experiment;
mod metrics;
mod plan;
mod report;

pub use experiment::{
    measure_running_time, run_experiment, run_experiment_with_progress, AggregateMetrics, EvalReport, Experiment,
    ExperimentConfig, FoldArtifacts, FoldReport, FoldStatus, Timing,
};
pub use metrics::{compute_metrics, ClassMetrics, ConfusionMatrix, Metrics, CLASS_COUNT};
pub use plan::{make_holdout_plan, make_loso_plan, Coverage, Fold, FoldPlan, Scheme, SUPERTRIALS};
pub use report::{
    confusion_csv, format_report_table, labeling_code, normalized_confusion_csv, report_stem, timing_json, write_report,
};
