//! Metrics, grouped cross-validation, per-entity recall, account voting and
//! Welch t-tests.

mod cv;
mod entity;
mod metrics;
mod stats;

pub use cv::{assign_folds, cross_validate, CvResult, DEFAULT_FOLDS};
pub use entity::{account_vote, group_votes, per_entity_recall, BlockVote};
pub use metrics::{
    binary_metrics, format_metric, multiclass_metrics, roc_auc, BinaryMetrics, ConfusionMatrix, MetricsReport,
    MulticlassMetrics, Undefined, REPORT_CSV_HEADER,
};
pub use stats::{ln_gamma, regularized_incomplete_beta, student_t_two_tailed, welch_t_test, WelchResult};
