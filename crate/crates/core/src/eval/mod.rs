//! Splits, metrics, event scoring and reports.

pub mod events;
pub mod metrics;
pub mod report;
pub mod split;

pub use events::{event_f1, event_f1_for_family, extract_events, Event, EventScore, WindowPos};
pub use metrics::{
    auprc, auroc, average_precision, best_f1, min_max_normalize, pr_curve, predict_mask, BestF1, PrPoint, Threshold,
};
pub use report::{
    aggregate_seeds, evaluate_scores, family_breakdown, mean_std, write_aggregate_csv, write_pr_csv, AggregateRow,
    EvalReport, FamilyMetrics, MetricSummary, ScoredWindows,
};
pub use split::{
    split, split_chronological, split_leave_log_out, split_purged, Partition, Protocol, SplitAssignment, SplitFractions,
};
