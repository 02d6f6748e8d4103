//! Metrics, leakage-safe cross-validation, grid search and the benchmark.

mod harness;
mod metrics;
mod reference;
mod report;

pub use harness::{
    benchmark, cross_validate, default_cells, expand_grid, fold_state, grid_search, prepare_fold, Cell, CellResult,
    EvalConfig, FoldData, GridPoint, GridResult, Method, SeedRun, Variant,
};
pub use metrics::{
    all_negative_baseline, auc, compute_metrics, mean_std, metrics_from_predictions, ConfusionMatrix, FoldMetrics,
    MeanStd, MetricSummary,
};
pub use reference::{reference_row, ReferenceRow, REFERENCE_ALL_NEGATIVE};
pub use report::{AllNegative, BenchmarkReport, Provenance, ReportCell, FORMAT_VERSION};

#[cfg(test)]
pub(crate) fn harness_toy(n: usize) -> crate::dataset::Dataset {
    harness::tests::toy(n, 0)
}
