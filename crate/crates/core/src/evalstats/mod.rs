//! Executability and relative-error metrics over run records, the two
//! one-sided tests and effect size used to compare variants, and report
//! rendering.

mod metrics;
mod report;
mod stats;

pub use metrics::{mean, median, relative_error, sample_std, summarize, MetricsSummary, MissingGroundTruth, ZERO_TOLERANCE};
pub use report::{build_cells, compare, report, Cell, Comparison, ComparisonConfig, ComparisonSpec, Metric, ReportDocument};
pub use stats::{
    a12, magnitude, mann_whitney_u, normal_sf, z_test_proportions, Direction, Magnitude, SampleError, StatTestResult,
    TestKind, EXACT_LIMIT,
};
