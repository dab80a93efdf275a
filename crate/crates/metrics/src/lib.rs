//! Learning metrics over transcripts: the first-streak index m* for human
//! play, terminal cumulative error for learning runs, Mann-Whitney
//! comparisons and the data behind ECDF, strip and learning-curve plots.

pub mod curves;
pub mod log;
pub mod stats;

pub use curves::{ecdf, median_curve, strip_data, CurvePoint, EcdfPoint, StripPoint};
pub use log::{m_star, streak_false_positive, tce, MetricError, MoveLog, RunSummary, Tce};
pub use stats::{bonferroni, mann_whitney, mann_whitney_with, with_placeholders, Alternative, Method, UTest};

/// Streak length defining m*.
pub const STREAK_LEN: usize = 10;
/// Episodes inspected by the convergence criterion.
pub const CONVERGENCE_WINDOW: usize = 150;
/// Error rate below which a run counts as converged.
pub const RATE_THRESHOLD: f64 = 0.0025;
