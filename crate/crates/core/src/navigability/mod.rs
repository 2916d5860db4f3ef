//! Empirical navigability checks: ε slack, quasi-monotonicity
//! certificates, an LP Delaunay oracle and recall@1.

mod certify;
mod delaunay;
mod recall;
mod report;

pub use certify::{certify_quasi_monotone, epsilon_exponential, epsilon_general, target_set};
pub use delaunay::{
    delaunay_graph, delaunay_neighbors_lp, delaunay_slack, DelaunayNeighbors,
    DEGENERACY_TOLERANCE,
};
pub use recall::{
    evaluate_recall, evaluate_recall_with, kernel_medoid, recall_at_1, EvalMode, RecallStats,
    Traversal,
};
pub use report::{
    audit, delaunay_subset_check, AuditOptions, DelaunayCheck, EpsilonSummary, NavigabilityReport,
    HISTOGRAM_BINS,
};
