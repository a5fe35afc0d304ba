//! Query-conditioned completeness sweeps, candidate generation and budgeted
//! group recall.

mod candidates;
mod completeness;
mod features;
mod recall;

pub use candidates::{
    dbscan, epsilon_schedule, generate_candidates, Candidate, CandidateConfig, CandidatePool,
    MIN_REGION, MIN_SAMPLES, NODE_CAP,
};
pub use completeness::{
    completeness_levelwise, completeness_viewwise, ctr, iou, threshold_grid, threshold_mask,
    CtrReport, EvalScene, EvalView, LevelwiseReport, N_THRESHOLDS, THRESHOLD_MAX,
};
pub use features::{tangent_affinity_score, FeatureGrid, ScoreMap};
pub use recall::{auc, group_recall, BudgetMetrics, RecallMetrics, RecallReport, DEFAULT_BUDGETS};
