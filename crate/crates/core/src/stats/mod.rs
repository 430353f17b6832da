//! Replicate-level statistics: paired comparisons, one-way ICC, design
//! effects, cluster-robust OLS and group-by aggregation.

mod aggregate;
mod icc;
mod ols;
mod paired;

pub use aggregate::{aggregate_groups, GroupMean};
pub use icc::{design_effect, icc_oneway, IccResult};
pub use ols::{cluster_robust_ols, RegressionResult};
pub use paired::{paired_summary, paired_t_test, student_t_two_sided_p, PairedSummary, TTest};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("paired differences have zero variance")]
    DegenerateVariance,
    #[error("need at least 2 groups and 2 within-group degrees of freedom")]
    TooFewGroups,
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("cluster-robust inference needs at least 2 clusters")]
    SingleCluster,
    #[error("need more observations ({rows}) than regressors ({cols})")]
    TooFewObservations { rows: usize, cols: usize },
    #[error("non-finite input value")]
    NonFinite,
}
