//! Information-theoretic measures over trajectories.
//!
//! All estimators are plug-in (maximum-likelihood) in bits over binary
//! variables. [`exact`] computes the same quantities without sampling for a
//! frozen policy and is the reference the estimators are tested against.

mod dist;
pub mod exact;
mod measures;
mod metric;
mod series;

pub use dist::EmpiricalDist;
pub use exact::{exact_chain_metrics, ExactChain, ExactPoint, StateDist};
pub use measures::{
    conditional_mutual_information, entropy, entropy_of_probabilities, marginal_entropy, mutual_information,
    transfer_entropy, transfer_entropy_pooled, Estimate, NEGATIVE_TOL,
};
pub use metric::{Metric, Var};
pub use series::{
    ensemble_series, mean_std, pooled_estimate, windowed_series, MetricSeries, SeriesOptions, SeriesPoint,
    StdConvention,
};
