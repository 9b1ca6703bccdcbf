//! Estimators and hypothesis tests for the sampled processes.

mod ap;
mod gowers;
pub mod hypothesis;
mod invariance;
mod marginal;

pub use ap::{ap_count_distribution, ApConfig};
pub use gowers::{gowers_norm, GowersConfig, GowersEstimate, GowersMode, RealGrid};
pub use hypothesis::{
    binomial_pmf, chisq_goodness_of_fit, holm, ks_uniform, normal_quantile, normal_sf,
    two_proportion_z, two_sample_chisq, ChiSquareResult, Histogram,
};
pub use invariance::{invariance_test, InvarianceReport, QueryVerdict};
pub use marginal::{
    intensity, k_point_marginal, wilson_interval, Estimate, MarginalEstimate, MarginalQuery,
};
