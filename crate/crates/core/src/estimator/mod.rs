//! Fitting and prediction.
//!
//! For every feature the estimator fits each class-partition hypothesis by
//! maximum likelihood, compares it to the null with a likelihood-ratio
//! statistic, and turns the penalized statistics into posterior hypothesis
//! weights. Prediction mixes the per-hypothesis Gaussian log-densities with
//! those weights.

mod dataset;
pub mod mles;
mod model;
mod penalty;
mod stats;

pub use dataset::Dataset;
pub(crate) use dataset::{check_finite, default_feature_names};
pub use mles::{fit_mles, gamma_weights, lrt, lrt_matrix, Mles, Variances};
pub use model::{fit, FitOptions, FittedModel, Prediction, SelectedFeature};
pub(crate) use model::argmax;
pub use penalty::{PenaltyConfig, PenaltyKind, PriorTermMode};
pub use stats::{accumulate_stats, SufficientStats};
