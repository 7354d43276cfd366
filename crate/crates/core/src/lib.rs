//! Diagonal discriminant analysis with per-feature hypothesis weighting.
//!
//! Each feature is tested against every admissible way of grouping the
//! classes (a set partition), the likelihood-ratio statistics are penalized
//! into posterior weights, and predictions combine the weighted Gaussian
//! log-densities of all features.
//!
//! ```
//! use multida::{Dataset, FitOptions};
//! use ndarray::array;
//!
//! let data = Dataset::from_raw_labels(
//!     array![[0.0], [2.0], [4.0], [6.0]],
//!     &["a", "a", "b", "b"],
//!     None,
//! ).unwrap();
//! let model = FitOptions::default().fit(&data).unwrap();
//! let pred = model.predict(array![[0.0], [6.0]].view()).unwrap();
//! assert_eq!(pred.labels, vec![0, 1]);
//! ```

pub mod data_io;
pub mod error;
pub mod estimator;
pub mod partitions;
pub mod simlab;

pub use error::{Error, Result};
pub use estimator::{
    fit, Dataset, FitOptions, FittedModel, PenaltyConfig, PenaltyKind, Prediction, PriorTermMode,
    SelectedFeature,
};
pub use partitions::{PartitionColumn, PartitionSet, Scheme, VarianceMode};

/// Softmax with max subtraction. `-inf` entries get probability 0; at least
/// one entry must be finite.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    out
}
