//! Direct, classifier-free estimation of the Bayes error rate.
//!
//! The estimators count class labels inside Euclidean balls around each
//! sample, turn the counts into density-ratio estimates, and plug those into
//! an integral representation of the Bayes error. An ensemble over several
//! radii, weighted at Chebyshev nodes, cancels the leading bias terms.
//!
//! ```
//! use bayes_bench::datagen::{generate, DistributionSpec};
//! use bayes_bench::estimator::{estimate, EstimatorConfig};
//!
//! // two unit Gaussians in 3-D, means 2 apart: true error Φ(−1) ≈ 0.159
//! let spec = DistributionSpec::gaussian_shift(3, 2.0, 42)?;
//! let data = generate(&spec, &[800, 800])?;
//! let report = estimate(&data, &EstimatorConfig::default())?.report;
//! assert!((report.estimate - 0.159).abs() < 0.05);
//! # Ok::<(), bayes_bench::Error>(())
//! ```
//!
//! Modules, roughly bottom-up:
//!
//! - [`data`]: CSV ingestion, class partitions, priors, standardization.
//! - [`geometry`]: kd-tree fixed-radius counts per class.
//! - [`chebyshev`]: ensemble nodes and bias-cancelling weights.
//! - [`density_ratio`]: ε-ball ratio estimates and bandwidth schedules.
//! - [`bayes_error`]: the binary, symmetrized, ensemble, multiclass and
//!   HP-bound estimators.
//! - [`estimator`]: one-call front end over all of the above.
//! - [`befs`]: greedy forward feature selection.
//! - [`datagen`]: synthetic families with exact or Monte-Carlo oracles.
//! - [`experiments`]: MSE sweeps, bound comparisons, CLT check.

pub mod bayes_error;
pub mod befs;
pub mod chebyshev;
pub mod data;
pub mod datagen;
pub mod density_ratio;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod geometry;
pub mod stats;

pub use error::{Error, Result};
pub use estimator::{estimate, estimate_value, Estimate, EstimatorConfig};
