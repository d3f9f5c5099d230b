//! Correlation-dimension estimation for trajectories of probability vectors.
//!
//! Points live on the probability simplex, and distances are Fisher-Rao
//! (`2·acos Σ√(pᵢqᵢ)`) by default. The pipeline filters rows, optionally
//! folds the vocabulary with a modulo reduction, histograms all pair
//! distances on a log-spaced grid, and fits the slope of `log C(ε)` against
//! `log ε`.
//!
//! ```
//! use gpdim::corrdim::{estimate, EstimateOptions};
//! use gpdim::processes::gen_uniform_sphere_noise;
//!
//! let seq = gen_uniform_sphere_noise(3, 600, 1);
//! let opts = EstimateOptions { filter: None, ..EstimateOptions::default() };
//! let report = estimate(&seq, &opts).unwrap();
//! assert!((report.estimate.nu_hat - 2.0).abs() < 0.3);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corrdim;
pub mod error;
pub mod io;
pub mod metrics;
pub mod prob;
pub mod processes;
pub mod reduce;
pub mod theory;

pub use corrdim::{estimate, CorrelationCurve, DimensionEstimate, EstimateOptions, EstimateReport};
pub use error::{Error, Result};
pub use metrics::{Embedding, Metric};
pub use prob::{FilterSpec, ProbVector, StateSequence};
pub use reduce::ReductionSpec;
