//! Grassberger-Procaccia estimation: pair-distance histogram, correlation
//! integral, and the log-log slope fit.

mod curve;
mod estimate;
mod fit;
mod grid;
mod histogram;

pub use curve::{correlation_curve, CorrelationCurve};
pub use estimate::{estimate, estimate_embedded, EstimateOptions, EstimateReport};
pub use fit::{fit_dimension, ols, DimensionEstimate, FitRule, LineFit};
pub use grid::EpsilonGrid;
pub use histogram::{pairwise_histogram, DistanceHistogram};
