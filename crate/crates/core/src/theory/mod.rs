//! Exact numerical checks of how the first-word marginal distorts
//! Fisher-Rao distances between distributions over whole texts, and of the
//! variance-mean exponent under context merging.

mod absorbing;
mod gamma;
mod phi;
mod probe;
mod suite;

pub use absorbing::{
    cos_half_dfr_x, d_fr_x, distortion_rate, distortion_rate_enumerated, enumerate_closed_texts,
    AbsorbingMarkovPair, DistortionMethod, DistortionReport, Enumeration, ENUMERATION_BUDGET,
};
pub use gamma::{gamma_merge_experiment, GammaConfig, GammaExperiment, GammaLevel};
pub use phi::{phi_linearity_check, TextDistribution};
pub use probe::{perturbation_probe, ProbeConfig, ProbeResult, ProbeStep};
pub use suite::{
    check_gamma, check_limit, check_lower_bound, check_oracle, check_phi_linearity,
    check_same_matrix, run_suite, Check,
};
