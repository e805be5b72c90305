//! Downlink coverage of a ground user served by the nearest drone in a
//! Poisson field of drone base stations.
//!
//! The crate has two independent routes to every quantity of interest:
//!
//! * [`analysis`] evaluates the closed-form integrals (mean aggregate
//!   interference, coverage probability, average LoS probability of the
//!   closest drone) with adaptive Gauss-Kronrod quadrature.
//! * [`montecarlo`] realizes the drone field and the channel draws directly
//!   and reports an estimate with its standard error.
//!
//! [`optimize`] sweeps altitude, density and beamwidth on top of the
//! analytic engine and refines the coverage-maximizing value.
//!
//! Heavy loops (trial batches, sweep points) run on rayon when the
//! `parallel` feature is enabled; see [`exec::Execution`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod montecarlo;
pub mod optimize;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;

pub use analysis::{
    avg_los_closest, build_interference_profile, coverage_probability, mean_aggregate_interference,
    psi_threshold, upsilon_i, InterferenceProfile, NestedStrategy,
};
pub use channel::{EnvironmentParams, EnvironmentSet, LinkKind, LinkState};
pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{FieldRealization, SystemConfig};
pub use montecarlo::{MonteCarloReport, SimulationMode, Simulator};
pub use optimize::{SweepParameter, SweepResult, SweepRow, SweepSpec};
pub use quadrature::QuadratureSpec;

/// Upper limit of the off-vertical angle at which the LoS model is defined
/// (75 degrees). Beamwidths are therefore capped at twice this value.
pub const ANGLE_CEILING: f64 = 5.0 * std::f64::consts::PI / 12.0;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `ln(10) / 10`, the factor taking a dB quantity to natural-log units.
pub const DB_TO_NEPER: f64 = std::f64::consts::LN_10 / 10.0;

/// Converts a dB (or dBW) value to linear scale.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear ratio (or watts) to dB (or dBW).
#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
