//! Numerical laboratory for continuous-spontaneous-localization collapse
//! models and their relativistic (tachyonic-noise) generalization.
//!
//! Natural units ħ = c = 1 are used throughout, with the tachyon mass μ = 1/a
//! as the scale. Metric signature is (+,−,−,−).

pub mod correlator;
pub mod csl;
pub mod exec;
pub mod noise;
pub mod params;
pub mod quad;
pub mod relkin;
pub mod report;
pub mod seed;
pub mod spread;
pub mod stats;
pub mod validation;

pub use exec::Execution;
pub use params::ModelParams;
