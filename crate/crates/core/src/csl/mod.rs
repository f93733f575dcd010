//! Nonrelativistic collapse dynamics with H = 0: trajectories under sampled
//! noise, ensemble statistics, density-matrix decay and the time-ordering
//! identity.

mod decay;
mod ensemble;
mod identity;
mod state;
mod trajectory;

pub use decay::{csl_energy_rate, csl_offdiag_massratio, offdiag_decay_exponent, MassRatioFactor};
pub use ensemble::{
    coherence_estimate, collapse_statistics, martingale_check, run_ensemble, CoherenceEstimate, CollapseStats,
    EnsembleConfig, EnsembleRun, MartingaleReport,
};
pub use identity::{expm, time_ordering_identity_residual, time_ordering_residual, MatrixPath};
pub use state::{Branch, StateError, SuperpositionState, NORM_TOLERANCE};
pub use trajectory::{evolve_trajectory, evolve_with, TrajectoryRecord, DEFAULT_THRESHOLD};

use crate::correlator::CorrelatorError;
use crate::noise::NoiseError;

#[derive(Debug, thiserror::Error)]
pub enum CslError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Correlator(#[from] CorrelatorError),
    #[error("{0}")]
    Config(String),
    #[error("{steps} steps is too few: h·max|B| = {product:.3} exceeds the Magnus convergence bound")]
    TooFewSteps { steps: usize, product: f64 },
}
