//! Classical noise fields: spectra, lattice kernels, posterior and free-field
//! samplers, the probability functional and the Gaussian Fourier identity.

mod grid;
mod identity;
mod realization;
mod kernel;
mod sample;

pub use grid::{SpacetimeGrid, SpatialGrid};
pub use identity::{gaussian_ft_identity_residual, gaussian_ft_sides};
pub use kernel::LatticeKernel;
pub use realization::NoiseRealization;
pub use sample::{
    log_probability, sample_free_field, sample_posterior_noise, PosteriorSampler, ProbabilityModel,
    FREE_FIELD_MODES,
};

use crate::correlator::{g_nonrel_limit, CorrelatorError, RegulatedKernel};

/// Default width of the regularized tachyonic shell, in units of μ².
pub const DEFAULT_EPSILON_FACTOR: f64 = 1e-3;
/// Default UV cutoff of the lattice tachyonic kernel, in units of μ.
pub const DEFAULT_CUTOFF_FACTOR: f64 = 4.0;

#[derive(Debug, thiserror::Error)]
pub enum NoiseError {
    #[error("grid: {0}")]
    Grid(String),
    #[error("state is not normalized: sum |c|^2 = {0}")]
    NotNormalized(f64),
    #[error("discretized kernel is singular (condition estimate {condition:.3e})")]
    Singular { condition: f64 },
    #[error("spectrum is negative on the lattice (min weight {min_weight:.3e}, max {max_weight:.3e})")]
    NegativeSpectrum { min_weight: f64, max_weight: f64 },
    #[error("invalid spectrum: {0}")]
    Spectrum(String),
    #[error(transparent)]
    Correlator(#[from] CorrelatorError),
    #[error("format: {0}")]
    Format(String),
}

/// Spectral density of the noise two-point kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralDensity {
    /// G̃ ≡ strength, G = strength·δ⁴.
    White { strength: f64 },
    /// G = e^{−r²/4a²}·δ(t).
    GaussianSpatial { a: f64 },
    /// Top-hat of width ε in k² around −μ², with a Gaussian UV cutoff Λ on
    /// k₀² + |k|². Colored in time.
    Tachyonic { mu: f64, epsilon: f64, cutoff: f64 },
    /// Nonrelativistic limit of the tachyonic kernel: δ(t)·sin(μr)/(4π²r).
    TachyonicNonrel { mu: f64 },
}

impl SpectralDensity {
    pub fn tachyonic(mu: f64) -> Self {
        SpectralDensity::Tachyonic {
            mu,
            epsilon: DEFAULT_EPSILON_FACTOR * mu * mu,
            cutoff: DEFAULT_CUTOFF_FACTOR * mu,
        }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        let ok = match *self {
            SpectralDensity::White { strength } => strength >= 0.0 && strength.is_finite(),
            SpectralDensity::GaussianSpatial { a } => a > 0.0 && a.is_finite(),
            SpectralDensity::Tachyonic { mu, epsilon, cutoff } => {
                return RegulatedKernel::new(mu, epsilon, cutoff).map(|_| ()).map_err(Into::into)
            }
            SpectralDensity::TachyonicNonrel { mu } => mu > 0.0 && mu.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(NoiseError::Spectrum(self.tag()))
        }
    }

    /// Short identifier recorded with every realization.
    pub fn tag(&self) -> String {
        match *self {
            SpectralDensity::White { strength } => format!("white(strength={strength})"),
            SpectralDensity::GaussianSpatial { a } => format!("gaussian_spatial(a={a})"),
            SpectralDensity::Tachyonic { mu, epsilon, cutoff } => {
                format!("tachyonic(mu={mu},epsilon={epsilon},cutoff={cutoff})")
            }
            SpectralDensity::TachyonicNonrel { mu } => format!("tachyonic_nonrel(mu={mu})"),
        }
    }

    pub fn is_white_in_time(&self) -> bool {
        !matches!(self, SpectralDensity::Tachyonic { .. })
    }

    /// Spatial kernel S(r) for spectra that are δ-correlated in time. White
    /// noise has no pointwise kernel and returns `None`.
    pub fn spatial_kernel(&self, r: f64) -> Option<f64> {
        match *self {
            SpectralDensity::GaussianSpatial { a } => Some((-r * r / (4.0 * a * a)).exp()),
            SpectralDensity::TachyonicNonrel { mu } => Some(g_nonrel_limit(r, mu)),
            _ => None,
        }
    }

    pub fn regulated(&self) -> Option<RegulatedKernel> {
        match *self {
            SpectralDensity::Tachyonic { mu, epsilon, cutoff } => RegulatedKernel::new(mu, epsilon, cutoff).ok(),
            _ => None,
        }
    }
}

/// Eigenvalues of the discretized kernel; negative values beyond round-off
/// are rejected.
pub fn lattice_spectral_weights(spectrum: &SpectralDensity, grid: &SpacetimeGrid) -> Result<Vec<f64>, NoiseError> {
    let kernel = LatticeKernel::build(spectrum, grid)?;
    let weights = kernel.spectral_weights();
    check_weights(&weights)?;
    Ok(weights)
}

pub(crate) fn check_weights(weights: &[f64]) -> Result<(), NoiseError> {
    let max = weights.iter().cloned().fold(0.0, f64::max);
    let min = weights.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-10 * max.max(f64::MIN_POSITIVE) {
        return Err(NoiseError::NegativeSpectrum {
            min_weight: min,
            max_weight: max,
        });
    }
    Ok(())
}
