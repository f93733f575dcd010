//! Vacuum excitation and pair-production spectral support.

use super::{check_positive, RelkinError};
use crate::noise::{NoiseError, SpectralDensity};
use crate::params::ModelParams;
use std::f64::consts::PI;

/// Relative tolerance of the mass-shell check.
pub const SHELL_TOLERANCE: f64 = 1e-8;

/// Four-momentum (E, p) with metric (+,−,−,−).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourMomentum {
    pub e: f64,
    pub p: [f64; 3],
}

impl FourMomentum {
    pub fn new(e: f64, p: [f64; 3]) -> Self {
        FourMomentum { e, p }
    }

    /// Positive-energy point on the mass shell.
    pub fn on_shell(mass: f64, p: [f64; 3]) -> Self {
        let e = (mass * mass + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        FourMomentum { e, p }
    }

    pub fn p_sq(&self) -> f64 {
        self.p[0] * self.p[0] + self.p[1] * self.p[1] + self.p[2] * self.p[2]
    }

    pub fn square(&self) -> f64 {
        self.e * self.e - self.p_sq()
    }

    pub fn add(&self, o: &FourMomentum) -> FourMomentum {
        FourMomentum {
            e: self.e + o.e,
            p: [self.p[0] + o.p[0], self.p[1] + o.p[1], self.p[2] + o.p[2]],
        }
    }

    fn check_shell(&self, mass: f64) -> Result<(), RelkinError> {
        let sq = self.square();
        let m2 = mass * mass;
        if !(self.e > 0.0) || (sq - m2).abs() > SHELL_TOLERANCE * (self.e * self.e) {
            return Err(RelkinError::OffShell {
                square: sq,
                mass_sq: m2,
            });
        }
        Ok(())
    }
}

/// Energy produced per time per volume out of the vacuum at first order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VacuumRate {
    /// The spectrum vanishes at k² = μ²; nothing is produced.
    Zero,
    /// γG̃(μ²) times the divergent measure (2π)⁻³∫d³k.
    Divergent { prefactor: f64 },
    /// Spectra that are not Lorentz invariant: the mode integral converges to
    /// γ times the equal-point spatial kernel.
    Finite { value: f64 },
}

impl VacuumRate {
    /// Finite prefactor: γG̃(μ²), the finite value, or 0.
    pub fn prefactor(&self) -> f64 {
        match *self {
            VacuumRate::Zero => 0.0,
            VacuumRate::Divergent { prefactor } => prefactor,
            VacuumRate::Finite { value } => value,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, VacuumRate::Divergent { .. })
    }

    /// Value with the mode integral cut off at |k| = Λ.
    pub fn with_cutoff(&self, cutoff: f64) -> f64 {
        match *self {
            VacuumRate::Divergent { prefactor } => {
                prefactor * (4.0 * PI / 3.0) * cutoff.powi(3) / (2.0 * PI).powi(3)
            }
            other => other.prefactor(),
        }
    }
}

pub fn vacuum_rate_density(spectrum: &SpectralDensity, params: &ModelParams) -> Result<VacuumRate, NoiseError> {
    spectrum.validate()?;
    let g = params.gamma;
    Ok(match *spectrum {
        SpectralDensity::White { strength } => {
            if strength == 0.0 || g == 0.0 {
                VacuumRate::Zero
            } else {
                VacuumRate::Divergent { prefactor: g * strength }
            }
        }
        SpectralDensity::Tachyonic { .. } => VacuumRate::Zero,
        SpectralDensity::GaussianSpatial { .. } | SpectralDensity::TachyonicNonrel { .. } => VacuumRate::Finite {
            value: g * spectrum.spatial_kernel(0.0).unwrap_or(0.0),
        },
    })
}

/// The pair-production factor G̃[(p₁+p₂)²]/[(p₁+p₂)²−μ²]² and the gap of
/// (p₁+p₂)² above the tachyon shell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSupport {
    pub factor: f64,
    /// (p₁+p₂)².
    pub s: f64,
    /// s + μ².
    pub gap: f64,
}

/// Smallest s + μ² over on-shell pairs: 4M² + μ².
pub fn support_gap_min(mass: f64, mu: f64) -> f64 {
    4.0 * mass * mass + mu * mu
}

pub fn pair_production_support(
    spectrum: &SpectralDensity,
    p1: &FourMomentum,
    p2: &FourMomentum,
    params: &ModelParams,
) -> Result<PairSupport, RelkinError> {
    spectrum
        .validate()
        .map_err(|e| RelkinError::Domain(e.to_string()))?;
    check_positive("M", params.mass)?;
    p1.check_shell(params.mass)?;
    p2.check_shell(params.mass)?;
    let k = p1.add(p2);
    let s = k.square();
    let mu = params.mu;
    let denom = (s - mu * mu).powi(2);
    let spectral = match *spectrum {
        SpectralDensity::White { strength } => strength,
        SpectralDensity::Tachyonic { mu, epsilon, .. } => {
            if (s + mu * mu).abs() < 0.5 * epsilon {
                1.0 / epsilon
            } else {
                0.0
            }
        }
        SpectralDensity::GaussianSpatial { a } => {
            (4.0 * PI * a * a).powf(1.5) * (-a * a * k.p_sq()).exp()
        }
        // Supported on |k| = μ only, a set of measure zero.
        SpectralDensity::TachyonicNonrel { .. } => 0.0,
    };
    let factor = if spectral == 0.0 { 0.0 } else { spectral / denom };
    Ok(PairSupport {
        factor,
        s,
        gap: s + mu * mu,
    })
}
