//! Fourier-integral oracles for the correlator.
//!
//! The top-hat spectrum of width ε in k² is an average over shell masses m,
//! so G_ε = ⟨G_m⟩. For each m the 4-D Fourier integral reduces to one
//! contour integral:
//!
//! * spacelike: G_m = (4π³r)⁻¹ ∫₀^∞ dκ sin(r√(κ²+m²)) cos(tκ), evaluated on
//!   the ray κ = ρ e^{iπ/4} where the integrand decays exponentially;
//! * timelike: closing the k₀ contour around the cut at k₀ = i[m, ∞) gives
//!   G_m = −(2/(2π)³) ∫_m^∞ dy e^{−yt} sinh(r√(y²−m²))/r.
//!
//! The ε → 0 limit is taken by Richardson extrapolation in ε².

use super::{check_mu, classify, CorrelatorError, IntervalClass, NULL_GUARD};
use crate::quad::{gauss_legendre_on, Quad};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_4, PI};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    /// Quadrature error estimate (plus extrapolation error when extrapolated).
    pub error: f64,
}

const SHELL_NODES: usize = 8;

fn quad() -> Quad {
    Quad::new(1e-17, 1e-12).with_max_intervals(20_000)
}

fn spacelike_mass(t: f64, r: f64, m: f64) -> Result<OracleValue, CorrelatorError> {
    let dir = Complex64::from_polar(1.0, FRAC_PI_4);
    let decay = (r - t.abs()) * FRAC_PI_4.sin();
    let scale = 1.0 / decay.max(1e-3);
    let f = |rho: f64| {
        let kappa = dir * rho;
        let k = (kappa * kappa + m * m).sqrt();
        let plus = (Complex64::i() * (k * r + kappa * t)).exp();
        let minus = (Complex64::i() * (k * r - kappa * t)).exp();
        (plus + minus) * dir * 0.5
    };
    let est = quad().integrate_to_inf(f, 0.0, scale)?;
    let norm = 1.0 / (4.0 * PI * PI * PI * r);
    Ok(OracleValue {
        value: est.value.im * norm,
        error: est.error * norm,
    })
}

fn timelike_mass(t: f64, r: f64, m: f64) -> Result<OracleValue, CorrelatorError> {
    // y = m cosh u, √(y² − m²) = m sinh u
    let f = |u: f64| {
        if u > 700.0 {
            return 0.0;
        }
        let q = m * u.sinh();
        let y = m * u.cosh();
        let qr = q * r;
        let spatial = if qr < 1e-6 {
            q * (1.0 + qr * qr / 6.0) * (-y * t).exp()
        } else {
            ((qr - y * t).exp() - (-qr - y * t).exp()) / (2.0 * r)
        };
        spatial * q
    };
    let scale = 1.0 / (m * (t - r)).max(0.05);
    let est = quad().integrate_to_inf(f, 0.0, scale.min(1.0))?;
    let norm = -2.0 / (8.0 * PI * PI * PI);
    Ok(OracleValue {
        value: est.value * norm,
        error: est.error * norm.abs(),
    })
}

/// Oracle for G_ε at fixed ε: the shell-mass average of the single-mass
/// Fourier integrals.
pub fn g_fourier_oracle(dt: f64, dr: f64, mu: f64, epsilon: f64) -> Result<OracleValue, CorrelatorError> {
    check_mu(mu)?;
    if !(epsilon > 0.0 && epsilon < mu * mu) {
        return Err(CorrelatorError::Domain(format!("epsilon must lie in (0, mu^2), got {epsilon}")));
    }
    let t = dt.abs();
    let (class, _) = classify(t, dr, 1.0 / mu, NULL_GUARD);
    let m2 = mu * mu;
    let (nodes, weights) = gauss_legendre_on(SHELL_NODES, m2 - 0.5 * epsilon, m2 + 0.5 * epsilon);
    let mut value = 0.0;
    let mut error = 0.0;
    for (m2, w) in nodes.iter().zip(&weights) {
        let m = m2.sqrt();
        let v = match class {
            IntervalClass::Null => return Err(CorrelatorError::NullSingular { dt, dr }),
            IntervalClass::Spacelike => spacelike_mass(t, dr, m)?,
            IntervalClass::Timelike => timelike_mass(t, dr, m)?,
        };
        value += w / epsilon * v.value;
        error += w / epsilon * v.error;
    }
    Ok(OracleValue { value, error })
}

/// ε → 0 limit of [`g_fourier_oracle`] by Richardson extrapolation from ε
/// and ε/2 (the top-hat error is even in ε).
pub fn g_fourier_extrapolated(dt: f64, dr: f64, mu: f64, epsilon: f64) -> Result<OracleValue, CorrelatorError> {
    let coarse = g_fourier_oracle(dt, dr, mu, epsilon)?;
    let fine = g_fourier_oracle(dt, dr, mu, 0.5 * epsilon)?;
    let value = (4.0 * fine.value - coarse.value) / 3.0;
    Ok(OracleValue {
        value,
        error: (4.0 * fine.error + coarse.error) / 3.0 + (value - fine.value).abs(),
    })
}

/// Spatial Fourier transform of the shell spectrum at k₀ = 0, i.e. the
/// nonrelativistic kernel, computed from the ε-thickened shell
/// (2π)⁻³ ∫ d³k e^{ik·x} ε⁻¹ 1[| |k|² − μ² | < ε/2] and extrapolated in ε.
pub fn nonrel_fourier_oracle(dr: f64, mu: f64, epsilon: f64) -> Result<OracleValue, CorrelatorError> {
    check_mu(mu)?;
    let shell = |eps: f64| -> Result<f64, CorrelatorError> {
        let lo = (mu * mu - 0.5 * eps).sqrt();
        let hi = (mu * mu + 0.5 * eps).sqrt();
        let f = |k: f64| {
            let x = k * dr;
            let sinc = if x.abs() < 1e-6 { 1.0 - x * x / 6.0 } else { x.sin() / x };
            k * k * sinc
        };
        let v = Quad::new(1e-18, 1e-13).integrate(f, lo, hi)?.value;
        Ok(4.0 * PI * v / (eps * 8.0 * PI * PI * PI))
    };
    let coarse = shell(epsilon)?;
    let fine = shell(0.5 * epsilon)?;
    let value = (4.0 * fine - coarse) / 3.0;
    Ok(OracleValue {
        value,
        error: (value - fine).abs(),
    })
}

/// Y1(x) = (1/π)∫₀^π sin(x sinθ − θ)dθ − (2/π)∫₀^∞ sinh t e^{−x sinh t} dt.
pub fn bessel_y1_oracle(x: f64) -> Result<f64, CorrelatorError> {
    check_arg(x)?;
    let q = Quad::new(1e-13, 1e-12).with_max_intervals(100_000);
    let a = q.integrate(|th: f64| (x * th.sin() - th).sin(), 0.0, PI)?.value;
    let b = q
        .integrate_to_inf(|t: f64| if t > 700.0 { 0.0 } else { t.sinh() * (-x * t.sinh()).exp() }, 0.0, 1.0)?
        .value;
    Ok(a / PI - 2.0 * b / PI)
}

/// K1(x) = e^{−x}∫₀^∞ e^{−x(cosh t − 1)} cosh t dt.
pub fn bessel_k1_oracle(x: f64) -> Result<f64, CorrelatorError> {
    check_arg(x)?;
    let q = Quad::new(1e-16, 1e-13).with_max_intervals(100_000);
    let scale = (1.0 / x).clamp(0.05, 1.0);
    let v = q
        .integrate_to_inf(|t: f64| if t > 700.0 { 0.0 } else { (-x * (t.cosh() - 1.0)).exp() * t.cosh() }, 0.0, scale)?
        .value;
    Ok(v * (-x).exp())
}

fn check_arg(x: f64) -> Result<(), CorrelatorError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CorrelatorError::Domain(format!("argument must be positive, got {x}")))
    }
}
