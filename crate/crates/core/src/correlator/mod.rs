//! The tachyonic spacetime correlator G(x − x′): closed Bessel form, the
//! nonrelativistic limit, a UV-regulated form used as a colored noise kernel,
//! and Fourier-integral oracles.

pub mod bessel;
pub mod oracle;

use crate::exec::{map_indexed, Execution};
use crate::quad::{gauss_legendre_on, Quad, QuadError};
use std::f64::consts::PI;

pub use bessel::{bessel_k1, bessel_y1, BesselError};
pub use oracle::{
    bessel_k1_oracle, bessel_y1_oracle, g_fourier_extrapolated, g_fourier_oracle, nonrel_fourier_oracle, OracleValue,
};

/// Default null-cone guard: |dt² − dr²| below this times a² is rejected.
pub const NULL_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalClass {
    Spacelike,
    Timelike,
    Null,
}

impl IntervalClass {
    pub fn label(self) -> &'static str {
        match self {
            IntervalClass::Spacelike => "spacelike",
            IntervalClass::Timelike => "timelike",
            IntervalClass::Null => "null",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorPoint {
    pub dt: f64,
    pub dr: f64,
    pub interval_class: IntervalClass,
    /// √|dt² − dr²|.
    pub s: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorrelatorError {
    #[error("separation (dt = {dt}, dr = {dr}) is within the null guard; G is singular there")]
    NullSingular { dt: f64, dr: f64 },
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error(transparent)]
    Bessel(#[from] BesselError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Classifies a separation with metric (+,−,−,−).
pub fn classify(dt: f64, dr: f64, a: f64, guard: f64) -> (IntervalClass, f64) {
    let i2 = dt * dt - dr * dr;
    let s = i2.abs().sqrt();
    if i2.abs() < guard * a * a {
        (IntervalClass::Null, s)
    } else if i2 < 0.0 {
        (IntervalClass::Spacelike, s)
    } else {
        (IntervalClass::Timelike, s)
    }
}

fn check_mu(mu: f64) -> Result<(), CorrelatorError> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(CorrelatorError::Domain(format!("mu must be positive, got {mu}")))
    }
}

/// Closed form of G for the delta spectrum on the tachyon shell k² = −μ².
pub fn g_tachyon(dt: f64, dr: f64, mu: f64) -> Result<CorrelatorPoint, CorrelatorError> {
    g_tachyon_guarded(dt, dr, mu, NULL_GUARD)
}

pub fn g_tachyon_guarded(
    dt: f64,
    dr: f64,
    mu: f64,
    guard: f64,
) -> Result<CorrelatorPoint, CorrelatorError> {
    check_mu(mu)?;
    if !(dr >= 0.0) || !dt.is_finite() || !dr.is_finite() {
        return Err(CorrelatorError::Domain(format!("bad separation ({dt}, {dr})")));
    }
    let a = 1.0 / mu;
    let (class, s) = classify(dt, dr, a, guard);
    let value = match class {
        IntervalClass::Null => return Err(CorrelatorError::NullSingular { dt, dr }),
        IntervalClass::Spacelike => -bessel_y1(s / a)? / (8.0 * PI * PI * a * s),
        IntervalClass::Timelike => -bessel_k1(s / a)? / (4.0 * PI * PI * PI * a * s),
    };
    Ok(CorrelatorPoint {
        dt,
        dr,
        interval_class: class,
        s,
        value,
    })
}

/// Spatial factor of the nonrelativistic limit, sin(dr/a)/((2π)² dr).
pub fn g_nonrel_limit(dr: f64, mu: f64) -> f64 {
    let x = dr * mu;
    let sinc = if x.abs() < 1e-4 {
        1.0 - x * x / 6.0 + x.powi(4) / 120.0
    } else {
        x.sin() / x
    };
    mu * sinc / (4.0 * PI * PI)
}

/// UV-regulated correlator of the ε-thickened shell, used as a colored noise
/// kernel on lattices.
///
/// The spectrum is a top-hat of width ε in k² around −μ², multiplied by
/// exp(−(k₀² + |k|²)/Λ²). Everything reduces to one k₀ integral per shell
/// mass, averaged over the shell with Gauss–Legendre nodes in m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegulatedKernel {
    pub mu: f64,
    pub epsilon: f64,
    pub cutoff: f64,
}

const SHELL_NODES: usize = 6;

impl RegulatedKernel {
    pub fn new(mu: f64, epsilon: f64, cutoff: f64) -> Result<Self, CorrelatorError> {
        check_mu(mu)?;
        if !(epsilon > 0.0 && epsilon < mu * mu) {
            return Err(CorrelatorError::Domain(format!("epsilon must lie in (0, mu^2), got {epsilon}")));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(CorrelatorError::Domain(format!("cutoff must be positive, got {cutoff}")));
        }
        Ok(RegulatedKernel { mu, epsilon, cutoff })
    }

    /// Shell masses m and averaging weights (summing to 1).
    pub fn shell(&self) -> Vec<(f64, f64)> {
        let m2 = self.mu * self.mu;
        let (x, w) = gauss_legendre_on(SHELL_NODES, m2 - 0.5 * self.epsilon, m2 + 0.5 * self.epsilon);
        x.iter()
            .zip(&w)
            .map(|(m2, w)| (m2.sqrt(), w / self.epsilon))
            .collect()
    }

    fn spatial(k: f64, r: f64) -> f64 {
        let x = k * r;
        if x.abs() < 1e-4 {
            k * (1.0 - x * x / 6.0)
        } else {
            x.sin() / r
        }
    }

    fn k0_max(&self) -> f64 {
        6.5 * self.cutoff
    }

    /// (2π)⁻³·2·⟨∫₀^∞ dk₀ window(k₀) sin(Kr)/r e^{−(2k₀²+m²)/Λ²}⟩ with
    /// K = √(k₀²+m²).
    fn k0_integral<F: Fn(f64) -> f64>(
        &self,
        dr: f64,
        window: F,
        oscillation: f64,
    ) -> Result<f64, CorrelatorError> {
        let kmax = self.k0_max();
        let period = if oscillation > 0.0 { PI / oscillation } else { kmax };
        let n = ((kmax / period).ceil() as usize).clamp(1, 20_000);
        let pts: Vec<f64> = (0..=n).map(|i| kmax * i as f64 / n as f64).collect();
        let l2 = self.cutoff * self.cutoff;
        let q = Quad::new(1e-16, 1e-11).with_max_intervals(200_000);
        let mut total = 0.0;
        for (m, w) in self.shell() {
            let f = |k0: f64| {
                let k = (k0 * k0 + m * m).sqrt();
                window(k0) * Self::spatial(k, dr) * (-(2.0 * k0 * k0 + m * m) / l2).exp()
            };
            total += w * q.integrate_points(f, &pts)?.value;
        }
        Ok(2.0 * total / (8.0 * PI * PI * PI))
    }

    /// G_reg at time lag `dt` and distance `dr`.
    pub fn value(&self, dt: f64, dr: f64) -> Result<f64, CorrelatorError> {
        let tau = dt.abs();
        self.k0_integral(dr, |k0| (k0 * tau).cos(), tau + dr)
    }

    /// ∫ G_reg(dr, τ) dτ over |τ| ≤ `tau_max`.
    pub fn lag_integral(&self, dr: f64, tau_max: f64) -> Result<f64, CorrelatorError> {
        let t = tau_max.abs();
        let window = move |k0: f64| {
            let x = k0 * t;
            if x.abs() < 1e-6 {
                2.0 * t * (1.0 - x * x / 6.0)
            } else {
                2.0 * x.sin() / k0
            }
        };
        self.k0_integral(dr, window, t + dr)
    }

    /// ∫∫ G_reg(dr, t − t′) over t ∈ [0, w], t′ ∈ [lag, lag + w]: the kernel
    /// between two time cells of width `w` whose starts differ by `lag`.
    pub fn cell_pair(&self, dr: f64, lag: f64, width: f64) -> Result<f64, CorrelatorError> {
        let lag = lag.abs();
        let fejer = move |k0: f64| {
            let h = 0.5 * k0 * width;
            let s = if h.abs() < 1e-6 { width * (1.0 - h * h / 6.0) } else { 2.0 * h.sin() / k0 };
            s * s * (k0 * lag).cos()
        };
        self.k0_integral(dr, fejer, lag + width + dr)
    }

    /// ∫₀^T∫₀^T G_reg(dr, t − t′) dt dt′.
    pub fn time_factor(&self, dr: f64, duration: f64) -> Result<f64, CorrelatorError> {
        self.cell_pair(dr, 0.0, duration)
    }

    /// ∫ G_reg(dr, τ) dτ over the whole line: the coefficient of T in
    /// `time_factor` as T → ∞.
    pub fn time_integral(&self, dr: f64) -> f64 {
        let l2 = self.cutoff * self.cutoff;
        let s: f64 = self
            .shell()
            .iter()
            .map(|(m, w)| w * Self::spatial(*m, dr) * (-(m * m) / l2).exp())
            .sum();
        s / (4.0 * PI * PI)
    }
}

/// ε used for the Fourier oracle before extrapolation.
pub const SWEEP_EPSILON: f64 = 1e-2;

/// Closed form and ε-extrapolated oracle at one invariant separation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorRow {
    pub s_over_a: f64,
    pub interval_class: IntervalClass,
    pub closed_form: f64,
    pub oracle: f64,
    pub rel_err: f64,
}

/// Evaluates both branches at each s/a, spacelike first: the spacelike point
/// is (0, s) and the timelike one (s, 0).
pub fn correlator_sweep(
    mu: f64,
    s_over_a: &[f64],
    epsilon: f64,
    exec: Execution,
) -> Result<Vec<CorrelatorRow>, CorrelatorError> {
    check_mu(mu)?;
    let a = 1.0 / mu;
    let jobs: Vec<(f64, bool)> = s_over_a.iter().flat_map(|&x| [(x, false), (x, true)]).collect();
    map_indexed(exec, jobs.len(), |i| {
        let (x, timelike) = jobs[i];
        let s = x * a;
        let (dt, dr) = if timelike { (s, 0.0) } else { (0.0, s) };
        let closed = g_tachyon(dt, dr, mu)?;
        let oracle = g_fourier_extrapolated(dt, dr, mu, epsilon)?.value;
        Ok(CorrelatorRow {
            s_over_a: x,
            interval_class: closed.interval_class,
            closed_form: closed.value,
            oracle,
            rel_err: (closed.value - oracle).abs() / closed.value.abs().max(f64::MIN_POSITIVE),
        })
    })
    .into_iter()
    .collect()
}

pub fn correlator_csv(rows: &[CorrelatorRow]) -> String {
    let mut out = String::from("s_over_a,interval_class,closed_form,oracle,rel_err\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.12e},{:.12e},{:.3e}\n",
            r.s_over_a,
            r.interval_class.label(),
            r.closed_form,
            r.oracle,
            r.rel_err
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert_eq!(classify(0.0, 1.0, 1.0, NULL_GUARD).0, IntervalClass::Spacelike);
        assert_eq!(classify(2.0, 1.0, 1.0, NULL_GUARD).0, IntervalClass::Timelike);
        assert_eq!(classify(1.0, 1.0, 1.0, NULL_GUARD).0, IntervalClass::Null);
        assert!(matches!(g_tachyon(1.0, 1.0, 1.0), Err(CorrelatorError::NullSingular { .. })));
    }

    #[test]
    fn nonrel_values() {
        assert!((g_nonrel_limit(0.0, 1.0) - 0.025_330_295_910_584).abs() < 1e-12);
        assert!(g_nonrel_limit(PI, 1.0).abs() < 1e-17);
        assert!((g_nonrel_limit(0.5, 1.0) - 0.024_287_981_519_871_576).abs() < 1e-15);
    }

    #[test]
    fn shell_weights_sum_to_one() {
        let k = RegulatedKernel::new(1.0, 1e-3, 5.0).unwrap();
        let s: f64 = k.shell().iter().map(|(_, w)| w).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}
