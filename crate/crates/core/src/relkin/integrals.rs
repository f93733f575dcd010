//! Kinematic integrals over the tachyon shell.
//!
//! In the rest frame of p₁ both delta functions fix |p| completely, so the
//! oracles work in a frame where p₁ = (E₁, P ẑ). With q = |p| and c the
//! cosine to ẑ, the shell condition (p − p₁)² = −μ² reads
//! E_q E₁ − qPc = A with A = M² + μ²/2, which is solved for c. What remains
//! is a radial integral over the q for which |c| ≤ 1:
//!
//! ∫d³p/(2E) δ(…) = ∫ dq π q/(2 E_q P).

use super::{check_positive, shell_root, ObservableReport, RelkinError};
use crate::quad::{gauss_legendre_on, Quad};
use std::f64::consts::PI;

pub(crate) fn f6_closed(mass: f64, mu: f64) -> f64 {
    let r = mu / mass;
    mass * 0.5 * PI * r * r * r * shell_root(mass, mu)
}

fn g5_closed(mass: f64, mu: f64) -> f64 {
    PI * mu / mass * shell_root(mass, mu)
}

fn quad() -> Quad {
    Quad::new(0.0, 1e-13)
}

/// Range of |p| on the shell in the frame where p₁ has momentum P.
fn q_range(mass: f64, mu: f64, frame_p: f64) -> (f64, f64) {
    let e1 = (mass * mass + frame_p * frame_p).sqrt();
    let gamma = e1 / mass;
    let beta = frame_p / e1;
    let e_star = (mass * mass + 0.5 * mu * mu) / mass;
    let p_star = mu * shell_root(mass, mu);
    let lo = (gamma * (beta * e_star - p_star)).abs();
    let hi = gamma * (beta * e_star + p_star);
    (lo, hi)
}

fn check(mass: f64, mu: f64, frame_p: f64) -> Result<(), RelkinError> {
    check_positive("M", mass)?;
    check_positive("mu", mu)?;
    check_positive("P", frame_p)
}

/// Scalar kinematic integral computed in the frame where p₁ has momentum
/// `frame_p`.
pub fn g5_boosted(mass: f64, mu: f64, frame_p: f64) -> Result<f64, RelkinError> {
    check(mass, mu, frame_p)?;
    let (lo, hi) = q_range(mass, mu, frame_p);
    let f = |q: f64| PI * q / (2.0 * (q * q + mass * mass).sqrt() * frame_p);
    Ok(quad().integrate(f, lo, hi)?.value)
}

/// M·C from the time component J⁰ = C E₁ of the vector kinematic integral, computed
/// in the frame where p₁ has momentum `frame_p`.
pub fn f6_boosted(mass: f64, mu: f64, frame_p: f64) -> Result<f64, RelkinError> {
    check(mass, mu, frame_p)?;
    let e1 = (mass * mass + frame_p * frame_p).sqrt();
    let (lo, hi) = q_range(mass, mu, frame_p);
    // u = q − P keeps k⁰ = u(2P + u)/(E_q + E₁) free of cancellation.
    let f = |u: f64| {
        let q = frame_p + u;
        let eq = (q * q + mass * mass).sqrt();
        let k0 = u * (2.0 * frame_p + u) / (eq + e1);
        PI * q * k0 / (2.0 * eq * frame_p)
    };
    let (a, b) = (lo - frame_p, hi - frame_p);
    // J⁰ still cancels between u < 0 and u > 0, so the tolerance is set
    // against ∫|f|.
    let (x, w) = gauss_legendre_on(64, a, b);
    let mass_abs: f64 = x.iter().zip(&w).map(|(u, w)| w * f(*u).abs()).sum();
    let j0 = Quad::new(1e-15 * mass_abs, 1e-13)
        .integrate_points(f, &[a, 0.0f64.clamp(a, b), b])?
        .value;
    Ok(mass * j0 / e1)
}

fn report(name: &str, closed: f64, oracle: f64, mass: f64, mu: f64) -> ObservableReport {
    ObservableReport::new(name, closed, format!("M={mass:e},mu={mu:e}")).with_oracle(oracle)
}

/// M·C = M(π/2)(μ/M)³√(1+(μ/2M)²), with the oracle evaluated at P = M.
pub fn kinematic_integral_f6(mass: f64, mu: f64) -> Result<ObservableReport, RelkinError> {
    let oracle = f6_boosted(mass, mu, mass)?;
    Ok(report("kinematic_integral_f6", f6_closed(mass, mu), oracle, mass, mu))
}

/// π(μ/M)√(1+(μ/2M)²), with the oracle evaluated at P = M.
pub fn kinematic_integral_g5(mass: f64, mu: f64) -> Result<ObservableReport, RelkinError> {
    let oracle = g5_boosted(mass, mu, mass)?;
    Ok(report("kinematic_integral_g5", g5_closed(mass, mu), oracle, mass, mu))
}

/// Scalar integral with the oracle evaluated at an arbitrary frame momentum.
pub fn kinematic_integral_g5_boosted(mass: f64, mu: f64, frame_p: f64) -> Result<ObservableReport, RelkinError> {
    let oracle = g5_boosted(mass, mu, frame_p)?;
    Ok(report("kinematic_integral_g5_boosted", g5_closed(mass, mu), oracle, mass, mu))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_endpoints_are_on_the_shell() {
        let (m, mu, p) = (1.0f64, 0.7, 2.3);
        let e1 = (m * m + p * p).sqrt();
        let a = m * m + 0.5 * mu * mu;
        let (lo, hi) = q_range(m, mu, p);
        for q in [lo, hi] {
            let eq = (q * q + m * m).sqrt();
            let cstar = (eq * e1 - a) / (q * p);
            assert!((cstar.abs() - 1.0).abs() < 1e-12, "{cstar}");
        }
    }

    #[test]
    fn g5_has_an_antiderivative() {
        let (m, mu, p) = (1.0f64, 0.3, 0.8);
        let (lo, hi) = q_range(m, mu, p);
        let e = |q: f64| (q * q + m * m).sqrt();
        let exact = PI / (2.0 * p) * (e(hi) - e(lo));
        assert!((g5_boosted(m, mu, p).unwrap() - exact).abs() < 1e-14);
    }
}
