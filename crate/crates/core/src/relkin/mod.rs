//! Relativistic kinematics and first-order observables: tachyon emission,
//! energy-production and collapse rates with quadrature oracles, vacuum
//! excitation and the lightcone bound.

mod integrals;
mod packet;
mod vacuum;

pub use integrals::{
    f6_boosted, g5_boosted, kinematic_integral_f6, kinematic_integral_g5, kinematic_integral_g5_boosted,
};
pub use packet::{collapse_rate_rel, packet_integral_lattice, CollapseRate, WavePacket};
pub use vacuum::{
    pair_production_support, support_gap_min, vacuum_rate_density, FourMomentum, PairSupport, VacuumRate,
};

use crate::params::ModelParams;
use crate::quad::{Quad, QuadError};
use std::f64::consts::PI;

/// μ/M values used by the closed-form/oracle sweep.
pub const SWEEP_MU_OVER_M: [f64; 5] = [0.01, 0.1, 0.5, 1.0, 2.0];

/// Lower bound on the denominator of a relative error.
pub const REL_ERR_FLOOR: f64 = 1e-300;

#[derive(Debug, thiserror::Error)]
pub enum RelkinError {
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("direction is not a unit vector: |p_hat| = {0}")]
    NotUnit(f64),
    #[error("packet is not normalized: integral = {0}")]
    NotNormalized(f64),
    #[error("momentum is off the mass shell: p^2 = {square}, M^2 = {mass_sq}")]
    OffShell { square: f64, mass_sq: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<(), RelkinError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(RelkinError::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// A computed quantity with its closed form and, when available, an
/// independent oracle value.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableReport {
    pub name: String,
    pub closed_form: f64,
    pub oracle: Option<f64>,
    pub rel_err: Option<f64>,
    /// Flat `key=value` rendering of the inputs.
    pub params: String,
}

impl ObservableReport {
    pub fn new(name: impl Into<String>, closed_form: f64, params: impl Into<String>) -> Self {
        ObservableReport {
            name: name.into(),
            closed_form,
            oracle: None,
            rel_err: None,
            params: params.into(),
        }
    }

    pub fn with_oracle(mut self, oracle: f64) -> Self {
        self.oracle = Some(oracle);
        self.rel_err = Some((self.closed_form - oracle).abs() / self.closed_form.abs().max(REL_ERR_FLOOR));
        self
    }

    /// True when an oracle is present and agrees within `tol`.
    pub fn agrees(&self, tol: f64) -> bool {
        self.rel_err.is_some_and(|e| e < tol)
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Magnitude of the tachyon momentum emitted along `p_hat` by a particle of
/// momentum `k`: E_k μ/√((k×p̂)² + M²).
pub fn tachyon_momentum(k: [f64; 3], p_hat: [f64; 3], mass: f64, mu: f64) -> Result<f64, RelkinError> {
    check_positive("M", mass)?;
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(RelkinError::Domain(format!("mu must be non-negative, got {mu}")));
    }
    let n = norm3(p_hat);
    if !((n - 1.0).abs() <= 1e-12) {
        return Err(RelkinError::NotUnit(n));
    }
    let e = (norm3(k).powi(2) + mass * mass).sqrt();
    let c = norm3(cross(k, p_hat));
    Ok(e * mu / (c * c + mass * mass).sqrt())
}

/// Energies after emission from a particle at rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recoil {
    /// Kinetic energy μ²/2M carried off by the particle.
    pub particle: f64,
    /// Energy −μ²/2M of the emitted tachyon.
    pub tachyon: f64,
}

impl Recoil {
    pub fn total(&self) -> f64 {
        self.particle + self.tachyon
    }
}

pub fn recoil_energy(mass: f64, mu: f64) -> Result<Recoil, RelkinError> {
    check_positive("M", mass)?;
    let k = mu * mu / (2.0 * mass);
    Ok(Recoil {
        particle: k,
        tachyon: -k,
    })
}

/// How the noise couples to a particle of mass Mᵢ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    /// Same coupling for every particle.
    #[default]
    Universal,
    /// Coupling ∝ Mᵢ/M_N with Mᵢ/M_N = `mass_ratio`.
    MassProportional,
}

impl Coupling {
    fn factor(self, params: &ModelParams) -> f64 {
        match self {
            Coupling::Universal => 1.0,
            Coupling::MassProportional => params.mass_ratio * params.mass_ratio,
        }
    }
}

fn shell_root(mass: f64, mu: f64) -> f64 {
    let x = mu / (2.0 * mass);
    (1.0 + x * x).sqrt()
}

fn rate_params(params: &ModelParams, n: u64, duration: f64) -> String {
    format!(
        "n={n},gamma={:e},T={duration:e},mu={:e},M={:e},mass_ratio={:e}",
        params.gamma, params.mu, params.mass, params.mass_ratio
    )
}

/// Mean energy produced in n free particles over T, universal coupling.
pub fn energy_rate_rel(n: u64, params: &ModelParams, duration: f64) -> Result<ObservableReport, RelkinError> {
    energy_rate_rel_with(n, params, duration, Coupling::Universal)
}

/// Mean energy produced in n free particles over T:
/// (1/2π²)nγTμ³/M·√(1+(μ/2M)²), times (Mᵢ/M_N)² under mass-proportional
/// coupling. The oracle assembles the same quantity from the quadrature
/// value of the vector kinematic integral.
pub fn energy_rate_rel_with(
    n: u64,
    params: &ModelParams,
    duration: f64,
    coupling: Coupling,
) -> Result<ObservableReport, RelkinError> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(RelkinError::Domain(format!("T must be non-negative, got {duration}")));
    }
    let (mu, m) = (params.mu, params.mass);
    let pre = n as f64 * params.gamma * duration * coupling.factor(params);
    let closed = pre * mu.powi(3) / (2.0 * PI * PI * m) * shell_root(m, mu);
    let f6 = kinematic_integral_f6(m, mu)?;
    let oracle = pre * m * m * (f6.oracle.unwrap_or(f6.closed_form) / m) / PI.powi(3);
    Ok(ObservableReport::new("energy_rate", closed, rate_params(params, n, duration)).with_oracle(oracle))
}

/// The energy rate assembled from the prefactor (1/π³)nγT M² and the
/// closed form of the vector kinematic integral divided by M.
pub fn energy_rate_assembled(n: u64, params: &ModelParams, duration: f64, coupling: Coupling) -> f64 {
    let (mu, m) = (params.mu, params.mass);
    let c = integrals::f6_closed(m, mu) / m;
    n as f64 * params.gamma * duration * coupling.factor(params) * m * m * c / PI.powi(3)
}

/// ∫₀^∞ dk M²/E³, which equals 1 for every M.
pub fn lightcone_bound_integral(mass: f64) -> Result<f64, RelkinError> {
    check_positive("M", mass)?;
    let split = 20.0 * mass;
    let head = lightcone_partial(mass, split)?;
    let tail = 1.0 - split / (split * split + mass * mass).sqrt();
    Ok(head + tail)
}

/// ∫₀^K dk M²/E³ by adaptive quadrature.
pub fn lightcone_partial(mass: f64, k_max: f64) -> Result<f64, RelkinError> {
    check_positive("M", mass)?;
    if !(k_max >= 0.0) {
        return Err(RelkinError::Domain(format!("k_max must be non-negative, got {k_max}")));
    }
    let f = |k: f64| {
        let e2 = k * k + mass * mass;
        mass * mass / (e2 * e2.sqrt())
    };
    let points = [0.0, mass.min(k_max), k_max];
    Ok(Quad::new(0.0, 1e-14).integrate_points(f, &points)?.value)
}

/// One row of the μ/M sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub mu_over_m: f64,
    pub report: ObservableReport,
}

/// Energy rate and both kinematic integrals with their oracles at each μ/M. The mass is varied
/// at fixed μ.
pub fn rates_sweep(params: &ModelParams, duration: f64, ratios: &[f64]) -> Result<Vec<SweepRow>, RelkinError> {
    let mut rows = Vec::with_capacity(3 * ratios.len());
    for &r in ratios {
        check_positive("mu/M", r)?;
        let p = params
            .with_mass(params.mu / r)
            .map_err(|e| RelkinError::Domain(e.to_string()))?;
        for report in [
            energy_rate_rel_with(1, &p, duration, Coupling::Universal)?,
            kinematic_integral_f6(p.mass, p.mu)?,
            kinematic_integral_g5(p.mass, p.mu)?,
        ] {
            rows.push(SweepRow { mu_over_m: r, report });
        }
    }
    Ok(rows)
}

/// CSV with header `mu_over_M,quantity,closed_form,oracle,rel_err`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("mu_over_M,quantity,closed_form,oracle,rel_err\n");
    for row in rows {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{:.12e},{},{}\n",
            row.mu_over_m,
            row.report.name,
            row.report.closed_form,
            opt(row.report.oracle),
            opt(row.report.rel_err)
        ));
    }
    out
}
