//! Momentum-space wave packets and the first-order collapse rate.

use super::{check_positive, shell_root, ObservableReport, RelkinError};
use crate::params::ModelParams;
use crate::quad::Quad;
use std::f64::consts::PI;

/// Allowed deviation of ∫d³p|Ψ|² from 1.
pub const NORM_TOLERANCE: f64 = 1e-8;

/// |Ψ(p)|² of a single particle.
#[derive(Debug, Clone, PartialEq)]
pub enum WavePacket {
    /// Isotropic Gaussian of width σ centred on p₀ ẑ.
    Gaussian { p0: f64, sigma: f64 },
    /// Tabulated radial density ρ(p) = 4πp²|Ψ|² on increasing nodes,
    /// integrated with the trapezoid rule.
    Radial { p: Vec<f64>, density: Vec<f64> },
}

fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

fn trapezoid(x: &[f64], y: impl Fn(usize) -> f64) -> f64 {
    x.windows(2)
        .enumerate()
        .map(|(i, w)| 0.5 * (w[1] - w[0]) * (y(i) + y(i + 1)))
        .sum()
}

impl WavePacket {
    pub fn gaussian(p0: f64, sigma: f64) -> Result<Self, RelkinError> {
        check_positive("sigma", sigma)?;
        if !(p0 >= 0.0 && p0.is_finite()) {
            return Err(RelkinError::Domain(format!("p0 must be non-negative, got {p0}")));
        }
        Ok(WavePacket::Gaussian { p0, sigma })
    }

    /// Gaussian packet moving with velocity v along ẑ.
    pub fn gaussian_with_velocity(mass: f64, v: f64, sigma: f64) -> Result<Self, RelkinError> {
        check_positive("M", mass)?;
        if !(0.0..1.0).contains(&v) {
            return Err(RelkinError::Domain(format!("velocity must lie in [0, 1), got {v}")));
        }
        Self::gaussian(mass * v / (1.0 - v * v).sqrt(), sigma)
    }

    pub fn radial(p: Vec<f64>, density: Vec<f64>) -> Result<Self, RelkinError> {
        if p.len() < 2 || p.len() != density.len() {
            return Err(RelkinError::Domain("radial table needs matching nodes and values, at least two".into()));
        }
        if p[0] < 0.0 || p.windows(2).any(|w| w[1] <= w[0]) {
            return Err(RelkinError::Domain("radial nodes must be non-negative and increasing".into()));
        }
        if density.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return Err(RelkinError::Domain("radial density must be finite and non-negative".into()));
        }
        let packet = WavePacket::Radial { p, density };
        packet.check_normalized()?;
        Ok(packet)
    }

    /// Radial density ρ(p), so that ∫₀^∞ρ dp = 1.
    pub fn radial_density(&self, p: f64) -> f64 {
        match self {
            WavePacket::Gaussian { p0, sigma } => {
                let s2 = sigma * sigma;
                let norm = 1.0 / (2.0 * PI * s2).sqrt();
                let x = p * p0 / s2;
                if x < 1.0 {
                    norm * 2.0 * p * p / s2 * (-(p * p + p0 * p0) / (2.0 * s2)).exp() * sinhc(x)
                } else {
                    let d = p - p0;
                    norm * (p / p0) * (-d * d / (2.0 * s2)).exp() * -(-2.0 * x).exp_m1()
                }
            }
            WavePacket::Radial { p: nodes, density } => {
                if p < nodes[0] || p > nodes[nodes.len() - 1] {
                    return 0.0;
                }
                let i = nodes.partition_point(|&x| x <= p).clamp(1, nodes.len() - 1);
                let t = (p - nodes[i - 1]) / (nodes[i] - nodes[i - 1]);
                density[i - 1] + t * (density[i] - density[i - 1])
            }
        }
    }

    /// |Ψ(p)|² at a 3-momentum. Only defined for the Gaussian form.
    pub fn density3(&self, p: [f64; 3]) -> Option<f64> {
        match self {
            WavePacket::Gaussian { p0, sigma } => {
                let s2 = sigma * sigma;
                let d2 = p[0] * p[0] + p[1] * p[1] + (p[2] - p0) * (p[2] - p0);
                Some((2.0 * PI * s2).powf(-1.5) * (-d2 / (2.0 * s2)).exp())
            }
            WavePacket::Radial { .. } => None,
        }
    }

    /// Central momentum magnitude: p₀, or the mean of |p| for tables.
    pub fn central_momentum(&self) -> f64 {
        match self {
            WavePacket::Gaussian { p0, .. } => *p0,
            WavePacket::Radial { p, density } => trapezoid(p, |i| p[i] * density[i]),
        }
    }

    fn gaussian_window(p0: f64, sigma: f64) -> [f64; 3] {
        let lo = (p0 - 12.0 * sigma).max(0.0);
        [lo, p0.max(lo), p0 + 12.0 * sigma]
    }

    fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> Result<f64, RelkinError> {
        match self {
            WavePacket::Gaussian { p0, sigma } => {
                let pts = Self::gaussian_window(*p0, *sigma);
                let f = |p: f64| self.radial_density(p) * g(p);
                Ok(Quad::new(0.0, 1e-13).integrate_points(f, &pts)?.value)
            }
            WavePacket::Radial { p, density } => Ok(trapezoid(p, |i| density[i] * g(p[i]))),
        }
    }

    /// ∫d³p |Ψ(p)|².
    pub fn norm(&self) -> Result<f64, RelkinError> {
        self.integrate(|_| 1.0)
    }

    pub fn check_normalized(&self) -> Result<(), RelkinError> {
        let n = self.norm()?;
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(RelkinError::NotNormalized(n));
        }
        Ok(())
    }

    /// ∫d³p |Ψ(p)|²/(2E).
    pub fn packet_integral(&self, mass: f64) -> Result<f64, RelkinError> {
        check_positive("M", mass)?;
        self.integrate(|p| 0.5 / (p * p + mass * mass).sqrt())
    }
}

/// Brute-force ∫d³p |Ψ|²/(2E) as a midpoint sum over an n³ cube of half
/// width 8σ around the packet centre.
pub fn packet_integral_lattice(packet: &WavePacket, mass: f64, n: usize) -> Result<f64, RelkinError> {
    let WavePacket::Gaussian { p0, sigma } = *packet else {
        return Err(RelkinError::Domain("lattice sum needs a Gaussian packet".into()));
    };
    check_positive("M", mass)?;
    let half = 8.0 * sigma;
    let h = 2.0 * half / n as f64;
    let node = |i: usize| -half + (i as f64 + 0.5) * h;
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let p = [node(i), node(j), p0 + node(k)];
                let e = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + mass * mass).sqrt();
                sum += packet.density3(p).unwrap_or(0.0) / (2.0 * e);
            }
        }
    }
    Ok(sum * h * h * h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseRate {
    /// Decay term; closed form uses 1/(2E₀) for the packet integral, the
    /// oracle the quadrature value.
    pub report: ObservableReport,
    pub packet_integral: f64,
    /// First-order survival factor 1 − decay.
    pub survival: f64,
    pub first_order_valid: bool,
    /// M/E₀ for a Gaussian packet.
    pub dilation_ratio: Option<f64>,
    /// Size (σ/M)² of the neglected narrow-packet terms.
    pub narrow_order: Option<f64>,
}

/// First-order decay of an off-diagonal element for a particle in `packet`:
/// (2/π²)γTμ Mᵢ³/M_N² √(1+(μ/2Mᵢ)²) ∫d³p|Ψ|²/(2E), with Mᵢ = M and
/// Mᵢ/M_N = `mass_ratio`.
pub fn collapse_rate_rel(packet: &WavePacket, params: &ModelParams, duration: f64) -> Result<CollapseRate, RelkinError> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(RelkinError::Domain(format!("T must be non-negative, got {duration}")));
    }
    packet.check_normalized()?;
    let (mu, m) = (params.mu, params.mass);
    let pre = 2.0 / (PI * PI)
        * params.gamma
        * duration
        * mu
        * m
        * params.mass_ratio
        * params.mass_ratio
        * shell_root(m, mu);
    let integral = packet.packet_integral(m)?;
    let oracle = pre * integral;
    let name = "collapse_decay";
    let snapshot = format!(
        "gamma={:e},T={duration:e},mu={mu:e},M={m:e},mass_ratio={:e},packet={packet:?}",
        params.gamma, params.mass_ratio
    );
    let (report, dilation, narrow) = match packet {
        WavePacket::Gaussian { p0, sigma } => {
            let e0 = (p0 * p0 + m * m).sqrt();
            let closed = pre / (2.0 * e0);
            (
                ObservableReport::new(name, closed, snapshot).with_oracle(oracle),
                Some(m / e0),
                Some((sigma / m).powi(2)),
            )
        }
        WavePacket::Radial { .. } => (ObservableReport::new(name, oracle, snapshot), None, None),
    };
    Ok(CollapseRate {
        report,
        packet_integral: integral,
        survival: 1.0 - oracle,
        first_order_valid: oracle < 1.0,
        dilation_ratio: dilation,
        narrow_order: narrow,
    })
}
