//! Wavepacket spread under spontaneous tachyon emission, in the classical
//! picture: each particle receives one impulse at a uniformly random time in
//! [0, T] and drifts with its new velocity.

use crate::exec::{map_blocks, Execution};
use crate::params::ModelParams;
use crate::relkin::{tachyon_momentum, RelkinError};
use crate::seed::{child_seed, rng_from_seed};
use crate::stats::{ks_test, wilson_interval, KsResult, Moments};
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Modelling assumption attached to every spread report.
pub const REGIME: &str = "classical impulse picture; intrinsic packet spreading neglected (sigma > a)";

const BLOCK: usize = 4096;
const CDF_NODES: usize = 4000;

#[derive(Debug, thiserror::Error)]
pub enum SpreadError {
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("scenario {scenario} needs {requirement}, got n_orders = {n_orders}")]
    OrderMismatch {
        scenario: &'static str,
        requirement: &'static str,
        n_orders: usize,
    },
    #[error(transparent)]
    Kinematics(#[from] RelkinError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Rest,
    Parallel,
    Perpendicular,
}

/// Support radius of the one-impulse spread: (μ/M)T at rest, (μM/E²)T along
/// the motion and (μ/E)T across it.
pub fn spread_radius(params: &ModelParams, k: f64, geometry: Geometry, duration: f64) -> f64 {
    let (mu, m) = (params.mu, params.mass);
    let e = (k * k + m * m).sqrt();
    match geometry {
        Geometry::Rest => mu / m * duration,
        Geometry::Parallel => mu * m / (e * e) * duration,
        Geometry::Perpendicular => mu / e * duration,
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn velocity(k: [f64; 3], mass: f64) -> [f64; 3] {
    scale(k, 1.0 / (dot(k, k) + mass * mass).sqrt())
}

/// Velocity gain w = p/E − (p·k)k/E³ from emitting along `p_hat`.
fn velocity_gain(k: [f64; 3], p_hat: [f64; 3], mass: f64, mu: f64) -> Result<[f64; 3], RelkinError> {
    let p = scale(p_hat, tachyon_momentum(k, p_hat, mass, mu)?);
    let e = (dot(k, k) + mass * mass).sqrt();
    Ok(sub(scale(p, 1.0 / e), scale(k, dot(p, k) / (e * e * e))))
}

fn unit(rng: &mut impl Rng) -> [f64; 3] {
    UnitSphere.sample(rng)
}

/// Radial histogram of |z − v₀T| with its analytic envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
    /// Theoretical probability density of r averaged over each bin.
    pub theory_density: Vec<f64>,
    /// Support radius at rest, (μ/M)T.
    pub radius_rest: f64,
    /// Support semi-axes along and across v₀.
    pub radius_parallel: f64,
    pub radius_perpendicular: f64,
    /// Power of the 3-D density inside the support, |z − vT|^power.
    pub power_law: f64,
    /// Largest displacement component along and across v₀.
    pub max_parallel: f64,
    pub max_perpendicular: f64,
    pub max_radius: f64,
    /// Samples outside the support ellipsoid (relative slack 1e-12).
    pub violations: u64,
    pub ks: KsResult,
    pub chi_square: ChiSquare,
    pub regime: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl SpreadHistogram {
    /// CSV with header `r,count,theory_density`; r is the bin centre.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,count,theory_density\n");
        for (i, c) in self.counts.iter().enumerate() {
            let r = 0.5 * (self.edges[i] + self.edges[i + 1]);
            out.push_str(&format!("{r:.9e},{c},{:.9e}\n", self.theory_density[i]));
        }
        out
    }
}

/// CDF of r = |w|(T − t) with t uniform and the emission direction weighted
/// by |p(k, p̂)|, tabulated over cos θ to v₀.
struct RadialLaw {
    rho: Vec<f64>,
    weight: Vec<f64>,
}

impl RadialLaw {
    fn new(k: [f64; 3], mass: f64, mu: f64, duration: f64) -> Result<Self, RelkinError> {
        let kk = norm(k);
        let axis = if kk > 0.0 { scale(k, 1.0 / kk) } else { [0.0, 0.0, 1.0] };
        let perp = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let perp = sub(perp, scale(axis, dot(perp, axis)));
        let perp = scale(perp, 1.0 / norm(perp));
        let mut rho = Vec::with_capacity(CDF_NODES);
        let mut weight = Vec::with_capacity(CDF_NODES);
        for i in 0..CDF_NODES {
            let c = -1.0 + (i as f64 + 0.5) * 2.0 / CDF_NODES as f64;
            let s = (1.0 - c * c).sqrt();
            let dir = add(scale(axis, c), scale(perp, s));
            rho.push(norm(velocity_gain(k, dir, mass, mu)?) * duration);
            weight.push(tachyon_momentum(k, dir, mass, mu)?);
        }
        let z: f64 = weight.iter().sum();
        weight.iter_mut().for_each(|w| *w /= z);
        Ok(RadialLaw { rho, weight })
    }

    fn cdf(&self, r: f64) -> f64 {
        self.rho
            .iter()
            .zip(&self.weight)
            .map(|(rho, w)| w * (r / rho).min(1.0))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// The CDF tabulated on `n + 1` equally spaced radii in [0, top].
    fn table(&self, top: f64, n: usize) -> CdfTable {
        let h = top / n as f64;
        CdfTable {
            h,
            values: (0..=n).map(|i| self.cdf(i as f64 * h)).collect(),
        }
    }
}

struct CdfTable {
    h: f64,
    values: Vec<f64>,
}

impl CdfTable {
    fn at(&self, r: f64) -> f64 {
        let x = r / self.h;
        if x <= 0.0 {
            return 0.0;
        }
        let i = x as usize;
        if i + 1 >= self.values.len() {
            return 1.0;
        }
        let t = x - i as f64;
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }
}

/// Classical-impulse ensemble for a particle with initial velocity `v0`,
/// default execution and 50 bins.
pub fn classical_impulse_ensemble(
    params: &ModelParams,
    duration: f64,
    v0: [f64; 3],
    n_samples: usize,
    seed: u64,
) -> Result<SpreadHistogram, SpreadError> {
    classical_impulse_ensemble_with(params, duration, v0, n_samples, seed, 50, Execution::default())
}

/// Each sample gets one impulse at t ~ U[0, T] along p̂, with p̂ weighted by
/// the emission magnitude |p(k, p̂)| (isotropic at rest), and ends at
/// z − v₀T = w(T − t).
pub fn classical_impulse_ensemble_with(
    params: &ModelParams,
    duration: f64,
    v0: [f64; 3],
    n_samples: usize,
    seed: u64,
    bins: usize,
    exec: Execution,
) -> Result<SpreadHistogram, SpreadError> {
    let speed = norm(v0);
    if !(speed < 1.0) {
        return Err(SpreadError::Domain(format!("|v0| must be below 1, got {speed}")));
    }
    if n_samples < 1000 {
        return Err(SpreadError::Domain(format!("need at least 1000 samples, got {n_samples}")));
    }
    if !(duration > 0.0 && duration.is_finite()) || bins == 0 {
        return Err(SpreadError::Domain("T must be positive and bins nonzero".into()));
    }
    let (mu, m) = (params.mu, params.mass);
    let k = scale(v0, m / (1.0 - speed * speed).sqrt());
    let kk = norm(k);
    let axis = if kk > 0.0 { scale(k, 1.0 / kk) } else { [0.0, 0.0, 1.0] };
    let (r_par, r_perp) = if kk > 0.0 {
        (
            spread_radius(params, kk, Geometry::Parallel, duration),
            spread_radius(params, kk, Geometry::Perpendicular, duration),
        )
    } else {
        let r = spread_radius(params, 0.0, Geometry::Rest, duration);
        (r, r)
    };
    let p_max = tachyon_momentum(k, axis, m, mu)?;

    struct Block {
        r: Vec<f64>,
        max_par: f64,
        max_perp: f64,
        violations: u64,
    }
    let blocks = map_blocks(exec, n_samples, BLOCK, |b, range| -> Result<Block, RelkinError> {
        let mut rng = rng_from_seed(child_seed(seed, b as u64));
        let mut out = Block {
            r: Vec::with_capacity(range.len()),
            max_par: 0.0,
            max_perp: 0.0,
            violations: 0,
        };
        for _ in range {
            let dir = loop {
                let d = unit(&mut rng);
                if kk == 0.0 || rng.gen::<f64>() * p_max <= tachyon_momentum(k, d, m, mu)? {
                    break d;
                }
            };
            let t = rng.gen::<f64>() * duration;
            let disp = scale(velocity_gain(k, dir, m, mu)?, duration - t);
            let par = dot(disp, axis);
            let perp = norm(sub(disp, scale(axis, par)));
            if (par / r_par).powi(2) + (perp / r_perp).powi(2) > 1.0 + 1e-12 {
                out.violations += 1;
            }
            out.max_par = out.max_par.max(par.abs());
            out.max_perp = out.max_perp.max(perp);
            out.r.push(norm(disp));
        }
        Ok(out)
    });
    let mut r = Vec::with_capacity(n_samples);
    let (mut max_par, mut max_perp, mut violations) = (0.0f64, 0.0f64, 0);
    for b in blocks {
        let b = b?;
        r.extend_from_slice(&b.r);
        max_par = max_par.max(b.max_par);
        max_perp = max_perp.max(b.max_perp);
        violations += b.violations;
    }

    let law = RadialLaw::new(k, m, mu, duration)?;
    let r_top = r_par.max(r_perp);
    let edges: Vec<f64> = (0..=bins).map(|i| r_top * i as f64 / bins as f64).collect();
    let mut counts = vec![0u64; bins];
    for &x in &r {
        let i = ((x / r_top) * bins as f64) as usize;
        counts[i.min(bins - 1)] += 1;
    }
    let probs: Vec<f64> = edges.windows(2).map(|w| law.cdf(w[1]) - law.cdf(w[0])).collect();
    let theory_density = probs
        .iter()
        .zip(edges.windows(2))
        .map(|(p, w)| p / (w[1] - w[0]))
        .collect();
    let n = n_samples as f64;
    let mut stat = 0.0;
    let mut dof = 0usize;
    for (c, p) in counts.iter().zip(&probs) {
        let expected = p * n;
        if expected > 0.0 {
            stat += (*c as f64 - expected).powi(2) / expected;
            dof += 1;
        }
    }
    let dof = dof.saturating_sub(1).max(1);
    let p_value = ChiSquared::new(dof as f64).map(|d| d.sf(stat)).unwrap_or(f64::NAN);
    let table = law.table(r_top, 4096);
    let ks = ks_test(&r, |x| table.at(x));
    let max_radius = r.iter().cloned().fold(0.0, f64::max);
    Ok(SpreadHistogram {
        edges,
        counts,
        total: n_samples as u64,
        theory_density,
        radius_rest: spread_radius(params, 0.0, Geometry::Rest, duration),
        radius_parallel: r_par,
        radius_perpendicular: r_perp,
        power_law: -2.0,
        max_parallel: max_par,
        max_perpendicular: max_perp,
        max_radius,
        violations,
        ks,
        chi_square: ChiSquare {
            statistic: stat,
            dof,
            p_value,
        },
        regime: REGIME,
    })
}

/// Ladder-walk scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Independent isotropic emission direction each order.
    Isotropic,
    /// Every emission along +ẑ, so the particle keeps accelerating.
    ForwardAccelerating,
    /// Pairs of evolutions: impulse +p̂ at t = T, then the opposite impulse
    /// at t = 0 that brings the particle back to rest.
    AdversarialBackforth,
}

impl Scenario {
    pub fn tag(self) -> &'static str {
        match self {
            Scenario::Isotropic => "isotropic",
            Scenario::ForwardAccelerating => "forward_accelerating",
            Scenario::AdversarialBackforth => "adversarial_backforth",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "isotropic" => Some(Scenario::Isotropic),
            "forward_accelerating" => Some(Scenario::ForwardAccelerating),
            "adversarial_backforth" => Some(Scenario::AdversarialBackforth),
            _ => None,
        }
    }
}

/// One order of an impulse walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulseStep {
    pub time: f64,
    pub direction: [f64; 3],
    pub momentum_before: [f64; 3],
    pub momentum_after: [f64; 3],
    pub displacement: [f64; 3],
}

/// A single realization of the ladder walk.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseWalk {
    pub steps: Vec<ImpulseStep>,
    pub position: [f64; 3],
}

impl ImpulseWalk {
    pub fn orders(&self) -> usize {
        self.steps.len()
    }
}

/// Runs one walk. Each order drifts forward for T with an impulse at t and
/// then backward for T with the final velocity, a net shift of
/// (v_before − v_after)·t. Momenta follow the tachyon emission kinematics;
/// the adversarial pairs use the classical narrative v = p/M and return the
/// particle to rest after each pair.
pub fn impulse_walk(
    params: &ModelParams,
    duration: f64,
    n_orders: usize,
    scenario: Scenario,
    rng: &mut impl Rng,
) -> Result<ImpulseWalk, SpreadError> {
    let (mu, m) = (params.mu, params.mass);
    let mut k = [0.0; 3];
    let mut x = [0.0; 3];
    let mut steps = Vec::with_capacity(n_orders);
    let z = [0.0, 0.0, 1.0];
    for order in 0..n_orders {
        let (time, dir, after, dx) = match scenario {
            Scenario::Isotropic | Scenario::ForwardAccelerating => {
                let dir = if scenario == Scenario::Isotropic { unit(rng) } else { z };
                let t = rng.gen::<f64>() * duration;
                let after = add(k, scale(dir, tachyon_momentum(k, dir, m, mu)?));
                let dx = scale(sub(velocity(k, m), velocity(after, m)), t);
                (t, dir, after, dx)
            }
            Scenario::AdversarialBackforth => {
                if order % 2 == 0 {
                    let p = tachyon_momentum(k, z, m, mu)?;
                    (duration, z, scale(z, p), scale(z, -p / m * duration))
                } else {
                    (0.0, scale(z, -1.0), [0.0; 3], [0.0; 3])
                }
            }
        };
        x = add(x, dx);
        steps.push(ImpulseStep {
            time,
            direction: dir,
            momentum_before: k,
            momentum_after: after,
            displacement: dx,
        });
        k = after;
    }
    Ok(ImpulseWalk { steps, position: x })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderRow {
    pub order: usize,
    pub mean_disp: f64,
    pub max_disp: f64,
    pub p_exceed: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderReport {
    pub scenario: Scenario,
    pub rows: Vec<LadderRow>,
    /// First completed order at which every sample has |x| ≥ cT(1 − 1e-12).
    pub exit_order: Option<usize>,
    pub regime: &'static str,
}

impl LadderReport {
    /// CSV with header `order,mean_disp,p_exceed_cT,ci_low,ci_high`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("order,mean_disp,p_exceed_cT,ci_low,ci_high\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.12e},{:.9e},{:.9e},{:.9e}\n",
                r.order, r.mean_disp, r.p_exceed, r.ci_low, r.ci_high
            ));
        }
        out
    }
}

pub fn ladder_walk(
    params: &ModelParams,
    duration: f64,
    n_orders: usize,
    n_samples: usize,
    seed: u64,
    scenario: Scenario,
) -> Result<LadderReport, SpreadError> {
    ladder_walk_with(params, duration, n_orders, n_samples, seed, scenario, Execution::default())
}

/// Displacement statistics after each order. Exceedance is |x| > cT; the
/// Wilson interval is at z = 1.96.
pub fn ladder_walk_with(
    params: &ModelParams,
    duration: f64,
    n_orders: usize,
    n_samples: usize,
    seed: u64,
    scenario: Scenario,
    exec: Execution,
) -> Result<LadderReport, SpreadError> {
    if n_orders == 0 {
        return Err(SpreadError::OrderMismatch {
            scenario: scenario.tag(),
            requirement: "at least one order",
            n_orders,
        });
    }
    if scenario == Scenario::AdversarialBackforth && n_orders % 2 == 1 {
        return Err(SpreadError::OrderMismatch {
            scenario: scenario.tag(),
            requirement: "an even number of orders",
            n_orders,
        });
    }
    if n_samples == 0 || !(duration > 0.0 && duration.is_finite()) {
        return Err(SpreadError::Domain("need samples and a positive T".into()));
    }

    #[derive(Clone)]
    struct Acc {
        moments: Moments,
        exceed: u64,
        at_edge: u64,
        max: f64,
    }
    let empty = Acc {
        moments: Moments::default(),
        exceed: 0,
        at_edge: 0,
        max: 0.0,
    };
    let edge = duration * (1.0 - 1e-12);
    let blocks = map_blocks(exec, n_samples, BLOCK, |b, range| -> Result<Vec<Acc>, SpreadError> {
        let mut rng = rng_from_seed(child_seed(seed, b as u64));
        let mut acc = vec![empty.clone(); n_orders];
        for _ in range {
            let walk = impulse_walk(params, duration, n_orders, scenario, &mut rng)?;
            let mut x = [0.0; 3];
            for (a, s) in acc.iter_mut().zip(&walk.steps) {
                x = add(x, s.displacement);
                let d = norm(x);
                a.moments.push(d);
                a.max = a.max.max(d);
                a.exceed += (d > duration) as u64;
                a.at_edge += (d >= edge) as u64;
            }
        }
        Ok(acc)
    });
    let mut total = vec![empty; n_orders];
    for b in blocks {
        for (t, a) in total.iter_mut().zip(b?) {
            t.moments.merge(&a.moments);
            t.exceed += a.exceed;
            t.at_edge += a.at_edge;
            t.max = t.max.max(a.max);
        }
    }
    let n = n_samples as u64;
    let rows = total
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let (lo, hi) = wilson_interval(a.exceed, n, 1.96);
            LadderRow {
                order: i + 1,
                mean_disp: a.moments.mean(),
                max_disp: a.max,
                p_exceed: a.exceed as f64 / n as f64,
                ci_low: lo,
                ci_high: hi,
            }
        })
        .collect();
    let pair = if scenario == Scenario::AdversarialBackforth { 2 } else { 1 };
    let exit_order = total
        .iter()
        .enumerate()
        .find(|(i, a)| (i + 1) % pair == 0 && a.at_edge == n)
        .map(|(i, _)| i + 1);
    Ok(LadderReport {
        scenario,
        rows,
        exit_order,
        regime: REGIME,
    })
}
