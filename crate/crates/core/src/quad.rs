//! Numerical quadrature: adaptive Gauss–Kronrod (real or complex valued),
//! Gauss–Legendre and Gauss–Hermite rules.

use num_complex::Complex64;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum QuadError {
    #[error("quadrature did not converge: |estimate| = {magnitude:.6e}, error estimate {error:.3e} after {intervals} intervals")]
    NotConverged {
        magnitude: f64,
        error: f64,
        intervals: usize,
    },
    #[error("integrand returned a non-finite value at x = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_351_996,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

fn gk21<V: QuadValue, F: Fn(f64) -> V>(f: &F, a: f64, b: f64) -> Result<(V, f64), QuadError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.magnitude().is_finite() {
        return Err(QuadError::NonFinite(c));
    }
    let mut kronrod = fc * WGK[10];
    let mut gauss = V::zero();
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        if !f1.magnitude().is_finite() {
            return Err(QuadError::NonFinite(c - dx));
        }
        if !f2.magnitude().is_finite() {
            return Err(QuadError::NonFinite(c + dx));
        }
        let s = f1 + f2;
        kronrod = kronrod + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let k = kronrod * h;
    let g = gauss * h;
    Ok((k, (k - g).magnitude()))
}

struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Segment<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Segment<V> {}
impl<V> PartialOrd for Segment<V> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Segment<V> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive 21-point Gauss–Kronrod integrator with global error control.
#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quad {
    fn default() -> Self {
        Quad {
            abs_tol: 1e-14,
            rel_tol: 1e-11,
            max_intervals: 4000,
        }
    }
}

impl Quad {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Quad {
            abs_tol,
            rel_tol,
            ..Quad::default()
        }
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }

    /// Integrates over `[a, b]`.
    pub fn integrate<V: QuadValue, F: Fn(f64) -> V>(
        &self,
        f: F,
        a: f64,
        b: f64,
    ) -> Result<Estimate<V>, QuadError> {
        self.integrate_points(f, &[a, b])
    }

    /// Integrates over `[points[0], points[last]]`, starting from the
    /// subdivision given by the (increasing) breakpoints.
    pub fn integrate_points<V: QuadValue, F: Fn(f64) -> V>(
        &self,
        f: F,
        points: &[f64],
    ) -> Result<Estimate<V>, QuadError> {
        assert!(points.len() >= 2, "need at least two breakpoints");
        let mut heap = BinaryHeap::new();
        let mut total = V::zero();
        let mut err = 0.0;
        let mut evals = 0;
        for w in points.windows(2) {
            if w[1] == w[0] {
                continue;
            }
            let (v, e) = gk21(&f, w[0], w[1])?;
            evals += 21;
            total = total + v;
            err += e;
            heap.push(Segment {
                a: w[0],
                b: w[1],
                value: v,
                error: e,
            });
        }
        loop {
            let tol = self.abs_tol.max(self.rel_tol * total.magnitude());
            if err <= tol {
                return Ok(Estimate {
                    value: total,
                    error: err,
                    evaluations: evals,
                });
            }
            if heap.len() >= self.max_intervals {
                return Err(QuadError::NotConverged {
                    magnitude: total.magnitude(),
                    error: err,
                    intervals: heap.len(),
                });
            }
            let worst = heap.pop().expect("heap is nonempty");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                return Err(QuadError::NotConverged {
                    magnitude: total.magnitude(),
                    error: err,
                    intervals: heap.len() + 1,
                });
            }
            let (v1, e1) = gk21(&f, worst.a, mid)?;
            let (v2, e2) = gk21(&f, mid, worst.b)?;
            evals += 42;
            total = total - worst.value + v1 + v2;
            err += e1 + e2 - worst.error;
            if err < 0.0 {
                err = heap.iter().map(|s| s.error).sum::<f64>() + e1 + e2;
            }
            heap.push(Segment {
                a: worst.a,
                b: mid,
                value: v1,
                error: e1,
            });
            heap.push(Segment {
                a: mid,
                b: worst.b,
                value: v2,
                error: e2,
            });
        }
    }

    /// Integrates over `[a, ∞)` using `x = a + scale·t/(1−t)`.
    pub fn integrate_to_inf<V: QuadValue, F: Fn(f64) -> V>(
        &self,
        f: F,
        a: f64,
        scale: f64,
    ) -> Result<Estimate<V>, QuadError> {
        let g = |t: f64| {
            let u = 1.0 - t;
            let x = a + scale * t / u;
            let jac = scale / (u * u);
            if jac.is_finite() {
                f(x) * jac
            } else {
                V::zero()
            }
        };
        self.integrate_points(g, &[0.0, 0.5, 0.9, 0.99, 1.0])
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / dp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    (
        x.iter().map(|xi| c + h * xi).collect(),
        w.iter().map(|wi| h * wi).collect(),
    )
}

/// Gauss–Hermite nodes and weights for the weight `exp(-x²)`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_oscillatory() {
        let q = Quad::default();
        let r = q.integrate(|x: f64| x.powi(7), 0.0, 2.0).unwrap();
        assert!((r.value - 32.0).abs() < 1e-12);
        let r = q.integrate(|x: f64| (50.0 * x).cos(), 0.0, 3.0).unwrap();
        assert!((r.value - (150.0f64).sin() / 50.0).abs() < 1e-12);
    }

    #[test]
    fn semi_infinite() {
        let q = Quad::default();
        let r = q.integrate_to_inf(|x: f64| (-x).exp(), 0.0, 1.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = q.integrate_to_inf(|x: f64| 1.0 / (1.0 + x * x), 0.0, 1.0).unwrap();
        assert!((r.value - std::f64::consts::FRAC_PI_2).abs() < 1e-11);
    }

    #[test]
    fn complex_integrand() {
        let q = Quad::default();
        let r = q
            .integrate(|x: f64| Complex64::new(0.0, x).exp(), 0.0, std::f64::consts::PI)
            .unwrap();
        assert!((r.value - Complex64::new(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn legendre_rules_integrate_exactly() {
        for n in [1, 2, 5, 8, 13] {
            let (x, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}");
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((q - exact).abs() < 1e-13);
            let q2: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(2 * (n as i32 - 1))).sum();
            assert!((q2 - 2.0 / (2.0 * n as f64 - 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn hermite_moments() {
        let (x, w) = gauss_hermite(30);
        let sp = std::f64::consts::PI.sqrt();
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m0 - sp).abs() < 1e-13);
        assert!((m2 - sp / 2.0).abs() < 1e-13);
        assert!((m4 - 0.75 * sp).abs() < 1e-12);
    }
}
