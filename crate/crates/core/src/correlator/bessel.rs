//! Bessel functions Y₁ and K₁ of positive real argument.
//!
//! Y₁: power series for x ≤ 8, Miller backward recurrence with the Neumann
//! series for 8 < x < 25, Hankel asymptotic expansion for x ≥ 25.
//! K₁: power series for x ≤ 2, Steed/Temme continued fraction above.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Crossover between the Y₁ power series and Miller recurrence.
pub const Y1_SERIES_MAX: f64 = 8.0;
/// Crossover between Miller recurrence and the Hankel expansion.
pub const Y1_ASYMPTOTIC_MIN: f64 = 25.0;
/// Crossover between the K₁ series and the continued fraction.
pub const K1_SERIES_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum BesselError {
    #[error("argument must be positive and finite, got {0}")]
    Domain(f64),
}

fn check(x: f64) -> Result<(), BesselError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(BesselError::Domain(x))
    }
}

/// J₀ and J₁ by their power series (used for x ≤ 8).
fn j0_j1_series(x: f64) -> (f64, f64) {
    let q = -0.25 * x * x;
    let mut t0 = 1.0;
    let mut t1 = 0.5 * x;
    let (mut j0, mut j1) = (t0, t1);
    for k in 1..60 {
        let kf = k as f64;
        t0 *= q / (kf * kf);
        t1 *= q / (kf * (kf + 1.0));
        j0 += t0;
        j1 += t1;
        if t0.abs() < 1e-17 * j0.abs().max(1e-300) && t1.abs() < 1e-17 * j1.abs().max(1e-300) {
            break;
        }
    }
    (j0, j1)
}

fn y1_series(x: f64) -> f64 {
    let (_, j1) = j0_j1_series(x);
    let q = -0.25 * x * x;
    // psi(k+1) + psi(k+2) = -2γ + H_k + H_{k+1}
    let mut h_k = 0.0;
    let mut term = 1.0;
    let mut sum = -2.0 * EULER_GAMMA + 1.0;
    for k in 1..80 {
        let kf = k as f64;
        term *= q / (kf * (kf + 1.0));
        h_k += 1.0 / kf;
        let h_k1 = h_k + 1.0 / (kf + 1.0);
        let t = term * (-2.0 * EULER_GAMMA + h_k + h_k1);
        sum += t;
        if t.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    (2.0 / PI) * (0.5 * x).ln() * j1 - 2.0 / (PI * x) - x / (2.0 * PI) * sum
}

fn y1_miller(x: f64) -> f64 {
    let n_top = 2 * ((x as usize) / 2 + 30);
    let mut js = vec![0.0; n_top + 2];
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    js[n_top] = j;
    for n in (1..=n_top).rev() {
        let jm = (2.0 * n as f64 / x) * j - jp1;
        jp1 = j;
        j = jm;
        js[n - 1] = j;
        if j.abs() > 1e250 {
            for v in js.iter_mut().skip(n - 1) {
                *v *= 1e-250;
            }
            jp1 *= 1e-250;
            j *= 1e-250;
        }
    }
    let mut norm = js[0];
    for k in 1..=n_top / 2 {
        norm += 2.0 * js[2 * k];
    }
    for v in js.iter_mut() {
        *v /= norm;
    }
    let l = (0.5 * x).ln() + EULER_GAMMA;
    let mut s = 0.0;
    for k in 1..n_top / 2 {
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        s += sign * (js[2 * k - 1] - js[2 * k + 1]) / k as f64;
    }
    (2.0 / PI) * (l * js[1] - js[0] / x) + (2.0 / PI) * s
}

fn y1_hankel(x: f64) -> f64 {
    // a_k(1) = prod_{j=1..k} (4 - (2j-1)^2) / (k! 8^k)
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let jf = (2 * k - 1) as f64;
        a *= (4.0 - jf * jf) / (k as f64 * 8.0 * x);
        if a.abs() >= prev || a.abs() < 1e-18 {
            break;
        }
        prev = a.abs();
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
    }
    let (s, c) = x.sin_cos();
    let sin_chi = -(s + c) * FRAC_1_SQRT_2;
    let cos_chi = (s - c) * FRAC_1_SQRT_2;
    (2.0 / (PI * x)).sqrt() * (p * sin_chi + q * cos_chi)
}

/// Bessel function of the second kind, order one (Weber's Y₁, Neumann's N₁).
pub fn bessel_y1(x: f64) -> Result<f64, BesselError> {
    check(x)?;
    Ok(if x <= Y1_SERIES_MAX {
        y1_series(x)
    } else if x < Y1_ASYMPTOTIC_MIN {
        y1_miller(x)
    } else {
        y1_hankel(x)
    })
}

fn k1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut t = 0.5 * x;
    let mut i1 = t;
    let mut term = 1.0;
    let mut h_k = 0.0;
    let mut sum = -2.0 * EULER_GAMMA + 1.0;
    for k in 1..60 {
        let kf = k as f64;
        t *= q / (kf * (kf + 1.0));
        i1 += t;
        term *= q / (kf * (kf + 1.0));
        h_k += 1.0 / kf;
        let h_k1 = h_k + 1.0 / (kf + 1.0);
        sum += term * (-2.0 * EULER_GAMMA + h_k + h_k1);
        if term < 1e-18 {
            break;
        }
    }
    1.0 / x + (0.5 * x).ln() * i1 - 0.25 * x * sum
}

/// Steed's continued fraction (Temme's CF2) for K₀ and K₁, x > 2.
fn k1_cf2(x: f64) -> f64 {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    k0 * (x + 0.5 - h) / x
}

/// Modified Bessel function of the second kind, order one.
pub fn bessel_k1(x: f64) -> Result<f64, BesselError> {
    check(x)?;
    Ok(if x <= K1_SERIES_MAX { k1_series(x) } else { k1_cf2(x) })
}
