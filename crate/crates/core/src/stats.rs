//! Small statistical helpers: Wilson intervals, running moments and the
//! one-sample Kolmogorov–Smirnov test.

/// Wilson score interval for `successes` out of `n` at `z` standard deviations.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Mean and variance accumulator. Merging is exact for sums, so folding
/// per-block accumulators in index order is deterministic.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let m = self.sum / n;
        ((self.sum_sq - n * m * m) / (n - 1.0)).max(0.0)
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Survival function of the Kolmogorov distribution, P(K > x).
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.3 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

impl KsResult {
    /// Asymptotic critical value of `D` at significance `alpha`.
    pub fn critical(&self, alpha: f64) -> f64 {
        let mut lo = 0.3;
        let mut hi = 3.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if kolmogorov_survival(mid) > alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi) / (self.n as f64).sqrt()
    }

    pub fn passes(&self, alpha: f64) -> bool {
        self.statistic < self.critical(alpha)
    }
}

/// One-sample KS test of `samples` against the continuous CDF `cdf`.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> KsResult {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let c = cdf(*x);
        d = d.max(c - i as f64 / nf).max((i + 1) as f64 / nf - c);
    }
    let sq = nf.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
        n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(300, 1000, 3.0);
        assert!(lo < 0.3 && 0.3 < hi);
        assert!(hi - lo < 0.1);
        assert_eq!(wilson_interval(0, 10, 3.0).0, 0.0);
    }

    #[test]
    fn kolmogorov_one_percent_point() {
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 2e-4);
        let r = KsResult { statistic: 0.0, p_value: 1.0, n: 10_000 };
        assert!((r.critical(0.01) - 0.016276).abs() < 1e-5);
    }

    #[test]
    fn moments_merge() {
        let mut a = Moments::default();
        let mut b = Moments::default();
        for i in 0..10 {
            a.push(i as f64);
        }
        for i in 10..20 {
            b.push(i as f64);
        }
        a.merge(&b);
        assert_eq!(a.mean(), 9.5);
        assert!((a.variance() - 35.0).abs() < 1e-12);
    }
}
