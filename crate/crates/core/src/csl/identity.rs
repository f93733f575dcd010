use super::CslError;
use crate::quad::gauss_legendre_on;
use crate::seed::rng_from_seed;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

type CMat = DMatrix<Complex64>;

const ALPHA_NODES: usize = 12;

/// Matrix exponential.
pub fn expm(a: &CMat) -> CMat {
    a.exp()
}

/// A smooth path A(t) of anti-Hermitian matrices on t ∈ [0, 1] with A(0) = 0.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixPath {
    /// A(t) = tA₁ + t²A₂ with random A₁, A₂ that do not commute.
    Random { a1: CMat, a2: CMat },
    /// A(t) = (t + t³)A₀.
    Commuting { a0: CMat },
    Zero { dim: usize },
}

fn random_anti_hermitian<R: Rng>(dim: usize, scale: f64, rng: &mut R) -> CMat {
    let x = CMat::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    (&x - x.adjoint()) * Complex64::new(0.5 * scale / (dim as f64).sqrt(), 0.0)
}

impl MatrixPath {
    pub fn random(dim: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        MatrixPath::Random {
            a1: random_anti_hermitian(dim, 1.0, &mut rng),
            a2: random_anti_hermitian(dim, 1.0, &mut rng),
        }
    }

    pub fn commuting(dim: usize, seed: u64) -> Self {
        MatrixPath::Commuting {
            a0: random_anti_hermitian(dim, 1.0, &mut rng_from_seed(seed)),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MatrixPath::Random { a1, .. } => a1.nrows(),
            MatrixPath::Commuting { a0 } => a0.nrows(),
            MatrixPath::Zero { dim } => *dim,
        }
    }

    /// (A(t), dA/dt).
    pub fn at(&self, t: f64) -> (CMat, CMat) {
        let c = |v: f64| Complex64::new(v, 0.0);
        match self {
            MatrixPath::Random { a1, a2 } => (a1 * c(t) + a2 * c(t * t), a1 + a2 * c(2.0 * t)),
            MatrixPath::Commuting { a0 } => (a0 * c(t + t * t * t), a0 * c(1.0 + 3.0 * t * t)),
            MatrixPath::Zero { dim } => (CMat::zeros(*dim, *dim), CMat::zeros(*dim, *dim)),
        }
    }

    /// B(t) = ∫₀¹ e^{αA} Ȧ e^{−αA} dα, so that d/dt e^{A(t)} = B(t)e^{A(t)}.
    fn generator(&self, t: f64) -> CMat {
        let (a, da) = self.at(t);
        let (nodes, weights) = gauss_legendre_on(ALPHA_NODES, 0.0, 1.0);
        let mut b = CMat::zeros(a.nrows(), a.ncols());
        for (x, w) in nodes.iter().zip(&weights) {
            let s = Complex64::new(*x, 0.0);
            let left = expm(&(&a * s));
            let right = expm(&(&a * -s));
            b += (left * &da * right) * Complex64::new(*w, 0.0);
        }
        b
    }
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Integrates U′ = B(t)U from U(0) = 1 to t = 1 with the fourth-order
/// Magnus scheme and compares U(1) with e^{A(1)}. Returns the largest
/// elementwise difference divided by the largest element of e^{A(1)}.
pub fn time_ordering_residual(path: &MatrixPath, n_steps: usize) -> Result<f64, CslError> {
    if n_steps == 0 {
        return Err(CslError::TooFewSteps { steps: 0, product: f64::INFINITY });
    }
    let dim = path.dim();
    let h = 1.0 / n_steps as f64;
    let r3 = 3f64.sqrt();
    let (c1, c2) = (0.5 - r3 / 6.0, 0.5 + r3 / 6.0);
    let mut u = CMat::identity(dim, dim);
    for n in 0..n_steps {
        let t = n as f64 * h;
        let b1 = path.generator(t + c1 * h);
        let b2 = path.generator(t + c2 * h);
        let product = h * b1.norm().max(b2.norm());
        if product >= std::f64::consts::PI {
            return Err(CslError::TooFewSteps { steps: n_steps, product });
        }
        let comm = &b2 * &b1 - &b1 * &b2;
        let omega = (&b1 + &b2) * Complex64::new(0.5 * h, 0.0) + comm * Complex64::new(r3 * h * h / 12.0, 0.0);
        u = expm(&omega) * u;
    }
    let exact = expm(&path.at(1.0).0);
    Ok(max_abs(&(&u - &exact)) / max_abs(&exact))
}

/// Residual of the time-ordering identity for a random non-commuting path.
pub fn time_ordering_identity_residual(dim: usize, n_steps: usize, seed: u64) -> Result<f64, CslError> {
    if dim == 0 || dim > 6 {
        return Err(CslError::Config(format!("dimension must be 1..=6, got {dim}")));
    }
    time_ordering_residual(&MatrixPath::random(dim, seed), n_steps)
}
