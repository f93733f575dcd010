use super::NoiseError;
use crate::quad::gauss_hermite;
use crate::seed::rng_from_seed;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

const HERMITE_NODES: usize = 48;
const DRAWS: usize = 8;

/// Both sides of the Gaussian Fourier identity at d = w − a:
/// exp(−dᵀGd/2α) and (det G)^{−1/2}(α/2π)^{N/2}∫dη e^{−αηᵀG⁻¹η/2 + iηᵀd}.
///
/// The right side is integrated numerically after the substitution
/// η = Cy/√α (CCᵀ = G), which turns it into a standard-normal expectation of
/// cos(yᵀCᵀd/√α) evaluated with tensor Gauss–Hermite quadrature.
pub fn gaussian_ft_sides(g: &DMatrix<f64>, alpha: f64, d: &[f64]) -> Result<(f64, f64), NoiseError> {
    let n = g.nrows();
    if g.ncols() != n || d.len() != n || n == 0 || n > 4 {
        return Err(NoiseError::Spectrum(format!("dimension must be 1..=4, got {n}")));
    }
    if !(alpha > 0.0) {
        return Err(NoiseError::Spectrum(format!("alpha must be positive, got {alpha}")));
    }
    let chol = g.clone().cholesky().ok_or(NoiseError::Singular { condition: f64::INFINITY })?;
    let dv = DVector::from_column_slice(d);
    let lhs = (-(dv.dot(&(g * &dv))) / (2.0 * alpha)).exp();
    let b = chol.l().transpose() * &dv / alpha.sqrt();
    let (x, w) = gauss_hermite(HERMITE_NODES);
    let m = HERMITE_NODES;
    let total = m.pow(n as u32);
    let mut sum = 0.0;
    for flat in 0..total {
        let mut rest = flat;
        let mut weight = 1.0;
        let mut phase = 0.0;
        for bj in b.iter() {
            let i = rest % m;
            rest /= m;
            weight *= w[i];
            phase += std::f64::consts::SQRT_2 * x[i] * bj;
        }
        sum += weight * phase.cos();
    }
    let rhs = sum / PI.powf(0.5 * n as f64);
    Ok((lhs, rhs))
}

/// Max relative residual of the Gaussian Fourier identity over random
/// separations d with dᵀGd/α spread over [0, 8].
pub fn gaussian_ft_identity_residual(dim: usize, g: &DMatrix<f64>, alpha: f64, seed: u64) -> Result<f64, NoiseError> {
    if g.nrows() != dim {
        return Err(NoiseError::Spectrum(format!("matrix is {}x{}, dimension {dim}", g.nrows(), g.ncols())));
    }
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for j in 0..DRAWS {
        let dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let dv = DVector::from_column_slice(&dir);
        let form = dv.dot(&(g * &dv)) / alpha;
        let target = 8.0 * j as f64 / (DRAWS - 1) as f64;
        let scale = if form > 0.0 { (target / form).sqrt() } else { 0.0 };
        let d: Vec<f64> = dir.iter().map(|v| v * scale).collect();
        let (lhs, rhs) = gaussian_ft_sides(g, alpha, &d)?;
        worst = worst.max((lhs - rhs).abs() / lhs);
    }
    Ok(worst)
}
