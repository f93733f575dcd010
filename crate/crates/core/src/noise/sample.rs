use super::kernel::Factor;
use super::{check_weights, LatticeKernel, NoiseError, NoiseRealization, SpacetimeGrid, SpectralDensity};
use crate::csl::{SuperpositionState, NORM_TOLERANCE};
use crate::params::ModelParams;
use crate::quad::Quad;
use crate::seed::rng_from_seed;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

/// Number of random spectral modes used for the colored free field.
pub const FREE_FIELD_MODES: usize = 1024;

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// The probability density P_T(w) = Σᵢ|cᵢ|² exp{−(w−2λnᵢ)ᵀK(w−2λnᵢ)/2λ}
/// on a fixed lattice, normalized as a density over the cell values of w.
#[derive(Debug, Clone)]
pub struct ProbabilityModel {
    pub kernel: LatticeKernel,
    pub lambda: f64,
    pub spectrum_tag: String,
    means: Vec<Vec<f64>>,
    log_weights: Vec<f64>,
    /// ½ log det K − (D/2) log 2πλ; absent when K is not numerically
    /// positive definite.
    log_norm: Option<f64>,
}

impl ProbabilityModel {
    pub fn new(
        state: &SuperpositionState,
        params: &ModelParams,
        spectrum: &SpectralDensity,
        grid: &SpacetimeGrid,
    ) -> Result<Self, NoiseError> {
        let kernel = LatticeKernel::build(spectrum, grid)?;
        Self::with_kernel(state, params, spectrum, kernel)
    }

    pub fn with_kernel(
        state: &SuperpositionState,
        params: &ModelParams,
        spectrum: &SpectralDensity,
        kernel: LatticeKernel,
    ) -> Result<Self, NoiseError> {
        let grid = kernel.grid;
        if state.grid != grid.space {
            return Err(NoiseError::Grid("state and noise use different spatial grids".into()));
        }
        let norm = state.norm_sq();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(NoiseError::NotNormalized(norm));
        }
        let lambda = params.lambda;
        let means = state
            .branches
            .iter()
            .map(|b| {
                let mut m = Vec::with_capacity(grid.site_count());
                for _ in 0..grid.steps {
                    m.extend(b.density.iter().map(|n| 2.0 * lambda * n));
                }
                m
            })
            .collect();
        let log_weights = state.probabilities().iter().map(|p| p.ln()).collect();
        let d = kernel.dim() as f64;
        let log_norm = kernel.log_det().ok().map(|ld| 0.5 * ld - 0.5 * d * (2.0 * PI * lambda).ln());
        Ok(ProbabilityModel {
            kernel,
            lambda,
            spectrum_tag: spectrum.tag(),
            means,
            log_weights,
            log_norm,
        })
    }

    pub fn branch_mean(&self, i: usize) -> &[f64] {
        &self.means[i]
    }

    /// Qᵢ(t_k) = (w−2λnᵢ)ᵀK(w−2λnᵢ) over the first k time cells.
    pub fn branch_prefix_forms(&self, w: &[f64], i: usize) -> Vec<f64> {
        let x: Vec<f64> = w.iter().zip(&self.means[i]).map(|(w, m)| w - m).collect();
        self.kernel.prefix_quad_forms(&x)
    }

    pub fn log_density(&self, w: &[f64]) -> Result<f64, NoiseError> {
        let Some(log_norm) = self.log_norm else {
            return Err(self.kernel.factor().err().unwrap_or(NoiseError::Singular { condition: f64::INFINITY }));
        };
        let terms: Vec<f64> = (0..self.means.len())
            .map(|i| {
                let q = *self.branch_prefix_forms(w, i).last().unwrap();
                self.log_weights[i] - q / (2.0 * self.lambda)
            })
            .collect();
        Ok(log_sum_exp(&terms) + log_norm)
    }

    pub fn log_probability(&self, w: &NoiseRealization) -> Result<f64, NoiseError> {
        if w.grid != self.kernel.grid {
            return Err(NoiseError::Grid("realization grid does not match the model".into()));
        }
        self.log_density(&w.values)
    }
}

/// log P_T(w) for a realization. Builds the lattice kernel on each call;
/// use [`ProbabilityModel`] to evaluate many realizations.
pub fn log_probability(
    w: &NoiseRealization,
    state: &SuperpositionState,
    params: &ModelParams,
    spectrum: &SpectralDensity,
) -> Result<f64, NoiseError> {
    ProbabilityModel::new(state, params, spectrum, &w.grid)?.log_probability(w)
}

/// Exact sampler for P_T(w) with H = 0: a branch is drawn with probability
/// |cᵢ|², then w ~ N(2λnᵢ, λK⁻¹) using the Cholesky factor K = LLᵀ.
#[derive(Debug, Clone)]
pub struct PosteriorSampler {
    pub model: ProbabilityModel,
    factor: Factor,
    cumulative: Vec<f64>,
}

impl PosteriorSampler {
    pub fn new(
        state: &SuperpositionState,
        params: &ModelParams,
        spectrum: &SpectralDensity,
        grid: &SpacetimeGrid,
    ) -> Result<Self, NoiseError> {
        Self::from_model(ProbabilityModel::new(state, params, spectrum, grid)?, state)
    }

    pub fn from_model(model: ProbabilityModel, state: &SuperpositionState) -> Result<Self, NoiseError> {
        let factor = model.kernel.factor()?;
        let mut acc = 0.0;
        let cumulative = state
            .probabilities()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(PosteriorSampler {
            model,
            factor,
            cumulative,
        })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> (usize, Vec<f64>) {
        let u: f64 = rng.gen::<f64>() * self.cumulative.last().unwrap();
        let branch = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cumulative.len() - 1);
        let d = self.model.kernel.dim();
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let noise = match &self.factor {
            Factor::Full(l) => l.tr_solve_lower_triangular(&z).expect("factor is nonsingular"),
            Factor::Blocked(l) => {
                let ns = l.nrows();
                let mut out = DVector::zeros(d);
                for k in 0..d / ns {
                    let zk = z.rows(k * ns, ns).into_owned();
                    let v = l.tr_solve_lower_triangular(&zk).expect("factor is nonsingular");
                    out.rows_mut(k * ns, ns).copy_from(&v);
                }
                out
            }
        };
        let s = self.model.lambda.sqrt();
        let w = self.model.means[branch]
            .iter()
            .zip(noise.iter())
            .map(|(m, e)| m + s * e)
            .collect();
        (branch, w)
    }

    pub fn sample_seeded(&self, seed: u64) -> (usize, NoiseRealization) {
        let (branch, values) = self.sample(&mut rng_from_seed(seed));
        (
            branch,
            NoiseRealization {
                grid: self.model.kernel.grid,
                values,
                seed,
                spectrum_tag: self.model.spectrum_tag.clone(),
            },
        )
    }
}

/// One draw from P_T(w). The branch index is returned for diagnostics only.
pub fn sample_posterior_noise(
    state: &SuperpositionState,
    params: &ModelParams,
    spectrum: &SpectralDensity,
    grid: &SpacetimeGrid,
    seed: u64,
) -> Result<(usize, NoiseRealization), NoiseError> {
    Ok(PosteriorSampler::new(state, params, spectrum, grid)?.sample_seeded(seed))
}

fn eigen_factor(m: DMatrix<f64>) -> Result<DMatrix<f64>, NoiseError> {
    let eig = m.symmetric_eigen();
    let weights: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    check_weights(&weights)?;
    let mut f = eig.eigenvectors;
    for (j, w) in weights.iter().enumerate() {
        let s = w.max(0.0).sqrt();
        f.column_mut(j).scale_mut(s);
    }
    Ok(f)
}

/// Zero-mean Gaussian field with two-point function (γ/2)·G.
///
/// White noise gives independent cell values of variance γ·strength/(2 dV dt).
/// Spectra δ-correlated in time are factorized per time slice. The colored
/// tachyonic spectrum is synthesized from [`FREE_FIELD_MODES`] random plane
/// waves drawn from the regulated spectral measure and evaluated at cell
/// centres.
pub fn sample_free_field(
    spectrum: &SpectralDensity,
    grid: &SpacetimeGrid,
    gamma: f64,
    seed: u64,
) -> Result<NoiseRealization, NoiseError> {
    spectrum.validate()?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(NoiseError::Spectrum(format!("gamma must be non-negative, got {gamma}")));
    }
    let mut rng = rng_from_seed(seed);
    let space = &grid.space;
    let ns = space.sites();
    let dt = grid.dt();
    let mut values = Vec::with_capacity(grid.site_count());
    match *spectrum {
        SpectralDensity::White { strength } => {
            let sd = (gamma * strength / (2.0 * space.cell_volume() * dt)).sqrt();
            for _ in 0..grid.site_count() {
                values.push(sd * rng.sample::<f64, _>(StandardNormal));
            }
        }
        SpectralDensity::Tachyonic { .. } => {
            let reg = spectrum.regulated().expect("validated");
            let modes = draw_modes(&reg, gamma, &mut rng)?;
            for k in 0..grid.steps {
                let t = grid.time_centre(k);
                for a in 0..ns {
                    let x = space.position(a);
                    values.push(modes.evaluate(t, x));
                }
            }
        }
        _ => {
            let s = DMatrix::from_fn(ns, ns, |a, b| {
                gamma / (2.0 * dt) * spectrum.spatial_kernel(space.distance(a, b)).unwrap()
            });
            let f = eigen_factor(s)?;
            for _ in 0..grid.steps {
                let z = DVector::from_fn(ns, |_, _| rng.sample::<f64, _>(StandardNormal));
                values.extend((&f * z).iter());
            }
        }
    }
    Ok(NoiseRealization {
        grid: *grid,
        values,
        seed,
        spectrum_tag: spectrum.tag(),
    })
}

struct Modes {
    amplitude: f64,
    waves: Vec<([f64; 4], f64)>,
}

impl Modes {
    fn evaluate(&self, t: f64, x: [f64; 3]) -> f64 {
        self.amplitude
            * self
                .waves
                .iter()
                .map(|(k, phase)| (k[1] * x[0] + k[2] * x[1] + k[3] * x[2] - k[0] * t + phase).cos())
                .sum::<f64>()
    }
}

/// Total mass Z = ∫d⁴k G̃_reg(k), so that G_reg(0) = Z/(2π)⁴.
fn spectral_mass(reg: &crate::correlator::RegulatedKernel) -> Result<f64, NoiseError> {
    let l2 = reg.cutoff * reg.cutoff;
    let q = Quad::new(1e-300, 1e-12);
    let mut z = 0.0;
    for (m, w) in reg.shell() {
        let f = |k0: f64| (k0 * k0 + m * m).sqrt() * (-2.0 * k0 * k0 / l2).exp();
        let half = q
            .integrate_to_inf(f, 0.0, 0.5 * reg.cutoff)
            .map_err(|e| NoiseError::Spectrum(e.to_string()))?
            .value;
        z += w * 2.0 * PI * (-m * m / l2).exp() * 2.0 * half;
    }
    Ok(z)
}

fn draw_modes<R: Rng>(reg: &crate::correlator::RegulatedKernel, gamma: f64, rng: &mut R) -> Result<Modes, NoiseError> {
    let lam = reg.cutoff;
    let l2 = lam * lam;
    let lo = reg.mu * reg.mu - 0.5 * reg.epsilon;
    let hi = reg.mu * reg.mu + 0.5 * reg.epsilon;
    let env_mass = |m: f64| 0.5 * l2 + m * lam * (0.5 * PI).sqrt();
    let bound = (-lo / l2).exp() * env_mass(hi.sqrt());
    let mut waves = Vec::with_capacity(FREE_FIELD_MODES);
    while waves.len() < FREE_FIELD_MODES {
        let m2 = lo + (hi - lo) * rng.gen::<f64>();
        let m = m2.sqrt();
        let k0 = if rng.gen::<f64>() * env_mass(m) < 0.5 * l2 {
            let u: f64 = 1.0 - rng.gen::<f64>();
            let r = (-0.5 * l2 * u.ln()).sqrt();
            if rng.gen::<bool>() {
                r
            } else {
                -r
            }
        } else {
            0.5 * lam * rng.sample::<f64, _>(StandardNormal)
        };
        let kmag = (k0 * k0 + m2).sqrt();
        let accept = kmag / (k0.abs() + m) * (-m2 / l2).exp() * env_mass(m) / bound;
        if rng.gen::<f64>() >= accept {
            continue;
        }
        let c: f64 = 2.0 * rng.gen::<f64>() - 1.0;
        let phi = 2.0 * PI * rng.gen::<f64>();
        let s = (1.0 - c * c).max(0.0).sqrt();
        let k = [k0, kmag * s * phi.cos(), kmag * s * phi.sin(), kmag * c];
        waves.push((k, 2.0 * PI * rng.gen::<f64>()));
    }
    let z = spectral_mass(reg)?;
    let amplitude = (gamma * z / (FREE_FIELD_MODES as f64 * (2.0 * PI).powi(4))).sqrt();
    Ok(Modes { amplitude, waves })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_mass_matches_kernel_at_origin() {
        let reg = crate::correlator::RegulatedKernel::new(1.0, 1e-3, 4.0).unwrap();
        let z = spectral_mass(&reg).unwrap();
        let g0 = reg.value(0.0, 0.0).unwrap();
        assert!((z / (2.0 * PI).powi(4) / g0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn log_sum_exp_handles_empty_branches() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, 0.0]), 0.0);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }
}
