use super::CslError;
use crate::noise::{SpatialGrid, SpectralDensity};
use crate::params::ModelParams;
use std::collections::BTreeMap;

/// Applies the separable kernel Π_d e^{−Δx_d²/4a²} to a field on the grid.
fn gaussian_apply(grid: &SpatialGrid, a: f64, x: &[f64]) -> Vec<f64> {
    let mut cur = x.to_vec();
    let strides = [1, grid.counts[0], grid.counts[0] * grid.counts[1]];
    for d in 0..3 {
        let n = grid.counts[d];
        if n == 1 {
            continue;
        }
        let weights: Vec<f64> = (0..n)
            .map(|k| {
                let r = k as f64 * grid.spacing;
                (-r * r / (4.0 * a * a)).exp()
            })
            .collect();
        let mut next = vec![0.0; cur.len()];
        for (i, out) in next.iter_mut().enumerate() {
            let pos = (i / strides[d]) % n;
            let base = i - pos * strides[d];
            *out = (0..n)
                .map(|j| weights[pos.abs_diff(j)] * cur[base + j * strides[d]])
                .sum();
        }
        cur = next;
    }
    cur
}

/// Exponent of ⟨nᵢ|ρ(T)|nⱼ⟩/cᵢcⱼ*: −(λ/2)·∫∫ΔG Δ with Δ = nᵢ − nⱼ and the
/// double integral taken over the duration T.
///
/// For kernels δ-correlated in time this is −(λ/2)·T·dV²·ΔᵀSΔ. For the
/// colored tachyonic kernel each pair of sites carries the time factor
/// ∫₀^T∫₀^T G(r, t−t′) dt dt′ instead of T.
pub fn offdiag_decay_exponent(
    n_i: &[f64],
    n_j: &[f64],
    grid: &SpatialGrid,
    params: &ModelParams,
    spectrum: &SpectralDensity,
    duration: f64,
) -> Result<f64, CslError> {
    if n_i.len() != grid.sites() || n_j.len() != grid.sites() {
        return Err(CslError::Config("densities do not match the grid".into()));
    }
    if !(duration >= 0.0) {
        return Err(CslError::Config(format!("duration must be non-negative, got {duration}")));
    }
    spectrum.validate()?;
    let delta: Vec<f64> = n_i.iter().zip(n_j).map(|(a, b)| a - b).collect();
    let dv = grid.cell_volume();
    let support: Vec<usize> = (0..delta.len()).filter(|&k| delta[k] != 0.0).collect();
    let half_lambda = 0.5 * params.lambda;
    let form = match *spectrum {
        SpectralDensity::White { strength } => strength * dv * delta.iter().map(|d| d * d).sum::<f64>(),
        SpectralDensity::GaussianSpatial { a } => {
            let sd = gaussian_apply(grid, a, &delta);
            dv * dv * delta.iter().zip(&sd).map(|(x, y)| x * y).sum::<f64>()
        }
        SpectralDensity::TachyonicNonrel { .. } => {
            let mut s = 0.0;
            for &p in &support {
                for &q in &support {
                    s += delta[p] * delta[q] * spectrum.spatial_kernel(grid.distance(p, q)).unwrap();
                }
            }
            dv * dv * s
        }
        SpectralDensity::Tachyonic { .. } => {
            let reg = spectrum.regulated().expect("validated");
            let mut cache: BTreeMap<u64, f64> = BTreeMap::new();
            let mut s = 0.0;
            for &p in &support {
                for &q in &support {
                    let r = grid.distance(p, q);
                    let f = match cache.get(&r.to_bits()) {
                        Some(v) => *v,
                        None => {
                            let v = reg.time_factor(r, duration)?;
                            cache.insert(r.to_bits(), v);
                            v
                        }
                    };
                    s += delta[p] * delta[q] * f;
                }
            }
            return Ok(-half_lambda * dv * dv * s);
        }
    };
    Ok(-half_lambda * duration * form)
}

/// Mean energy gained by n free particles over T: (3/4)nλTμ²/M.
pub fn csl_energy_rate(n_particles: u64, params: &ModelParams, duration: f64) -> f64 {
    0.75 * n_particles as f64 * params.lambda * duration * params.mu * params.mu / params.mass
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassRatioFactor {
    pub value: f64,
    /// False when the first-order term reaches 1.
    pub first_order_valid: bool,
}

/// First-order survival factor 1 − λT(Mᵢ/M_N)² of an off-diagonal element
/// under mass-proportional coupling.
pub fn csl_offdiag_massratio(params: &ModelParams, duration: f64) -> MassRatioFactor {
    let term = params.lambda * duration * params.mass_ratio * params.mass_ratio;
    MassRatioFactor {
        value: 1.0 - term,
        first_order_valid: term < 1.0,
    }
}
