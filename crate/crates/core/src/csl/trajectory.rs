use super::{CslError, SuperpositionState};
use crate::noise::{NoiseRealization, ProbabilityModel, SpectralDensity};
use crate::params::ModelParams;
use num_complex::Complex64;
use std::fmt::Write;

/// Default normalized weight above which a trajectory counts as collapsed.
pub const DEFAULT_THRESHOLD: f64 = 0.999;

/// Squared branch amplitudes |aᵢ(t)|² at the lattice time edges.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// ln|aᵢ(t)|² per time, per branch.
    pub log_norm_sq: Vec<Vec<f64>>,
    /// |aᵢ(t)|² / Σⱼ|aⱼ(t)|² per time, per branch.
    pub normalized: Vec<Vec<f64>>,
    /// Complex amplitudes aᵢ(T) at the final time (may underflow).
    pub final_amplitudes: Vec<Complex64>,
    pub collapsed: Option<usize>,
    pub seed: u64,
}

impl TrajectoryRecord {
    pub fn raw_norm_sq(&self) -> Vec<Vec<f64>> {
        self.log_norm_sq
            .iter()
            .map(|row| row.iter().map(|v| v.exp()).collect())
            .collect()
    }

    /// Branch whose final normalized weight exceeds `threshold`, if any.
    pub fn decided(&self, threshold: f64) -> Option<usize> {
        self.normalized
            .last()
            .and_then(|row| row.iter().position(|&p| p > threshold))
    }

    /// CSV with columns t, a1_sq..ak_sq (raw), p1..pk (normalized).
    pub fn to_csv(&self) -> String {
        let k = self.normalized.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for i in 1..=k {
            let _ = write!(out, ",a{i}_sq");
        }
        for i in 1..=k {
            let _ = write!(out, ",p{i}");
        }
        out.push('\n');
        let raw = self.raw_norm_sq();
        for (n, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t}");
            for v in &raw[n] {
                let _ = write!(out, ",{v:e}");
            }
            for v in &self.normalized[n] {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

fn normalize(logs: &[f64]) -> Vec<f64> {
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Evolves the branch amplitudes through a prepared model; aᵢ(t) =
/// cᵢ·exp{−Qᵢ(t)/4λ} with Qᵢ(t) the lattice quadratic form up to t.
pub fn evolve_with(model: &ProbabilityModel, state: &SuperpositionState, w: &NoiseRealization) -> Result<TrajectoryRecord, CslError> {
    let grid = model.kernel.grid;
    if w.grid != grid {
        return Err(CslError::Config("noise grid does not match the evolution grid".into()));
    }
    let lambda = model.lambda;
    let forms: Vec<Vec<f64>> = (0..state.len()).map(|i| model.branch_prefix_forms(&w.values, i)).collect();
    let times: Vec<f64> = (0..=grid.steps).map(|k| grid.time_edge(k)).collect();
    let mut log_norm_sq = Vec::with_capacity(times.len());
    let mut normalized = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let logs: Vec<f64> = state
            .branches
            .iter()
            .zip(&forms)
            .map(|(b, q)| b.amplitude.norm_sqr().ln() - q[k] / (2.0 * lambda))
            .collect();
        normalized.push(normalize(&logs));
        log_norm_sq.push(logs);
    }
    let final_amplitudes = state
        .branches
        .iter()
        .zip(&forms)
        .map(|(b, q)| b.amplitude * (-q[grid.steps] / (4.0 * lambda)).exp())
        .collect();
    let mut rec = TrajectoryRecord {
        times,
        log_norm_sq,
        normalized,
        final_amplitudes,
        collapsed: None,
        seed: w.seed,
    };
    rec.collapsed = rec.decided(DEFAULT_THRESHOLD);
    Ok(rec)
}

pub fn evolve_trajectory(
    state: &SuperpositionState,
    w: &NoiseRealization,
    params: &ModelParams,
    spectrum: &SpectralDensity,
) -> Result<TrajectoryRecord, CslError> {
    let model = ProbabilityModel::new(state, params, spectrum, &w.grid)?;
    evolve_with(&model, state, w)
}
