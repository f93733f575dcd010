use crate::noise::SpatialGrid;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StateError {
    #[error("state is not normalized: sum |c|^2 = {0}")]
    NotNormalized(f64),
    #[error("branch {branch}: {message}")]
    Density { branch: usize, message: String },
    #[error("a superposition needs at least one branch")]
    Empty,
}

/// One term cᵢ|nᵢ⟩ of the superposition: an amplitude and the particle
/// density eigenvalue nᵢ(x) on the spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub amplitude: Complex64,
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionState {
    pub grid: SpatialGrid,
    pub branches: Vec<Branch>,
}

pub const NORM_TOLERANCE: f64 = 1e-10;

impl SuperpositionState {
    pub fn new(grid: SpatialGrid, branches: Vec<Branch>) -> Result<Self, StateError> {
        if branches.is_empty() {
            return Err(StateError::Empty);
        }
        for (i, b) in branches.iter().enumerate() {
            if b.density.len() != grid.sites() {
                return Err(StateError::Density {
                    branch: i,
                    message: format!("{} values for {} sites", b.density.len(), grid.sites()),
                });
            }
            if b.density.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(StateError::Density {
                    branch: i,
                    message: "density must be finite and non-negative".into(),
                });
            }
        }
        let s = SuperpositionState { grid, branches };
        let norm = s.norm_sq();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(StateError::NotNormalized(norm));
        }
        Ok(s)
    }

    /// Real amplitudes √pᵢ over the given densities.
    pub fn from_probabilities(grid: SpatialGrid, probs: &[f64], densities: Vec<Vec<f64>>) -> Result<Self, StateError> {
        let branches = probs
            .iter()
            .zip(densities)
            .map(|(p, density)| Branch {
                amplitude: Complex64::new(p.max(0.0).sqrt(), 0.0),
                density,
            })
            .collect();
        Self::new(grid, branches)
    }

    /// Branch i holds a point clump of `particles` at `sites[i]`
    /// (density particles/dV on that one site).
    pub fn point_clumps(grid: SpatialGrid, probs: &[f64], sites: &[usize], particles: f64) -> Result<Self, StateError> {
        let dv = grid.cell_volume();
        let densities = sites
            .iter()
            .map(|&s| {
                let mut n = vec![0.0; grid.sites()];
                n[s] = particles / dv;
                n
            })
            .collect();
        Self::from_probabilities(grid, probs, densities)
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.branches.iter().map(|b| b.amplitude.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.amplitude.norm_sqr()).collect()
    }
}
