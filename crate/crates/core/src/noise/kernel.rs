use super::{NoiseError, SpacetimeGrid, SpatialGrid, SpectralDensity};
use crate::exec::{map_indexed, Execution};
use nalgebra::DMatrix;
use std::collections::BTreeMap;

/// Discretized kernel K of the quadratic form ∫∫ f(x) G(x−x′) f(x′) on a
/// spacetime lattice, acting on cell values stored time-major
/// (`index = k·sites + site`).
///
/// Spectra that are δ-correlated in time give a block-diagonal K with one
/// repeated spatial block dt·dV²·S; the colored tachyonic spectrum gives a
/// dense matrix of cell-integrated kernels.
#[derive(Debug, Clone)]
pub struct LatticeKernel {
    pub grid: SpacetimeGrid,
    form: Form,
}

#[derive(Debug, Clone)]
enum Form {
    Blocked(DMatrix<f64>),
    Full(DMatrix<f64>),
}

/// Lower Cholesky factor of K.
#[derive(Debug, Clone)]
pub(crate) enum Factor {
    Blocked(DMatrix<f64>),
    Full(DMatrix<f64>),
}

/// dV²·S over the spatial sites (no time factor).
pub(crate) fn spatial_block(spectrum: &SpectralDensity, space: &SpatialGrid) -> Result<DMatrix<f64>, NoiseError> {
    spectrum.validate()?;
    let n = space.sites();
    let dv = space.cell_volume();
    match *spectrum {
        SpectralDensity::White { strength } => Ok(DMatrix::from_diagonal_element(n, n, strength * dv)),
        SpectralDensity::Tachyonic { .. } => Err(NoiseError::Spectrum(
            "colored spectrum has no equal-time block".into(),
        )),
        _ => Ok(DMatrix::from_fn(n, n, |a, b| {
            dv * dv * spectrum.spatial_kernel(space.distance(a, b)).unwrap_or(0.0)
        })),
    }
}

fn offset_key(space: &SpatialGrid, a: usize, b: usize) -> usize {
    let (p, q) = (space.axis_indices(a), space.axis_indices(b));
    (0..3).map(|d| p[d].abs_diff(q[d]).pow(2)).sum()
}

impl LatticeKernel {
    pub fn build(spectrum: &SpectralDensity, grid: &SpacetimeGrid) -> Result<Self, NoiseError> {
        Self::build_with(spectrum, grid, Execution::default())
    }

    pub fn build_with(spectrum: &SpectralDensity, grid: &SpacetimeGrid, exec: Execution) -> Result<Self, NoiseError> {
        spectrum.validate()?;
        let space = &grid.space;
        let dt = grid.dt();
        let Some(reg) = spectrum.regulated() else {
            let block = spatial_block(spectrum, space)? * dt;
            return Ok(LatticeKernel {
                grid: *grid,
                form: Form::Blocked(block),
            });
        };
        let ns = space.sites();
        let mut keys = BTreeMap::new();
        for a in 0..ns {
            for b in a..ns {
                keys.entry(offset_key(space, a, b)).or_insert(space.distance(a, b));
            }
        }
        let keyed: Vec<(usize, f64)> = keys.into_iter().collect();
        let jobs = keyed.len() * grid.steps;
        let values = map_indexed(exec, jobs, |j| {
            let (_, r) = keyed[j / grid.steps];
            let lag = (j % grid.steps) as f64 * dt;
            reg.cell_pair(r, lag, dt)
        });
        let mut table = BTreeMap::new();
        for (j, v) in values.into_iter().enumerate() {
            table.insert((keyed[j / grid.steps].0, j % grid.steps), v?);
        }
        let dv2 = space.cell_volume().powi(2);
        let d = grid.site_count();
        let full = DMatrix::from_fn(d, d, |p, q| {
            let (k, a) = (p / ns, p % ns);
            let (l, b) = (q / ns, q % ns);
            dv2 * table[&(offset_key(space, a, b), k.abs_diff(l))]
        });
        Ok(LatticeKernel {
            grid: *grid,
            form: Form::Full(full),
        })
    }

    pub fn dim(&self) -> usize {
        self.grid.site_count()
    }

    pub fn is_blocked(&self) -> bool {
        matches!(self.form, Form::Blocked(_))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.form {
            Form::Full(m) => m.clone(),
            Form::Blocked(b) => {
                let ns = b.nrows();
                let mut m = DMatrix::zeros(self.dim(), self.dim());
                for k in 0..self.grid.steps {
                    m.view_mut((k * ns, k * ns), (ns, ns)).copy_from(b);
                }
                m
            }
        }
    }

    /// xᵀKx.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        *self.prefix_quad_forms(x).last().unwrap()
    }

    /// Quadratic form restricted to the first k time cells, for k = 0..=steps.
    pub fn prefix_quad_forms(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim());
        let ns = self.grid.space.sites();
        let mut out = Vec::with_capacity(self.grid.steps + 1);
        out.push(0.0);
        let mut acc = 0.0;
        for k in 0..self.grid.steps {
            let xk = &x[k * ns..(k + 1) * ns];
            match &self.form {
                Form::Blocked(b) => {
                    for a in 0..ns {
                        let row: f64 = (0..ns).map(|c| b[(a, c)] * xk[c]).sum();
                        acc += xk[a] * row;
                    }
                }
                Form::Full(m) => {
                    let start = k * ns;
                    for a in 0..ns {
                        let p = start + a;
                        let past: f64 = (0..start).map(|q| m[(p, q)] * x[q]).sum();
                        let same: f64 = (0..ns).map(|c| m[(p, start + c)] * xk[c]).sum();
                        acc += xk[a] * (2.0 * past + same);
                    }
                }
            }
            out.push(acc);
        }
        out
    }

    /// Eigenvalues of K, ascending.
    pub fn spectral_weights(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = match &self.form {
            Form::Blocked(b) => {
                let e = b.clone().symmetric_eigenvalues();
                let mut all = Vec::with_capacity(self.dim());
                for _ in 0..self.grid.steps {
                    all.extend(e.iter().cloned());
                }
                all
            }
            Form::Full(m) => m.clone().symmetric_eigenvalues().iter().cloned().collect(),
        };
        ev.sort_by(f64::total_cmp);
        ev
    }

    fn condition(m: &DMatrix<f64>) -> f64 {
        let e = m.clone().symmetric_eigenvalues();
        let max = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = e.iter().cloned().fold(f64::INFINITY, f64::min);
        if min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }
    }

    pub(crate) fn factor(&self) -> Result<Factor, NoiseError> {
        let chol = |m: &DMatrix<f64>| {
            m.clone()
                .cholesky()
                .map(|c| c.l())
                .ok_or_else(|| NoiseError::Singular {
                    condition: Self::condition(m),
                })
        };
        Ok(match &self.form {
            Form::Blocked(b) => Factor::Blocked(chol(b)?),
            Form::Full(m) => Factor::Full(chol(m)?),
        })
    }

    /// log det K.
    pub fn log_det(&self) -> Result<f64, NoiseError> {
        let diag_sum = |l: &DMatrix<f64>| 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(match self.factor()? {
            Factor::Blocked(l) => self.grid.steps as f64 * diag_sum(&l),
            Factor::Full(l) => diag_sum(&l),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_forms_match_dense_products() {
        let space = SpatialGrid::line(3, 0.7).unwrap();
        let grid = SpacetimeGrid::new(space, 0.0, 2.0, 4).unwrap();
        let x: Vec<f64> = (0..12).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect();
        for spec in [
            SpectralDensity::GaussianSpatial { a: 1.0 },
            SpectralDensity::Tachyonic {
                mu: 1.0,
                epsilon: 1e-3,
                cutoff: 3.0,
            },
        ] {
            let k = LatticeKernel::build(&spec, &grid).unwrap();
            let dense = k.to_dense();
            let prefix = k.prefix_quad_forms(&x);
            for (c, q) in prefix.iter().enumerate() {
                let n = 3 * c;
                let mut want = 0.0;
                for p in 0..n {
                    for r in 0..n {
                        want += x[p] * dense[(p, r)] * x[r];
                    }
                }
                assert!((q - want).abs() < 1e-12 * want.abs().max(1e-12));
            }
        }
    }

    #[test]
    fn white_block_is_lattice_delta() {
        let space = SpatialGrid::line(2, 0.5).unwrap();
        let grid = SpacetimeGrid::new(space, 0.0, 1.0, 2).unwrap();
        let k = LatticeKernel::build(&SpectralDensity::White { strength: 2.0 }, &grid).unwrap();
        let d = k.to_dense();
        assert!((d[(0, 0)] - 2.0 * 0.5 * 0.5).abs() < 1e-15);
        assert_eq!(d[(0, 1)], 0.0);
    }
}
