use super::NoiseError;

/// Regular spatial lattice in one or three dimensions. Site `i` has
/// coordinates `origin + spacing·(ix, iy, iz)` with `i = ix + nx·(iy + ny·iz)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub dim: usize,
    pub counts: [usize; 3],
    pub spacing: f64,
    pub origin: [f64; 3],
}

impl SpatialGrid {
    pub fn line(n: usize, spacing: f64) -> Result<Self, NoiseError> {
        Self::build(1, [n, 1, 1], spacing)
    }

    pub fn cube(counts: [usize; 3], spacing: f64) -> Result<Self, NoiseError> {
        Self::build(3, counts, spacing)
    }

    fn build(dim: usize, counts: [usize; 3], spacing: f64) -> Result<Self, NoiseError> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(NoiseError::Grid(format!("spacing must be positive, got {spacing}")));
        }
        if counts.iter().any(|&n| n == 0) {
            return Err(NoiseError::Grid("axis counts must be at least 1".into()));
        }
        Ok(SpatialGrid {
            dim,
            counts,
            spacing,
            origin: [0.0; 3],
        })
    }

    pub fn with_origin(mut self, origin: [f64; 3]) -> Self {
        self.origin = origin;
        self
    }

    pub fn sites(&self) -> usize {
        self.counts.iter().product()
    }

    /// Volume element h^d.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.counts[0] * (iy + self.counts[1] * iz)
    }

    pub fn axis_indices(&self, i: usize) -> [usize; 3] {
        let ix = i % self.counts[0];
        let rest = i / self.counts[0];
        [ix, rest % self.counts[1], rest / self.counts[1]]
    }

    pub fn position(&self, i: usize) -> [f64; 3] {
        let idx = self.axis_indices(i);
        let mut p = self.origin;
        for d in 0..3 {
            p[d] += self.spacing * idx[d] as f64;
        }
        p
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.position(i), self.position(j));
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    /// Nearest site to a point.
    pub fn nearest(&self, p: [f64; 3]) -> usize {
        let mut idx = [0usize; 3];
        for d in 0..3 {
            let x = ((p[d] - self.origin[d]) / self.spacing).round();
            idx[d] = (x.max(0.0) as usize).min(self.counts[d] - 1);
        }
        self.index(idx[0], idx[1], idx[2])
    }
}

/// Spatial lattice times `steps` equal time cells covering [t0, t1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimeGrid {
    pub space: SpatialGrid,
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

impl SpacetimeGrid {
    pub fn new(space: SpatialGrid, t0: f64, t1: f64, steps: usize) -> Result<Self, NoiseError> {
        if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(NoiseError::Grid(format!("time interval [{t0}, {t1}] is empty")));
        }
        if steps == 0 {
            return Err(NoiseError::Grid("at least one time step is required".into()));
        }
        Ok(SpacetimeGrid { space, t0, t1, steps })
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    pub fn duration(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn site_count(&self) -> usize {
        self.steps * self.space.sites()
    }

    /// End time of cell `k`.
    pub fn time_edge(&self, k: usize) -> f64 {
        self.t0 + self.dt() * k as f64
    }

    pub fn time_centre(&self, k: usize) -> f64 {
        self.t0 + self.dt() * (k as f64 + 0.5)
    }
}
