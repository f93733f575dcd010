use super::{evolve_with, offdiag_decay_exponent, CslError, SuperpositionState, TrajectoryRecord, DEFAULT_THRESHOLD};
use crate::exec::{map_blocks, Execution};
use crate::noise::{PosteriorSampler, SpacetimeGrid, SpectralDensity};
use crate::params::ModelParams;
use crate::seed::child_seed;
use crate::stats::{wilson_interval, Moments};
use num_complex::Complex64;

const BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub n_trajectories: usize,
    pub seed: u64,
    pub threshold: f64,
    pub exec: Execution,
}

impl EnsembleConfig {
    pub fn new(n_trajectories: usize, seed: u64) -> Self {
        EnsembleConfig {
            n_trajectories,
            seed,
            threshold: DEFAULT_THRESHOLD,
            exec: Execution::default(),
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    fn validate(&self) -> Result<(), CslError> {
        if self.n_trajectories < 100 {
            return Err(CslError::Config(format!("need at least 100 trajectories, got {}", self.n_trajectories)));
        }
        if !(self.threshold > 0.5 && self.threshold < 1.0) {
            return Err(CslError::Config(format!("threshold must lie in (0.5, 1), got {}", self.threshold)));
        }
        Ok(())
    }
}

/// Aggregates of a trajectory ensemble with posterior-sampled noise.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRun {
    pub times: Vec<f64>,
    pub n: u64,
    pub initial: Vec<f64>,
    /// Moments of the normalized |aᵢ(t)|², per time, per branch.
    pub moments: Vec<Vec<Moments>>,
    pub decided: Vec<u64>,
    pub undecided: u64,
    /// Branch labels drawn by the sampler (diagnostic only).
    pub drawn: Vec<u64>,
}

#[derive(Debug, Clone)]
struct Partial {
    moments: Vec<Vec<Moments>>,
    decided: Vec<u64>,
    undecided: u64,
    drawn: Vec<u64>,
}

impl Partial {
    fn new(times: usize, k: usize) -> Self {
        Partial {
            moments: vec![vec![Moments::default(); k]; times],
            decided: vec![0; k],
            undecided: 0,
            drawn: vec![0; k],
        }
    }

    fn push(&mut self, branch: usize, rec: &TrajectoryRecord, threshold: f64) {
        for (row, acc) in rec.normalized.iter().zip(self.moments.iter_mut()) {
            for (p, m) in row.iter().zip(acc.iter_mut()) {
                m.push(*p);
            }
        }
        match rec.decided(threshold) {
            Some(i) => self.decided[i] += 1,
            None => self.undecided += 1,
        }
        self.drawn[branch] += 1;
    }

    fn merge(&mut self, other: &Partial) {
        for (a, b) in self.moments.iter_mut().zip(&other.moments) {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
        for (a, b) in self.decided.iter_mut().zip(&other.decided) {
            *a += b;
        }
        for (a, b) in self.drawn.iter_mut().zip(&other.drawn) {
            *a += b;
        }
        self.undecided += other.undecided;
    }
}

fn for_each_trajectory<T, F>(
    state: &SuperpositionState,
    params: &ModelParams,
    spectrum: &SpectralDensity,
    grid: &SpacetimeGrid,
    cfg: &EnsembleConfig,
    init: T,
    visit: F,
) -> Result<Vec<T>, CslError>
where
    T: Clone + Send + Sync,
    F: Fn(&mut T, usize, &TrajectoryRecord) + Sync + Send,
{
    let sampler = PosteriorSampler::new(state, params, spectrum, grid)?;
    let blocks = map_blocks(cfg.exec, cfg.n_trajectories, BLOCK, |_, range| {
        let mut acc = init.clone();
        for idx in range {
            let (branch, w) = sampler.sample_seeded(child_seed(cfg.seed, idx as u64));
            let rec = evolve_with(&sampler.model, state, &w)?;
            visit(&mut acc, branch, &rec);
        }
        Ok::<T, CslError>(acc)
    });
    blocks.into_iter().collect()
}

/// Runs `n_trajectories` independent trajectories. Results are folded in
/// block order, so they do not depend on the execution policy.
pub fn run_ensemble(
    state: &SuperpositionState,
    params: &ModelParams,
    spectrum: &SpectralDensity,
    grid: &SpacetimeGrid,
    cfg: &EnsembleConfig,
) -> Result<EnsembleRun, CslError> {
    cfg.validate()?;
    let k = state.len();
    let threshold = cfg.threshold;
    let parts = for_each_trajectory(state, params, spectrum, grid, cfg, Partial::new(grid.steps + 1, k), |acc, b, rec| {
        acc.push(b, rec, threshold)
    })?;
    let mut total = Partial::new(grid.steps + 1, k);
    for p in &parts {
        total.merge(p);
    }
    Ok(EnsembleRun {
        times: (0..=grid.steps).map(|i| grid.time_edge(i)).collect(),
        n: cfg.n_trajectories as u64,
        initial: state.probabilities(),
        moments: total.moments,
        decided: total.decided,
        undecided: total.undecided,
        drawn: total.drawn,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseStats {
    pub n: u64,
    pub frequencies: Vec<f64>,
    /// Wilson intervals at `z` standard deviations.
    pub intervals: Vec<(f64, f64)>,
    pub z: f64,
    pub undecided_fraction: f64,
    pub warning: Option<String>,
}

impl CollapseStats {
    /// True when every target probability lies inside its interval.
    pub fn covers(&self, targets: &[f64]) -> bool {
        self.intervals.iter().zip(targets).all(|((lo, hi), p)| lo <= p && p <= hi)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("branch,frequency,ci_low,ci_high\n");
        for (i, (f, (lo, hi))) in self.frequencies.iter().zip(&self.intervals).enumerate() {
            out.push_str(&format!("{},{f},{lo},{hi}\n", i + 1));
        }
        out.push_str(&format!("undecided,{},,\n", self.undecided_fraction));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleReport {
    /// (time, branch, mean, standard error, deviation from |cᵢ(0)|²).
    pub rows: Vec<(f64, usize, f64, f64, f64)>,
    pub max_deviation: f64,
    /// Largest deviation in units of its standard error.
    pub max_sigma: f64,
}

impl MartingaleReport {
    pub fn passes(&self, sigmas: f64) -> bool {
        self.rows
            .iter()
            .all(|&(_, _, _, se, dev)| if se > 0.0 { dev <= sigmas * se } else { dev <= 1e-12 })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,branch,mean,std_error,deviation\n");
        for (t, b, m, se, d) in &self.rows {
            out.push_str(&format!("{t},{},{m},{se},{d}\n", b + 1));
        }
        out
    }
}

impl EnsembleRun {
    pub fn collapse_stats(&self, z: f64) -> CollapseStats {
        let frequencies = self.decided.iter().map(|&d| d as f64 / self.n as f64).collect();
        let intervals = self.decided.iter().map(|&d| wilson_interval(d, self.n, z)).collect();
        let undecided_fraction = self.undecided as f64 / self.n as f64;
        let warning = (undecided_fraction > 0.1).then(|| {
            format!(
                "{:.1}% of trajectories undecided; T is too short for these parameters",
                100.0 * undecided_fraction
            )
        });
        CollapseStats {
            n: self.n,
            frequencies,
            intervals,
            z,
            undecided_fraction,
            warning,
        }
    }

    pub fn martingale(&self) -> MartingaleReport {
        let mut rows = Vec::new();
        let (mut max_deviation, mut max_sigma) = (0.0f64, 0.0f64);
        for (t, acc) in self.times.iter().zip(&self.moments) {
            for (i, m) in acc.iter().enumerate() {
                let dev = (m.mean() - self.initial[i]).abs();
                let se = m.std_error();
                max_deviation = max_deviation.max(dev);
                if se > 0.0 {
                    max_sigma = max_sigma.max(dev / se);
                }
                rows.push((*t, i, m.mean(), se, dev));
            }
        }
        MartingaleReport {
            rows,
            max_deviation,
            max_sigma,
        }
    }
}

/// Collapse frequencies with Wilson intervals at 3σ.
pub fn collapse_statistics(
    state: &SuperpositionState,
    params: &ModelParams,
    spectrum: &SpectralDensity,
    grid: &SpacetimeGrid,
    cfg: &EnsembleConfig,
) -> Result<CollapseStats, CslError> {
    Ok(run_ensemble(state, params, spectrum, grid, cfg)?.collapse_stats(3.0))
}

pub fn martingale_check(
    state: &SuperpositionState,
    params: &ModelParams,
    spectrum: &SpectralDensity,
    grid: &SpacetimeGrid,
    cfg: &EnsembleConfig,
) -> Result<MartingaleReport, CslError> {
    Ok(run_ensemble(state, params, spectrum, grid, cfg)?.martingale())
}

/// Ensemble estimate of ⟨nᵢ|ρ(T)|nⱼ⟩ from aᵢaⱼ*/Σ|a|² over posterior noise,
/// with the closed-form prediction cᵢcⱼ*·e^{exponent}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceEstimate {
    pub n: u64,
    pub mean: Complex64,
    /// Standard error of the real part.
    pub std_error: f64,
    pub predicted: Complex64,
    pub exponent: f64,
}

impl CoherenceEstimate {
    pub fn rel_err(&self) -> f64 {
        (self.mean - self.predicted).norm() / self.predicted.norm()
    }
}

#[derive(Debug, Clone, Default)]
struct CoherenceAcc {
    re: Moments,
    im: Moments,
}

pub fn coherence_estimate(
    state: &SuperpositionState,
    params: &ModelParams,
    spectrum: &SpectralDensity,
    grid: &SpacetimeGrid,
    pair: (usize, usize),
    cfg: &EnsembleConfig,
) -> Result<CoherenceEstimate, CslError> {
    cfg.validate()?;
    let (i, j) = pair;
    if i >= state.len() || j >= state.len() || i == j {
        return Err(CslError::Config(format!("invalid branch pair ({i}, {j})")));
    }
    let phase = state.branches[i].amplitude * state.branches[j].amplitude.conj();
    let unit = if phase.norm() > 0.0 { phase / phase.norm() } else { Complex64::new(0.0, 0.0) };
    let parts = for_each_trajectory(state, params, spectrum, grid, cfg, CoherenceAcc::default(), |acc, _, rec| {
        let l = rec.log_norm_sq.last().unwrap();
        let m = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + l.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let z = unit * (0.5 * (l[i] + l[j]) - lse).exp();
        acc.re.push(z.re);
        acc.im.push(z.im);
    })?;
    let mut total = CoherenceAcc::default();
    for p in &parts {
        total.re.merge(&p.re);
        total.im.merge(&p.im);
    }
    let exponent = offdiag_decay_exponent(
        &state.branches[i].density,
        &state.branches[j].density,
        &state.grid,
        params,
        spectrum,
        grid.duration(),
    )?;
    Ok(CoherenceEstimate {
        n: cfg.n_trajectories as u64,
        mean: Complex64::new(total.re.mean(), total.im.mean()),
        std_error: total.re.std_error(),
        predicted: phase * exponent.exp(),
        exponent,
    })
}
