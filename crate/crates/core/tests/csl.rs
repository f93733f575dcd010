use collapse_lab::csl::{
    coherence_estimate, csl_energy_rate, csl_offdiag_massratio, evolve_trajectory, offdiag_decay_exponent,
    run_ensemble, time_ordering_identity_residual, time_ordering_residual, CslError, EnsembleConfig, MatrixPath,
    SuperpositionState,
};
use collapse_lab::exec::Execution;
use collapse_lab::noise::{NoiseRealization, SpacetimeGrid, SpatialGrid, SpectralDensity};
use collapse_lab::params::{toy_params, ModelParams};
use collapse_lab::quad::Quad;
use nalgebra::DMatrix;
use num_complex::Complex64;

fn params(lambda: f64) -> ModelParams {
    toy_params(10.0).unwrap().with_lambda(lambda).unwrap()
}

fn clumps(probs: &[f64], separation: f64, particles: f64) -> SuperpositionState {
    let k = probs.len();
    let space = SpatialGrid::line(k, separation).unwrap();
    let sites: Vec<usize> = (0..k).collect();
    SuperpositionState::point_clumps(space, probs, &sites, particles).unwrap()
}

fn fixed_noise(grid: SpacetimeGrid, site_values: &[f64]) -> NoiseRealization {
    let mut values = Vec::new();
    for _ in 0..grid.steps {
        values.extend_from_slice(site_values);
    }
    NoiseRealization {
        grid,
        values,
        seed: 0,
        spectrum_tag: "fixed".into(),
    }
}

fn brute_force_form(grid: &SpatialGrid, delta: &[f64], kernel: impl Fn(f64) -> f64) -> f64 {
    let dv = grid.cell_volume();
    let mut s = 0.0;
    for p in 0..delta.len() {
        for q in 0..delta.len() {
            s += delta[p] * delta[q] * kernel(grid.distance(p, q));
        }
    }
    dv * dv * s
}

#[test]
fn mean_noise_leaves_branch_one_untouched() {
    let p = params(0.8);
    let state = clumps(&[0.5, 0.5], 3.0, 2.0);
    let grid = SpacetimeGrid::new(state.grid, 0.0, 2.0, 5).unwrap();
    let spec = SpectralDensity::GaussianSpatial { a: 1.0 };
    let n1: Vec<f64> = state.branches[0].density.iter().map(|n| 2.0 * p.lambda * n).collect();
    let rec = evolve_trajectory(&state, &fixed_noise(grid, &n1), &p, &spec).unwrap();
    let ln_half = 0.5f64.ln();
    let delta: Vec<f64> = state.branches[0].density.iter().zip(&state.branches[1].density).map(|(a, b)| a - b).collect();
    let form = brute_force_form(&state.grid, &delta, |r| (-r * r / 4.0).exp());
    for (k, t) in rec.times.iter().enumerate() {
        assert!((rec.log_norm_sq[k][0] - ln_half).abs() < 1e-14);
        // |a_j|² carries twice the amplitude exponent −λ t ∫∫ΔGΔ
        let want = ln_half - 2.0 * p.lambda * t * form;
        assert!((rec.log_norm_sq[k][1] - want).abs() < 1e-12 * want.abs());
        let s: f64 = rec.normalized[k].iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
    assert_eq!(rec.times.len(), 6);
    assert!(rec.to_csv().starts_with("t,a1_sq,a2_sq,p1,p2\n"));
}

#[test]
fn identical_branches_never_change() {
    let p = params(1.0);
    let space = SpatialGrid::line(2, 1.0).unwrap();
    let n = vec![1.0, 0.5];
    let state = SuperpositionState::from_probabilities(space, &[0.3, 0.7], vec![n.clone(), n]).unwrap();
    let grid = SpacetimeGrid::new(space, 0.0, 3.0, 6).unwrap();
    let spec = SpectralDensity::GaussianSpatial { a: 1.0 };
    let w = fixed_noise(grid, &[0.4, -1.1]);
    let rec = evolve_trajectory(&state, &w, &p, &spec).unwrap();
    for row in &rec.normalized {
        assert!((row[0] - 0.3).abs() < 1e-12 && (row[1] - 0.7).abs() < 1e-12);
    }
}

/// 2T∫₀^T G(τ)dτ − 2∫₀^T τG(τ)dτ by quadrature of the pointwise kernel.
fn fejer_time_factor(spec: &SpectralDensity, r: f64, duration: f64) -> f64 {
    let reg = spec.regulated().unwrap();
    let q = Quad::new(1e-14, 1e-10);
    let g = |tau: f64| (duration - tau) * reg.value(tau, r).unwrap();
    let pts: Vec<f64> = (0..=16).map(|i| duration * i as f64 / 16.0).collect();
    2.0 * q.integrate_points(g, &pts).unwrap().value
}

#[test]
fn colored_exponent_matches_time_quadrature() {
    let p = params(0.5);
    let state = clumps(&[0.5, 0.5], 2.0, 1.0);
    let spec = SpectralDensity::Tachyonic {
        mu: 1.0,
        epsilon: 1e-3,
        cutoff: 3.0,
    };
    let duration = 3.0;
    let grid = SpacetimeGrid::new(state.grid, 0.0, duration, 6).unwrap();
    let n1: Vec<f64> = state.branches[0].density.iter().map(|n| 2.0 * p.lambda * n).collect();
    let rec = evolve_trajectory(&state, &fixed_noise(grid, &n1), &p, &spec).unwrap();
    let f0 = fejer_time_factor(&spec, 0.0, duration);
    let f2 = fejer_time_factor(&spec, 2.0, duration);
    // Δ = (1, −1) per unit volume
    let amplitude_exponent = -p.lambda * (2.0 * f0 - 2.0 * f2);
    let got = 0.5 * (rec.log_norm_sq[6][1] - 0.5f64.ln());
    assert!((got / amplitude_exponent - 1.0).abs() < 1e-7, "{got} vs {amplitude_exponent}");
    let ex = offdiag_decay_exponent(
        &state.branches[0].density,
        &state.branches[1].density,
        &state.grid,
        &p,
        &spec,
        duration,
    )
    .unwrap();
    assert!((ex / (0.5 * amplitude_exponent) - 1.0).abs() < 1e-7);
}

#[test]
fn colored_exponent_becomes_linear_in_time() {
    let p = params(1.0);
    let state = clumps(&[0.5, 0.5], 2.0, 1.0);
    let spec = SpectralDensity::tachyonic(1.0);
    let e = |t: f64| {
        offdiag_decay_exponent(&state.branches[0].density, &state.branches[1].density, &state.grid, &p, &spec, t)
            .unwrap()
    };
    let ratio = |t: f64| {
        let xs: Vec<f64> = (0..=6).map(|i| t * (0.5 + i as f64 / 12.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| e(x)).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let slope = sxy / sxx;
        let resid = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - my - slope * (x - mx)).abs())
            .fold(0.0, f64::max);
        resid / slope.abs()
    };
    // the curvature term dies off with the timelike decay e^{−μT/2}
    let r: Vec<f64> = [4.0, 8.0, 16.0, 32.0].iter().map(|&t| ratio(t)).collect();
    assert!(r.windows(2).all(|w| w[1] < 0.2 * w[0]), "{r:?}");
    assert!(r[3] < 1e-6, "{r:?}");
}

#[test]
fn offdiag_exponent_examples() {
    let p = params(1.0);
    let state = clumps(&[0.5, 0.5], 100.0, 2.0);
    let spec = SpectralDensity::GaussianSpatial { a: 1.0 };
    let d = |st: &SuperpositionState, i: usize, j: usize, t: f64| {
        offdiag_decay_exponent(&st.branches[i].density, &st.branches[j].density, &st.grid, &p, &spec, t).unwrap()
    };
    assert_eq!(d(&state, 0, 0, 0.5), 0.0);
    let e = d(&state, 0, 1, 0.5);
    assert!((e + 2.0).abs() < 1e-12);
    assert!((e.exp() / 0.1353 - 1.0).abs() < 0.01);
}

#[test]
fn offdiag_exponent_matches_lattice_double_sum() {
    let p = params(0.9);
    let grid = SpatialGrid::cube([9, 8, 7], 0.45).unwrap();
    let field = |c: [f64; 3], s: f64| -> Vec<f64> {
        (0..grid.sites())
            .map(|i| {
                let x = grid.position(i);
                let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
                (-r2 / (2.0 * s * s)).exp() * (1.0 + 0.3 * x[0].sin())
            })
            .collect()
    };
    let ni = field([1.0, 1.2, 1.1], 0.6);
    let nj = field([2.4, 1.8, 1.6], 0.8);
    let delta: Vec<f64> = ni.iter().zip(&nj).map(|(a, b)| a - b).collect();
    let t = 1.7;
    let a = 1.1;
    let got = offdiag_decay_exponent(&ni, &nj, &grid, &p, &SpectralDensity::GaussianSpatial { a }, t).unwrap();
    let want = -0.5 * p.lambda * t * brute_force_form(&grid, &delta, |r| (-r * r / (4.0 * a * a)).exp());
    assert!((got / want - 1.0).abs() < 1e-8, "{got} vs {want}");
    let nonrel = offdiag_decay_exponent(&ni, &nj, &grid, &p, &SpectralDensity::TachyonicNonrel { mu: 1.0 }, t).unwrap();
    let want = -0.5 * p.lambda * t * brute_force_form(&grid, &delta, |r| collapse_lab::correlator::g_nonrel_limit(r, 1.0));
    assert!((nonrel / want - 1.0).abs() < 1e-8);
}

#[test]
fn gaussian_blobs_approach_continuum_overlap() {
    // ∫∫ n₁ e^{−r²/4a²} n₂ for unit Gaussian blobs of width σ at distance d
    // is (a²/(σ²+a²))^{3/2} e^{−d²/4(σ²+a²)}.
    let grid = SpatialGrid::cube([28, 20, 20], 0.25).unwrap();
    let (s, a) = (0.6f64, 1.0f64);
    let blob = |c: [f64; 3]| -> Vec<f64> {
        let norm = (2.0 * std::f64::consts::PI * s * s).powf(-1.5);
        (0..grid.sites())
            .map(|i| {
                let x = grid.position(i);
                let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
                norm * (-r2 / (2.0 * s * s)).exp()
            })
            .collect()
    };
    let n1 = blob([2.2, 2.4, 2.4]);
    let n2 = blob([4.7, 2.4, 2.4]);
    let zero = vec![0.0; grid.sites()];
    let p = params(1.0);
    let spec = SpectralDensity::GaussianSpatial { a };
    let self1 = -2.0 * offdiag_decay_exponent(&n1, &zero, &grid, &p, &spec, 1.0).unwrap();
    let cross = {
        let both: Vec<f64> = n1.iter().zip(&n2).map(|(x, y)| x + y).collect();
        let s12 = -2.0 * offdiag_decay_exponent(&both, &zero, &grid, &p, &spec, 1.0).unwrap();
        let s2 = -2.0 * offdiag_decay_exponent(&n2, &zero, &grid, &p, &spec, 1.0).unwrap();
        0.5 * (s12 - self1 - s2)
    };
    let c = (a * a / (s * s + a * a)).powf(1.5);
    assert!((self1 / c - 1.0).abs() < 1e-3, "{self1} vs {c}");
    let want = c * (-(2.5f64).powi(2) / (4.0 * (s * s + a * a))).exp();
    assert!((cross / want - 1.0).abs() < 1e-3, "{cross} vs {want}");
}

#[test]
fn ensemble_statistics() {
    let p = params(1.0);
    let spec = SpectralDensity::GaussianSpatial { a: 1.0 };
    let state = clumps(&[0.3, 0.7], 100.0, 1.0);
    let grid = SpacetimeGrid::new(state.grid, 0.0, 30.0, 10).unwrap();
    let cfg = EnsembleConfig::new(3000, 17);
    let run = run_ensemble(&state, &p, &spec, &grid, &cfg).unwrap();
    let stats = run.collapse_stats(3.0);
    assert!(stats.covers(&[0.3, 0.7]), "{:?}", stats.frequencies);
    assert!(stats.warning.is_none());
    assert!(run.martingale().passes(3.0));
    let seq = run_ensemble(&state, &p, &spec, &grid, &cfg.with_exec(Execution::Sequential)).unwrap();
    assert_eq!(run, seq);
    assert!(stats.to_csv().starts_with("branch,frequency,ci_low,ci_high\n"));

    let certain = clumps(&[1.0, 0.0], 100.0, 1.0);
    let s = run_ensemble(&certain, &p, &spec, &grid, &EnsembleConfig::new(200, 1)).unwrap().collapse_stats(3.0);
    assert_eq!(s.frequencies, vec![1.0, 0.0]);

    let four = clumps(&[0.25; 4], 100.0, 1.0);
    let grid4 = SpacetimeGrid::new(four.grid, 0.0, 30.0, 4).unwrap();
    let s = run_ensemble(&four, &p, &spec, &grid4, &EnsembleConfig::new(4000, 2)).unwrap().collapse_stats(3.0);
    assert!(s.covers(&[0.25; 4]), "{:?}", s.frequencies);
}

#[test]
fn short_runs_warn_about_undecided_trajectories() {
    let p = params(1.0);
    let spec = SpectralDensity::GaussianSpatial { a: 1.0 };
    let state = clumps(&[0.5, 0.5], 100.0, 1.0);
    let grid = SpacetimeGrid::new(state.grid, 0.0, 0.2, 2).unwrap();
    let s = run_ensemble(&state, &p, &spec, &grid, &EnsembleConfig::new(500, 3)).unwrap().collapse_stats(3.0);
    assert!(s.undecided_fraction > 0.1 && s.warning.is_some());
    assert!(run_ensemble(&state, &p, &spec, &grid, &EnsembleConfig::new(50, 3)).is_err());
    assert!(run_ensemble(&state, &p, &spec, &grid, &EnsembleConfig::new(500, 3).with_threshold(0.4)).is_err());
}

#[test]
fn coherence_decays_as_predicted() {
    let spec = SpectralDensity::GaussianSpatial { a: 1.0 };
    let state = clumps(&[0.5, 0.5], 100.0, 1.0);
    for target in [0.5, 1.0, 2.0] {
        let p = params(1.0);
        let grid = SpacetimeGrid::new(state.grid, 0.0, target, 1).unwrap();
        let est = coherence_estimate(&state, &p, &spec, &grid, (0, 1), &EnsembleConfig::new(40_000, 8)).unwrap();
        assert!((est.exponent + target).abs() < 1e-12);
        assert!(est.rel_err() < 0.05, "{target}: {} vs {}", est.mean, est.predicted);
    }
    let nonrel = SpectralDensity::TachyonicNonrel { mu: 1.0 };
    let near = clumps(&[0.5, 0.5], 3.0, 4.0);
    let grid = SpacetimeGrid::new(near.grid, 0.0, 20.0, 1).unwrap();
    let est = coherence_estimate(&near, &params(1.0), &nonrel, &grid, (0, 1), &EnsembleConfig::new(20_000, 4)).unwrap();
    assert!(est.predicted.re < 0.5 * 0.5);
    assert!((est.mean - est.predicted).norm() < 0.05 * est.predicted.norm() + 3.0 * est.std_error);
}

#[test]
fn energy_and_mass_ratio_formulas() {
    let p = toy_params(10.0).unwrap();
    assert_eq!(csl_energy_rate(0, &p, 1.0), 0.0);
    assert!((csl_energy_rate(1, &p, 1.0) - 0.075).abs() < 1e-15);
    let heavy = p.with_mass(20.0).unwrap();
    assert!((csl_energy_rate(1, &heavy, 1.0) - 0.0375).abs() < 1e-15);
    let m = |ratio: f64, lt: f64| csl_offdiag_massratio(&p.with_mass_ratio(ratio).unwrap(), lt);
    assert_eq!(m(0.0, 0.1).value, 1.0);
    assert!((m(1.0, 0.1).value - 0.9).abs() < 1e-15);
    assert!((m(2.0, 0.1).value - 0.6).abs() < 1e-15);
    assert!(!m(2.0, 0.5).first_order_valid);
}

#[test]
fn time_ordering_identity() {
    for dim in [2, 4] {
        let c = time_ordering_residual(&MatrixPath::commuting(dim, 3), 3).unwrap();
        assert!(c < 1e-13, "{c}");
    }
    assert_eq!(time_ordering_residual(&MatrixPath::Zero { dim: 3 }, 2).unwrap(), 0.0);
    for dim in [2, 6] {
        let r: Vec<f64> = [8, 16, 32].iter().map(|&n| time_ordering_identity_residual(dim, n, 5).unwrap()).collect();
        for w in r.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 4.0).abs() < 0.3, "dim {dim}: {r:?}");
        }
    }
    let big = DMatrix::from_fn(3, 3, |i, j| Complex64::new(0.0, 8.0 * (i + j) as f64));
    let path = MatrixPath::Random { a1: big.clone(), a2: big };
    assert!(matches!(time_ordering_residual(&path, 1), Err(CslError::TooFewSteps { .. })));
    assert!(time_ordering_identity_residual(7, 4, 1).is_err());
}
