use collapse_lab::csl::SuperpositionState;
use collapse_lab::noise::{
    gaussian_ft_identity_residual, gaussian_ft_sides, lattice_spectral_weights, log_probability, sample_free_field,
    LatticeKernel, NoiseRealization, PosteriorSampler, ProbabilityModel, SpacetimeGrid, SpatialGrid, SpectralDensity,
};
use collapse_lab::params::toy_params;
use collapse_lab::seed::rng_from_seed;
use collapse_lab::stats::Moments;
use collapse_lab::correlator::RegulatedKernel;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

fn three_site_state(probs: &[f64]) -> SuperpositionState {
    let space = SpatialGrid::line(3, 2.0).unwrap();
    let densities = vec![vec![0.5, 0.0, 0.0], vec![0.0, 0.2, 0.4], vec![0.1, 0.1, 0.1]];
    SuperpositionState::from_probabilities(space, probs, densities[..probs.len()].to_vec()).unwrap()
}

/// log Σᵢ pᵢ N(w; μᵢ, λK⁻¹) evaluated with a dense inverse and determinant.
fn dense_mixture(kernel: &DMatrix<f64>, lambda: f64, probs: &[f64], means: &[Vec<f64>], w: &[f64]) -> f64 {
    let cov = kernel.clone().try_inverse().unwrap() * lambda;
    let prec = cov.clone().try_inverse().unwrap();
    let det = cov.determinant();
    let d = w.len() as f64;
    let mut total = 0.0;
    for (p, m) in probs.iter().zip(means) {
        let x = DVector::from_iterator(w.len(), w.iter().zip(m).map(|(a, b)| a - b));
        let q = x.dot(&(&prec * &x));
        total += p * (-0.5 * q).exp() / ((2.0 * PI).powf(0.5 * d) * det.sqrt());
    }
    total.ln()
}

#[test]
fn single_branch_posterior_mean() {
    let params = toy_params(5.0).unwrap().with_lambda(0.7).unwrap();
    let state = three_site_state(&[1.0]);
    let grid = SpacetimeGrid::new(state.grid, 0.0, 1.0, 2).unwrap();
    let sampler = PosteriorSampler::new(&state, &params, &SpectralDensity::GaussianSpatial { a: 1.0 }, &grid).unwrap();
    let mut rng = rng_from_seed(11);
    let mut acc = vec![Moments::default(); grid.site_count()];
    for _ in 0..4000 {
        let (b, w) = sampler.sample(&mut rng);
        assert_eq!(b, 0);
        for (m, v) in acc.iter_mut().zip(&w) {
            m.push(*v);
        }
    }
    for (k, m) in acc.iter().enumerate() {
        let want = 2.0 * params.lambda * state.branches[0].density[k % 3];
        assert!((m.mean() - want).abs() < 3.0 * m.std_error(), "site {k}: {} vs {want}", m.mean());
    }
}

#[test]
fn branch_frequencies_follow_born_weights() {
    let params = toy_params(5.0).unwrap();
    let space = SpatialGrid::line(2, 3.0).unwrap();
    let grid = SpacetimeGrid::new(space, 0.0, 1.0, 1).unwrap();
    let spec = SpectralDensity::GaussianSpatial { a: 1.0 };
    for (probs, same) in [([0.5, 0.5], true), ([0.3, 0.7], false)] {
        let second = if same { vec![1.0, 0.0] } else { vec![0.0, 1.0] };
        let state = SuperpositionState::from_probabilities(space, &probs, vec![vec![1.0, 0.0], second]).unwrap();
        let sampler = PosteriorSampler::new(&state, &params, &spec, &grid).unwrap();
        let mut rng = rng_from_seed(5);
        let n = 10_000;
        let hits = (0..n).filter(|_| sampler.sample(&mut rng).0 == 0).count() as f64;
        let p = probs[0];
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits / n as f64 - p).abs() < 3.0 * sigma);
    }
}

#[test]
fn log_probability_quadratic_structure() {
    let params = toy_params(5.0).unwrap();
    let state = three_site_state(&[1.0]);
    let grid = SpacetimeGrid::new(state.grid, 0.0, 2.0, 2).unwrap();
    let spec = SpectralDensity::GaussianSpatial { a: 1.0 };
    let model = ProbabilityModel::new(&state, &params, &spec, &grid).unwrap();
    let mean = model.branch_mean(0).to_vec();
    let base = model.log_density(&mean).unwrap();
    let forms = model.branch_prefix_forms(&mean, 0);
    assert_eq!(*forms.last().unwrap(), 0.0);
    let d: Vec<f64> = (0..mean.len()).map(|i| 0.1 * (i as f64 - 2.5)).collect();
    let w1: Vec<f64> = mean.iter().zip(&d).map(|(m, x)| m + x).collect();
    let w2: Vec<f64> = mean.iter().zip(&d).map(|(m, x)| m + 2.0 * x).collect();
    let e1 = model.log_density(&w1).unwrap() - base;
    let e2 = model.log_density(&w2).unwrap() - base;
    assert!((e2 / e1 - 4.0).abs() < 1e-12);
}

#[test]
fn log_probability_matches_dense_mixture() {
    let params = toy_params(5.0).unwrap().with_lambda(0.8).unwrap();
    let state = three_site_state(&[0.25, 0.75]);
    let grid = SpacetimeGrid::new(state.grid, 0.0, 1.5, 3).unwrap();
    for spec in [
        SpectralDensity::GaussianSpatial { a: 1.0 },
        SpectralDensity::White { strength: 1.3 },
        SpectralDensity::TachyonicNonrel { mu: 1.0 },
    ] {
        let sampler = PosteriorSampler::new(&state, &params, &spec, &grid).unwrap();
        let dense = sampler.model.kernel.to_dense();
        let means = vec![sampler.model.branch_mean(0).to_vec(), sampler.model.branch_mean(1).to_vec()];
        let mut rng = rng_from_seed(3);
        let mut diffs = Vec::new();
        for _ in 0..40 {
            let (_, w) = sampler.sample(&mut rng);
            let a = sampler.model.log_density(&w).unwrap();
            let b = dense_mixture(&dense, params.lambda, &[0.25, 0.75], &means, &w);
            diffs.push(a - b);
        }
        let lo = diffs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo < 1e-8, "{}: spread {}", spec.tag(), hi - lo);
        assert!(lo.abs() < 1e-8);
    }
}

#[test]
fn probability_integrates_to_one_on_three_sites() {
    let params = toy_params(5.0).unwrap();
    let state = three_site_state(&[0.4, 0.6]);
    let grid = SpacetimeGrid::new(state.grid, 0.0, 1.0, 1).unwrap();
    let model = ProbabilityModel::new(&state, &params, &SpectralDensity::GaussianSpatial { a: 1.0 }, &grid).unwrap();
    let cov = model.kernel.to_dense().try_inverse().unwrap() * params.lambda;
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for k in 0..3 {
        let s = cov[(k, k)].sqrt();
        let (m0, m1) = (model.branch_mean(0)[k], model.branch_mean(1)[k]);
        lo[k] = m0.min(m1) - 9.0 * s;
        hi[k] = m0.max(m1) + 9.0 * s;
    }
    let n = 90;
    let h: Vec<f64> = (0..3).map(|k| (hi[k] - lo[k]) / n as f64).collect();
    let mut total = 0.0;
    for i in 0..=n {
        for j in 0..=n {
            for l in 0..=n {
                let w = [lo[0] + i as f64 * h[0], lo[1] + j as f64 * h[1], lo[2] + l as f64 * h[2]];
                total += model.log_density(&w).unwrap().exp();
            }
        }
    }
    total *= h[0] * h[1] * h[2];
    assert!((total - 1.0).abs() < 1e-4, "{total}");
}

#[test]
fn log_probability_free_function_and_grid_check() {
    let params = toy_params(5.0).unwrap();
    let state = three_site_state(&[1.0]);
    let grid = SpacetimeGrid::new(state.grid, 0.0, 1.0, 2).unwrap();
    let spec = SpectralDensity::GaussianSpatial { a: 1.0 };
    let sampler = PosteriorSampler::new(&state, &params, &spec, &grid).unwrap();
    let (_, w) = sampler.sample_seeded(9);
    let a = log_probability(&w, &state, &params, &spec).unwrap();
    assert_eq!(a, sampler.model.log_probability(&w).unwrap());
    let other = SpacetimeGrid::new(state.grid, 0.0, 2.0, 2).unwrap();
    let mut bad = w.clone();
    bad.grid = other;
    assert!(sampler.model.log_probability(&bad).is_err());
}

#[test]
fn realizations_are_deterministic_and_round_trip() {
    let params = toy_params(5.0).unwrap();
    let state = three_site_state(&[0.5, 0.5]);
    let grid = SpacetimeGrid::new(state.grid, 0.0, 1.0, 4).unwrap();
    let spec = SpectralDensity::GaussianSpatial { a: 1.0 };
    let sampler = PosteriorSampler::new(&state, &params, &spec, &grid).unwrap();
    let (b1, w1) = sampler.sample_seeded(42);
    let (b2, w2) = sampler.sample_seeded(42);
    assert_eq!(b1, b2);
    assert_eq!(w1, w2);
    let back = NoiseRealization::from_bytes(&w1.to_bytes()).unwrap();
    assert_eq!(back, w1);
    assert!(NoiseRealization::from_bytes(&w1.to_bytes()[..20]).is_err());
    let csv = w1.to_csv();
    assert!(csv.starts_with("t,x,w\n"));
    assert_eq!(csv.lines().count(), 1 + grid.site_count());
    let f1 = sample_free_field(&SpectralDensity::tachyonic(1.0), &grid, 1.0, 7).unwrap();
    let f2 = sample_free_field(&SpectralDensity::tachyonic(1.0), &grid, 1.0, 7).unwrap();
    assert_eq!(f1.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), f2.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    let cube = SpacetimeGrid::new(SpatialGrid::cube([2, 2, 2], 0.5).unwrap(), 0.0, 1.0, 1).unwrap();
    let f3 = sample_free_field(&SpectralDensity::White { strength: 1.0 }, &cube, 1.0, 1).unwrap();
    assert!(f3.to_csv().starts_with("t,x,y,z,w\n"));
    assert_eq!(NoiseRealization::from_bytes(&f3.to_bytes()).unwrap(), f3);
}

#[test]
fn white_free_field_moments() {
    let space = SpatialGrid::line(4, 0.5).unwrap();
    let grid = SpacetimeGrid::new(space, 0.0, 1.0, 5).unwrap();
    let spec = SpectralDensity::White { strength: 2.0 };
    let gamma = 0.6;
    let mut acc = Moments::default();
    let draws = 10_000;
    for s in 0..draws {
        let f = sample_free_field(&spec, &grid, gamma, s).unwrap();
        acc.push(f.values[7]);
    }
    let target = gamma / 2.0 * 2.0 / (0.5 * 0.2);
    assert!(acc.mean().abs() < 3.0 * acc.std_error());
    assert!((acc.variance() / target - 1.0).abs() < 0.05);
}

#[test]
fn gaussian_free_field_covariance() {
    let space = SpatialGrid::line(3, 0.8).unwrap();
    let grid = SpacetimeGrid::new(space, 0.0, 1.0, 2).unwrap();
    let spec = SpectralDensity::GaussianSpatial { a: 1.0 };
    let gamma = 1.0;
    let dt = 0.5;
    let (mut s00, mut s02, mut s_cross_time) = (0.0, 0.0, 0.0);
    let draws = 20_000;
    for s in 0..draws {
        let f = sample_free_field(&spec, &grid, gamma, s).unwrap();
        s00 += f.at(0, 0) * f.at(0, 0);
        s02 += f.at(0, 0) * f.at(0, 2);
        s_cross_time += f.at(0, 0) * f.at(1, 0);
    }
    let n = draws as f64;
    let want00 = gamma / (2.0 * dt);
    let want02 = want00 * (-(1.6f64).powi(2) / 4.0).exp();
    assert!((s00 / n / want00 - 1.0).abs() < 0.05);
    assert!((s02 / n / want02 - 1.0).abs() < 0.05);
    assert!((s_cross_time / n).abs() < 0.05 * want00);
}

#[test]
fn tachyonic_free_field_matches_correlator() {
    let space = SpatialGrid::line(2, 1.0).unwrap();
    let grid = SpacetimeGrid::new(space, 0.0, 1.0, 2).unwrap();
    let spec = SpectralDensity::tachyonic(1.0);
    let reg = spec.regulated().unwrap();
    let gamma = 2.0;
    let draws = 6000;
    let mut sums = [0.0; 3];
    for s in 0..draws {
        let f = sample_free_field(&spec, &grid, gamma, s).unwrap();
        sums[0] += f.at(0, 0) * f.at(0, 0);
        sums[1] += f.at(0, 0) * f.at(0, 1);
        sums[2] += f.at(0, 0) * f.at(1, 0);
    }
    let n = draws as f64;
    let targets = [
        0.5 * gamma * reg.value(0.0, 0.0).unwrap(),
        0.5 * gamma * reg.value(0.0, 1.0).unwrap(),
        0.5 * gamma * reg.value(0.5, 0.0).unwrap(),
    ];
    for (s, t) in sums.iter().zip(targets) {
        assert!((s / n / t - 1.0).abs() < 0.05, "{} vs {t}", s / n);
    }
}

#[test]
fn spectral_weights_are_nonnegative() {
    let space = SpatialGrid::line(4, 0.7).unwrap();
    let grid = SpacetimeGrid::new(space, 0.0, 2.0, 4).unwrap();
    for spec in [
        SpectralDensity::White { strength: 1.0 },
        SpectralDensity::GaussianSpatial { a: 1.0 },
        SpectralDensity::TachyonicNonrel { mu: 1.0 },
        SpectralDensity::Tachyonic {
            mu: 1.0,
            epsilon: 1e-3,
            cutoff: 2.0,
        },
    ] {
        let w = lattice_spectral_weights(&spec, &grid).unwrap();
        assert_eq!(w.len(), grid.site_count());
        assert!(w[0] >= -1e-10 * w[w.len() - 1], "{}: {}", spec.tag(), w[0]);
    }
    assert!(lattice_spectral_weights(&SpectralDensity::White { strength: -1.0 }, &grid).is_err());
    assert!(RegulatedKernel::new(1.0, 2.0, 1.0).is_err());
}

#[test]
fn colored_kernel_is_dense_and_symmetric() {
    let space = SpatialGrid::line(2, 1.0).unwrap();
    let grid = SpacetimeGrid::new(space, 0.0, 2.0, 3).unwrap();
    let k = LatticeKernel::build(&SpectralDensity::tachyonic(1.0), &grid).unwrap();
    assert!(!k.is_blocked());
    let d = k.to_dense();
    assert!((&d - d.transpose()).amax() < 1e-15);
    assert!(d[(0, 5)].abs() > 0.0);
}

#[test]
fn gaussian_ft_identity_examples() {
    let one = DMatrix::from_element(1, 1, 1.0);
    let (l, r) = gaussian_ft_sides(&one, 1.0, &[0.0]).unwrap();
    assert!((l - 1.0).abs() < 1e-15 && (r - 1.0).abs() < 1e-12);
    let two = DMatrix::from_element(1, 1, 2.0);
    let (l, r) = gaussian_ft_sides(&two, 1.0, &[1.0]).unwrap();
    assert!((l - (-1.0f64).exp()).abs() < 1e-15);
    assert!((r - l).abs() < 1e-6 * l);
    let spd = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
    assert!(gaussian_ft_identity_residual(2, &spd, 0.7, 1).unwrap() < 1e-6);
    let spd3 = DMatrix::from_row_slice(3, 3, &[1.5, 0.2, -0.3, 0.2, 1.0, 0.1, -0.3, 0.1, 0.8]);
    assert!(gaussian_ft_identity_residual(3, &spd3, 1.3, 2).unwrap() < 1e-6);
    let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(gaussian_ft_identity_residual(2, &not_pd, 1.0, 1).is_err());
}
