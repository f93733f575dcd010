use collapse_lab::csl::{run_ensemble, EnsembleConfig, SuperpositionState};
use collapse_lab::noise::{SpacetimeGrid, SpatialGrid, SpectralDensity};
use collapse_lab::params::toy_params;
use collapse_lab::spread::{classical_impulse_ensemble_with, ladder_walk_with, Scenario};
use collapse_lab::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const POLICIES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn trajectories(c: &mut Criterion) {
    let p = toy_params(10.0).unwrap();
    let space = SpatialGrid::line(2, 100.0).unwrap();
    let state = SuperpositionState::point_clumps(space, &[0.3, 0.7], &[0, 1], 1.0).unwrap();
    let grid = SpacetimeGrid::new(space, 0.0, 30.0, 10).unwrap();
    let spec = SpectralDensity::GaussianSpatial { a: 1.0 };
    let mut g = c.benchmark_group("collapse_ensemble");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        let cfg = EnsembleConfig::new(2000, 1).with_exec(exec);
        g.bench_function(BenchmarkId::new(name, 2000), |b| {
            b.iter(|| run_ensemble(&state, &p, &spec, &grid, &cfg).unwrap())
        });
    }
    g.finish();
}

fn spread(c: &mut Criterion) {
    let p = toy_params(5.0).unwrap();
    let mut g = c.benchmark_group("impulse_ensemble");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::new(name, 100_000), |b| {
            b.iter(|| classical_impulse_ensemble_with(&p, 1.0, [0.0, 0.0, 0.6], 100_000, 3, 50, exec).unwrap())
        });
    }
    g.finish();
}

fn ladder(c: &mut Criterion) {
    let p = toy_params(5.0).unwrap();
    let mut g = c.benchmark_group("isotropic_ladder");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::new(name, 10_000), |b| {
            b.iter(|| ladder_walk_with(&p, 1.0, 10, 10_000, 4, Scenario::Isotropic, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, trajectories, spread, ladder);
criterion_main!(benches);
