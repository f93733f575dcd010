use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use collapse_lab::correlator::{correlator_csv, correlator_sweep, SWEEP_EPSILON};
use collapse_lab::csl::{coherence_estimate, evolve_with, run_ensemble, EnsembleConfig, SuperpositionState};
use collapse_lab::noise::{PosteriorSampler, SpacetimeGrid, SpatialGrid, SpectralDensity};
use collapse_lab::params::{preset_grw, toy_params, ModelParams, ParamConfig};
use collapse_lab::relkin::{rates_sweep, sweep_csv, vacuum_rate_density, VacuumRate, SWEEP_MU_OVER_M};
use collapse_lab::report::plot_csv;
use collapse_lab::seed::{child_seed, experiment_seed, DEFAULT_MASTER_SEED};
use collapse_lab::spread::{classical_impulse_ensemble_with, ladder_walk_with, Scenario, SpreadError};
use collapse_lab::validation::{hex_digest, run_identities, run_suite, Outcome};
use collapse_lab::Execution;
use std::collections::BTreeMap;
use std::fmt::{Display, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

const EXIT_CONTRACT: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "collapse-lab", version, allow_negative_numbers = true, about = "Collapse-model numerics with deterministic, seeded outputs")]
struct Cli {
    /// Flat key = value file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, value_enum)]
    exec: Option<ExecArg>,
    #[command(flatten)]
    params: ParamArgs,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Default)]
struct ParamArgs {
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    #[arg(long = "M-over-mu", global = true)]
    m_over_mu: Option<f64>,
    #[arg(long, global = true)]
    lambda_per_sec: Option<f64>,
    #[arg(long, global = true)]
    a_cm: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    mass_ratio: Option<f64>,
    #[arg(long, global = true)]
    kappa: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    #[value(name = "csv+svg")]
    CsvSvg,
}

impl Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::CsvSvg => "csv+svg",
        })
    }
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, false)
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ExecArg {
    Parallel,
    Sequential,
}

impl From<ExecArg> for Execution {
    fn from(e: ExecArg) -> Self {
        match e {
            ExecArg::Parallel => Execution::Parallel,
            ExecArg::Sequential => Execution::Sequential,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Preset {
    Toy,
    Grw,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SpectrumKind {
    Gaussian,
    White,
    Nonrel,
    Tachyonic,
    All,
}

macro_rules! display_via_value_enum {
    ($($t:ty),*) => {$(
        impl Display for $t {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
            }
        }
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                <$t as ValueEnum>::from_str(s, false)
            }
        }
    )*};
}
display_via_value_enum!(ExecArg, Preset, SpectrumKind);

/// Comma-separated numbers.
#[derive(Clone, Debug, PartialEq)]
struct List(Vec<f64>);

impl FromStr for List {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number")))
            .collect::<Result<Vec<_>, _>>()
            .map(List)
    }
}

impl Display for List {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(f64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Ensemble of collapse trajectories for point clumps on a line.
    CollapseTraj(TrajArgs),
    /// Ensemble estimate of the off-diagonal element against its closed form.
    Offdiag(OffdiagArgs),
    /// Closed-form correlator against the Fourier oracle on both branches.
    Correlator(CorrelatorArgs),
    /// Rate closed forms against quadrature oracles over a mu/M sweep.
    Rates(RatesArgs),
    /// Vacuum-excitation prefactor per spectrum kind.
    VacuumCheck(VacuumArgs),
    /// Classical-impulse spread histogram.
    Spread(SpreadArgs),
    /// Multi-order impulse ladder.
    Ladder(LadderArgs),
    /// Gaussian Fourier and time-ordering identity checks.
    IdentityChecks,
    /// The full acceptance suite.
    ReproduceAll,
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::CollapseTraj(_) => "collapse-traj",
            Cmd::Offdiag(_) => "offdiag",
            Cmd::Correlator(_) => "correlator",
            Cmd::Rates(_) => "rates",
            Cmd::VacuumCheck(_) => "vacuum-check",
            Cmd::Spread(_) => "spread",
            Cmd::Ladder(_) => "ladder",
            Cmd::IdentityChecks => "identity-checks",
            Cmd::ReproduceAll => "reproduce-all",
        }
    }
}

#[derive(Args, Debug)]
struct ClumpArgs {
    /// Born weights of the branches.
    #[arg(long)]
    branches: Option<List>,
    #[arg(long)]
    separation: Option<f64>,
    #[arg(long)]
    particles: Option<f64>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, value_enum)]
    spectrum: Option<SpectrumKind>,
    /// Collapse rate in internal units.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args, Debug)]
struct TrajArgs {
    #[command(flatten)]
    clumps: ClumpArgs,
    #[arg(long)]
    trajectories: Option<usize>,
}

#[derive(Args, Debug)]
struct OffdiagArgs {
    #[command(flatten)]
    clumps: ClumpArgs,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args, Debug)]
struct CorrelatorArgs {
    #[arg(long)]
    s_min: Option<f64>,
    #[arg(long)]
    s_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args, Debug)]
struct RatesArgs {
    /// mu/M values of the sweep.
    #[arg(long)]
    ratios: Option<List>,
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Args, Debug)]
struct VacuumArgs {
    #[arg(long, value_enum)]
    spectrum: Option<SpectrumKind>,
    /// Momentum cutoff for the divergent white-noise rate.
    #[arg(long)]
    cutoff: Option<f64>,
}

#[derive(Args, Debug)]
struct SpreadArgs {
    /// Initial velocity vx,vy,vz.
    #[arg(long)]
    velocity: Option<List>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Args, Debug)]
struct LadderArgs {
    #[arg(long)]
    scenario: Option<ScenarioArg>,
    /// Defaults to the ceiling of 2M/mu.
    #[arg(long)]
    orders: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
struct ScenarioArg(Scenario);

impl FromStr for ScenarioArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Scenario::parse(&s.replace('-', "_")).map(ScenarioArg).ok_or_else(|| {
            format!("unknown scenario `{s}` (isotropic, forward_accelerating, adversarial_backforth)")
        })
    }
}

impl Display for ScenarioArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.0.tag())
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    /// A tolerance was exceeded.
    Tolerance(String),
    /// The computation could not be completed.
    Computation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Tolerance(_) | Failure::Computation(_) => EXIT_CONTRACT,
        }
    }
}

impl Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Tolerance(m) => write!(f, "contract violation (tolerance exceeded): {m}"),
            Failure::Computation(m) => write!(f, "contract violation (computation failed): {m}"),
        }
    }
}

fn computation<E: Display>(e: E) -> Failure {
    Failure::Computation(e.to_string())
}

fn usage<E: Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

/// Resolves each setting from flag, then config file, then default, and
/// records the value used.
struct Settings {
    file: BTreeMap<String, String>,
    echo: Vec<(String, String)>,
}

impl Settings {
    fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, Failure>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => v,
            None => match self.file.remove(key) {
                Some(s) => s.parse().map_err(|e| Failure::Usage(format!("config key `{key}`: {e}")))?,
                None => default,
            },
        };
        self.echo.push((key.to_string(), v.to_string()));
        Ok(v)
    }

    fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, Failure>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => match self.file.remove(key) {
                Some(s) => Some(s.parse().map_err(|e| Failure::Usage(format!("config key `{key}`: {e}")))?),
                None => None,
            },
        };
        if let Some(v) = &v {
            self.echo.push((key.to_string(), v.to_string()));
        }
        Ok(v)
    }

    fn finish(&self) -> Result<(), Failure> {
        match self.file.keys().next() {
            Some(k) => Err(Failure::Usage(format!("unknown config key `{k}`"))),
            None => Ok(()),
        }
    }

    fn echo_text(&self) -> String {
        self.echo.iter().fold(String::new(), |mut s, (k, v)| {
            let _ = writeln!(s, "{k} = {v}");
            s
        })
    }
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
        if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Failure::Usage(format!("{}:{}: duplicate key `{}`", path.display(), i + 1, k.trim())));
        }
    }
    Ok(map)
}

fn resolve_params(s: &mut Settings, args: &ParamArgs) -> Result<ModelParams, Failure> {
    let preset = s.get("preset", args.preset, Preset::Toy)?;
    let flags = [
        ("lambda_per_sec", args.lambda_per_sec),
        ("a_cm", args.a_cm),
        ("gamma", args.gamma),
        ("M_over_mu", args.m_over_mu),
        ("mass_ratio", args.mass_ratio),
        ("kappa", args.kappa),
    ];
    let mut cfg = ParamConfig::default();
    for (key, flag) in flags {
        if let Some(v) = s.get_opt(key, flag)? {
            cfg.set(key, v).map_err(Failure::Usage)?;
        }
    }
    let base = match preset {
        Preset::Toy => toy_params(10.0).map_err(usage)?,
        Preset::Grw => preset_grw(),
    };
    cfg.apply(base).map_err(usage)
}

struct Run {
    files: Vec<(String, String)>,
    lines: Vec<String>,
    violation: Option<Failure>,
}

impl Run {
    fn new() -> Self {
        Run {
            files: Vec::new(),
            lines: Vec::new(),
            violation: None,
        }
    }

    fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    fn say(&mut self, line: String) {
        self.lines.push(line);
    }

    fn require(&mut self, ok: bool, message: String) {
        if !ok && self.violation.is_none() {
            self.violation = Some(Failure::Tolerance(message));
        }
    }
}

fn spectrum_for(kind: SpectrumKind, p: &ModelParams) -> Result<SpectralDensity, Failure> {
    Ok(match kind {
        SpectrumKind::Gaussian => SpectralDensity::GaussianSpatial { a: p.a },
        SpectrumKind::White => SpectralDensity::White { strength: 1.0 },
        SpectrumKind::Nonrel => SpectralDensity::TachyonicNonrel { mu: p.mu },
        SpectrumKind::Tachyonic => SpectralDensity::tachyonic(p.mu),
        SpectrumKind::All => return Err(Failure::Usage("`all` is only valid for vacuum-check".into())),
    })
}

struct Clumps {
    state: SuperpositionState,
    params: ModelParams,
    spectrum: SpectralDensity,
    grid: SpacetimeGrid,
}

fn clumps(s: &mut Settings, a: &ClumpArgs, p: ModelParams, default_probs: &[f64], default_t: f64) -> Result<Clumps, Failure> {
    let probs = s.get("branches", a.branches.clone(), List(default_probs.to_vec()))?.0;
    let separation = s.get("separation", a.separation, 100.0)?;
    let particles = s.get("particles", a.particles, 1.0)?;
    let duration = s.get("duration", a.duration, default_t)?;
    let steps = s.get("steps", a.steps, if default_t > 5.0 { 10 } else { 1 })?;
    let kind = s.get("spectrum", a.spectrum, SpectrumKind::Gaussian)?;
    let lambda = s.get("lambda", a.lambda, 1.0)?;
    let params = p.with_lambda(lambda).map_err(usage)?;
    let spectrum = spectrum_for(kind, &params)?;
    let space = SpatialGrid::line(probs.len(), separation).map_err(usage)?;
    let sites: Vec<usize> = (0..probs.len()).collect();
    let state = SuperpositionState::point_clumps(space, &probs, &sites, particles).map_err(usage)?;
    let grid = SpacetimeGrid::new(space, 0.0, duration, steps).map_err(usage)?;
    Ok(Clumps {
        state,
        params,
        spectrum,
        grid,
    })
}

fn collapse_traj(s: &mut Settings, a: &TrajArgs, p: ModelParams, seed: u64, exec: Execution) -> Result<Run, Failure> {
    let c = clumps(s, &a.clumps, p, &[0.3, 0.7], 30.0)?;
    let n = s.get("trajectories", a.trajectories, 10_000)?;
    s.finish()?;
    let cfg = EnsembleConfig::new(n, experiment_seed(seed, "collapse-traj")).with_exec(exec);
    let run = run_ensemble(&c.state, &c.params, &c.spectrum, &c.grid, &cfg).map_err(usage)?;
    let stats = run.collapse_stats(3.0);
    let mart = run.martingale();
    let sampler = PosteriorSampler::new(&c.state, &c.params, &c.spectrum, &c.grid).map_err(computation)?;
    let (_, w) = sampler.sample_seeded(child_seed(experiment_seed(seed, "collapse-traj-sample"), 0));
    let traj = evolve_with(&sampler.model, &c.state, &w).map_err(computation)?;
    let mut out = Run::new();
    let probs = c.state.probabilities();
    for (i, (f, (lo, hi))) in stats.frequencies.iter().zip(&stats.intervals).enumerate() {
        out.say(format!("branch {}: frequency {f:.4}, 3-sigma interval [{lo:.4}, {hi:.4}], Born weight {:.4}", i + 1, probs[i]));
    }
    if let Some(w) = &stats.warning {
        out.say(format!("warning: {w}"));
    }
    out.say(format!("martingale: largest deviation {:.2} standard errors", mart.max_sigma));
    out.require(stats.covers(&probs), "collapse frequencies outside their 3-sigma intervals".into());
    out.require(mart.passes(3.0), "martingale deviation above 3 standard errors".into());
    out.file("collapse_frequencies.csv", stats.to_csv());
    out.file("martingale.csv", mart.to_csv());
    out.file("trajectory.csv", traj.to_csv());
    Ok(out)
}

fn offdiag(s: &mut Settings, a: &OffdiagArgs, p: ModelParams, seed: u64, exec: Execution) -> Result<Run, Failure> {
    let c = clumps(s, &a.clumps, p, &[0.5, 0.5], 1.0)?;
    let n = s.get("samples", a.samples, 40_000)?;
    s.finish()?;
    let mut out = Run::new();
    let mut csv = String::from("branch_i,branch_j,exponent,predicted_re,mean_re,mean_im,std_error,rel_err\n");
    let k = c.state.len();
    for i in 0..k {
        for j in i + 1..k {
            let cfg = EnsembleConfig::new(n, experiment_seed(seed, &format!("offdiag-{i}-{j}"))).with_exec(exec);
            let est = coherence_estimate(&c.state, &c.params, &c.spectrum, &c.grid, (i, j), &cfg).map_err(usage)?;
            let _ = writeln!(
                csv,
                "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.6e},{:.6e}",
                i + 1,
                j + 1,
                est.exponent,
                est.predicted.re,
                est.mean.re,
                est.mean.im,
                est.std_error,
                est.rel_err()
            );
            out.say(format!(
                "({}, {}): exponent {:.6}, ensemble {:.5} vs predicted {:.5}",
                i + 1,
                j + 1,
                est.exponent,
                est.mean.re,
                est.predicted.re
            ));
            let tol = 0.05 * est.predicted.norm() + 3.0 * est.std_error;
            out.require((est.mean - est.predicted).norm() <= tol, format!("coherence ({}, {}) off its prediction", i + 1, j + 1));
        }
    }
    out.file("offdiag.csv", csv);
    Ok(out)
}

fn correlator(s: &mut Settings, a: &CorrelatorArgs, p: ModelParams, exec: Execution) -> Result<Run, Failure> {
    let lo = s.get("s_min", a.s_min, 0.1)?;
    let hi = s.get("s_max", a.s_max, 10.0)?;
    let n = s.get("points", a.points, 13)?;
    let eps = s.get("epsilon", a.epsilon, SWEEP_EPSILON)?;
    s.finish()?;
    if !(lo > 0.0 && hi >= lo && n >= 1) {
        return Err(Failure::Usage("need 0 < s_min <= s_max and points >= 1".into()));
    }
    let xs: Vec<f64> = (0..n)
        .map(|i| if n == 1 { lo } else { lo * (hi / lo).powf(i as f64 / (n - 1) as f64) })
        .collect();
    let rows = correlator_sweep(p.mu, &xs, eps, exec).map_err(computation)?;
    let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    let mut out = Run::new();
    out.say(format!("{} points, largest rel_err {worst:.2e}", rows.len()));
    out.require(worst <= 1e-4, format!("correlator rel_err {worst:.2e} above 1e-4"));
    out.file("correlator.csv", correlator_csv(&rows));
    Ok(out)
}

fn rates(s: &mut Settings, a: &RatesArgs, p: ModelParams) -> Result<Run, Failure> {
    let mut default = SWEEP_MU_OVER_M.to_vec();
    let own = p.mu / p.mass;
    if !default.contains(&own) {
        default.push(own);
        default.sort_by(f64::total_cmp);
    }
    let ratios = s.get("ratios", a.ratios.clone(), List(default))?.0;
    let t = s.get("duration", a.duration, 1.0)?;
    s.finish()?;
    let rows = rates_sweep(&p, t, &ratios).map_err(computation)?;
    let worst = rows.iter().filter_map(|r| r.report.rel_err).fold(0.0, f64::max);
    let mut out = Run::new();
    out.say(format!("{} rows, largest rel_err {worst:.2e}", rows.len()));
    out.require(worst < 1e-6, format!("rate rel_err {worst:.2e} not below 1e-6"));
    out.file("rates.csv", sweep_csv(&rows));
    Ok(out)
}

fn vacuum_check(s: &mut Settings, a: &VacuumArgs, p: ModelParams) -> Result<Run, Failure> {
    let kind = s.get("spectrum", a.spectrum, SpectrumKind::All)?;
    let cutoff = s.get("cutoff", a.cutoff, 4.0 * p.mu)?;
    s.finish()?;
    let kinds = match kind {
        SpectrumKind::All => vec![SpectrumKind::Tachyonic, SpectrumKind::White, SpectrumKind::Gaussian, SpectrumKind::Nonrel],
        k => vec![k],
    };
    let mut out = Run::new();
    let mut csv = String::from("spectrum,kind,prefactor,cutoff_value\n");
    for k in kinds {
        let spec = spectrum_for(k, &p)?;
        let rate = vacuum_rate_density(&spec, &p).map_err(computation)?;
        let label = match rate {
            VacuumRate::Zero => "zero",
            VacuumRate::Divergent { .. } => "divergent",
            VacuumRate::Finite { .. } => "finite",
        };
        out.say(format!("{k}: prefactor {:e} ({label})", rate.prefactor()));
        let _ = writeln!(csv, "{k},{label},{:.15e},{:.15e}", rate.prefactor(), rate.with_cutoff(cutoff));
        if k == SpectrumKind::Tachyonic {
            out.require(rate.prefactor() == 0.0, "tachyonic vacuum prefactor is not zero".into());
        }
    }
    out.file("vacuum.csv", csv);
    Ok(out)
}

fn spread_failure(e: SpreadError) -> Failure {
    match e {
        SpreadError::Kinematics(_) => computation(e),
        _ => usage(e),
    }
}

fn spread(s: &mut Settings, a: &SpreadArgs, p: ModelParams, seed: u64, exec: Execution) -> Result<Run, Failure> {
    let v = s.get("velocity", a.velocity.clone(), List(vec![0.0, 0.0, 0.0]))?.0;
    let t = s.get("duration", a.duration, 1.0)?;
    let n = s.get("samples", a.samples, 100_000)?;
    let bins = s.get("bins", a.bins, 50)?;
    s.finish()?;
    let v0: [f64; 3] = v
        .try_into()
        .map_err(|_| Failure::Usage("velocity needs three components".into()))?;
    let h = classical_impulse_ensemble_with(&p, t, v0, n, experiment_seed(seed, "spread"), bins, exec)
        .map_err(spread_failure)?;
    let mut out = Run::new();
    out.say(format!(
        "support radii: rest {:.6}, parallel {:.6}, perpendicular {:.6}",
        h.radius_rest, h.radius_parallel, h.radius_perpendicular
    ));
    out.say(format!(
        "KS D = {:.5} (1% critical {:.5}), chi-square p = {:.4}",
        h.ks.statistic,
        h.ks.critical(0.01),
        h.chi_square.p_value
    ));
    out.say(format!("{} support violations over {} samples; {}", h.violations, h.total, h.regime));
    out.require(h.violations == 0, format!("{} samples outside the kinematic support", h.violations));
    out.file("spread.csv", h.to_csv());
    Ok(out)
}

fn ladder(s: &mut Settings, a: &LadderArgs, p: ModelParams, seed: u64, exec: Execution) -> Result<Run, Failure> {
    let scenario = s.get("scenario", a.scenario, ScenarioArg(Scenario::Isotropic))?.0;
    let two_m = (2.0 * p.m_over_mu()).ceil() as usize;
    let default_orders = match scenario {
        Scenario::AdversarialBackforth => two_m + two_m % 2,
        _ => two_m,
    };
    let orders = s.get("orders", a.orders, default_orders)?;
    let n = s.get("samples", a.samples, 100_000)?;
    let t = s.get("duration", a.duration, 1.0)?;
    s.finish()?;
    let r = ladder_walk_with(&p, t, orders, n, experiment_seed(seed, "ladder"), scenario, exec)
        .map_err(spread_failure)?;
    let last = r.rows.last().expect("at least one order");
    let mut out = Run::new();
    out.say(format!(
        "{}: after {} orders mean |x| = {:.6}, P(|x| > cT) = {:.3e} [{:.3e}, {:.3e}]",
        scenario.tag(),
        last.order,
        last.mean_disp,
        last.p_exceed,
        last.ci_low,
        last.ci_high
    ));
    if let Some(o) = r.exit_order {
        out.say(format!("every sample outside the lightcone from order {o}"));
    }
    out.say(r.regime.to_string());
    match scenario {
        Scenario::ForwardAccelerating => {
            let max = r.rows.iter().map(|x| x.max_disp).fold(0.0, f64::max);
            out.require(max < t, format!("forward displacement {max} reached cT"));
        }
        Scenario::AdversarialBackforth if orders >= two_m => {
            out.require(r.exit_order == Some(two_m), format!("lightcone exit at {:?}, expected {two_m}", r.exit_order));
        }
        _ => {}
    }
    out.file("ladder.csv", r.to_csv());
    Ok(out)
}

fn identity_checks(s: &mut Settings, seed: u64, exec: Execution) -> Result<Run, Failure> {
    s.finish()?;
    let (c, artifacts) = run_identities(seed, exec);
    let mut out = Run::new();
    out.say(c.line());
    match c.outcome {
        Outcome::Error => return Err(Failure::Computation(c.detail)),
        Outcome::Fail => out.require(false, c.detail.clone()),
        Outcome::Pass => {}
    }
    for a in artifacts {
        out.file(&a.name, a.contents);
    }
    Ok(out)
}

fn reproduce_all(s: &mut Settings, seed: u64, exec: Execution) -> Result<Run, Failure> {
    s.finish()?;
    let report = run_suite(seed, exec);
    let mut out = Run::new();
    for c in &report.criteria {
        out.say(c.line());
    }
    let describe = |o: Outcome| {
        report
            .criteria
            .iter()
            .filter(|c| c.outcome == o)
            .map(|c| format!("criterion {}: {}", c.id, c.detail))
            .collect::<Vec<_>>()
    };
    let (failed, errored) = (describe(Outcome::Fail), describe(Outcome::Error));
    if !failed.is_empty() {
        out.violation = Some(Failure::Tolerance(failed.join("; ")));
    } else if !errored.is_empty() {
        out.violation = Some(Failure::Computation(errored.join("; ")));
    }
    out.file("summary.csv", report.summary_csv());
    for a in report.artifacts {
        out.file(&a.name, a.contents);
    }
    Ok(out)
}

fn write_outputs(dir: &Path, run: &Run, format: Format, manifest_head: &str) -> anyhow::Result<usize> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut files: Vec<(String, String)> = run.files.clone();
    if format == Format::CsvSvg {
        for (name, csv) in &run.files {
            if let Some(svg) = plot_csv(name.trim_end_matches(".csv"), csv) {
                files.push((name.replace(".csv", ".svg"), svg));
            }
        }
    }
    let mut manifest = String::from(manifest_head);
    manifest.push_str("\n[outputs]\n");
    let mut listing = String::new();
    for (name, contents) in &files {
        std::fs::write(dir.join(name), contents).with_context(|| format!("cannot write {}", dir.join(name).display()))?;
        let _ = writeln!(listing, "{}  {name}", hex_digest(contents.as_bytes()));
    }
    manifest.push_str(&listing);
    let _ = writeln!(manifest, "\noutputs_sha256 = {}", hex_digest(listing.as_bytes()));
    std::fs::write(dir.join("manifest.txt"), manifest).with_context(|| format!("cannot write {}", dir.display()))?;
    Ok(files.len() + 1)
}

fn execute(cli: &Cli) -> Result<(Run, usize), Failure> {
    let file = match &cli.config {
        Some(path) => read_config(path)?,
        None => BTreeMap::new(),
    };
    let mut s = Settings { file, echo: Vec::new() };
    if let Some(sub) = s.file.remove("subcommand") {
        if sub != cli.cmd.name() {
            return Err(Failure::Usage(format!("config is for `{sub}`, not `{}`", cli.cmd.name())));
        }
    }
    s.echo.push(("subcommand".into(), cli.cmd.name().into()));
    let seed = s.get("seed", cli.seed, DEFAULT_MASTER_SEED)?;
    let format = s.get("format", cli.format, Format::Csv)?;
    let exec: Execution = s.get("exec", cli.exec, ExecArg::Parallel)?.into();
    let p = resolve_params(&mut s, &cli.params)?;
    let mut run = match &cli.cmd {
        Cmd::CollapseTraj(a) => collapse_traj(&mut s, a, p, seed, exec),
        Cmd::Offdiag(a) => offdiag(&mut s, a, p, seed, exec),
        Cmd::Correlator(a) => correlator(&mut s, a, p, exec),
        Cmd::Rates(a) => rates(&mut s, a, p),
        Cmd::VacuumCheck(a) => vacuum_check(&mut s, a, p),
        Cmd::Spread(a) => spread(&mut s, a, p, seed, exec),
        Cmd::Ladder(a) => ladder(&mut s, a, p, seed, exec),
        Cmd::IdentityChecks => identity_checks(&mut s, seed, exec),
        Cmd::ReproduceAll => reproduce_all(&mut s, seed, exec),
    }?;
    let config = s.echo_text();
    let head = format!("[config]\n{config}\n[params]\n{}", p.echo());
    run.file("config.txt", config);
    let written = write_outputs(&cli.out, &run, format, &head).map_err(|e| Failure::Usage(format!("{e:#}")))?;
    Ok((run, written))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok((run, written)) => {
            for l in &run.lines {
                println!("{l}");
            }
            println!("wrote {written} files to {}", cli.out.display());
            match run.violation {
                Some(v) => {
                    eprintln!("{v}");
                    ExitCode::from(v.code())
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.code())
        }
    }
}
