use std::path::Path;
use std::process::{Command, Output};

fn lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_collapse-lab"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn rates_agree_with_their_oracles() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["rates"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "rates.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("mu_over_M,quantity,closed_form,oracle,rel_err"));
    let mut n = 0;
    for line in lines {
        let err: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(err < 1e-6, "{line}");
        n += 1;
    }
    assert!(n >= 15);
}

#[test]
fn tachyonic_vacuum_rate_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["vacuum-check", "--spectrum", "tachyonic"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("tachyonic: prefactor 0e0 (zero)"), "{stdout}");
    let csv = read(dir.path(), "vacuum.csv");
    let row = csv.lines().nth(1).unwrap();
    assert_eq!(row, "tachyonic,zero,0.000000000000000e0,0.000000000000000e0");
}

#[test]
fn collapse_frequencies_cover_born_weights() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["collapse-traj", "--trajectories", "4000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "collapse_frequencies.csv");
    for (line, p) in csv.lines().skip(1).zip([0.3, 0.7]) {
        let f: Vec<f64> = line.split(',').skip(2).map(|v| v.parse().unwrap()).collect();
        assert!(f[0] <= p && p <= f[1], "{line}");
    }
    assert!(read(dir.path(), "trajectory.csv").lines().count() > 2);
    assert!(read(dir.path(), "martingale.csv").starts_with("t,branch,mean"));
}

#[test]
fn usage_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["rates", "--ratios", "0.1,oops"][..],
        &["--M-over-mu", "-2", "rates"],
        &["ladder", "--scenario", "adversarial_backforth", "--orders", "9"],
        &["spread", "--velocity", "0,0,1.2"],
        &["no-such-command"],
    ] {
        let out = lab(dir.path(), args);
        assert_eq!(out.status.code(), Some(3), "{args:?}");
    }
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "gamma = 1\nnot_a_key = 2\n").unwrap();
    let out = lab(dir.path(), &["--config", cfg.to_str().unwrap(), "rates"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not_a_key"));
}

#[test]
fn unwritable_output_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = lab(&blocker.join("sub"), &["rates"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn tolerance_violations_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // Far too short for the branches to separate, so the frequencies cannot
    // cover the Born weights.
    let out = lab(dir.path(), &["collapse-traj", "--trajectories", "2000", "--duration", "0.01", "--steps", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tolerance exceeded"));
}

#[test]
fn same_seed_gives_identical_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--seed", "99", "spread", "--samples", "5000", "--velocity", "0.2,0,0.4"];
    assert!(lab(a.path(), &args).status.success());
    let seq: Vec<&str> = ["--exec", "sequential"].into_iter().chain(args).collect();
    assert!(lab(b.path(), &seq).status.success());
    assert_eq!(read(a.path(), "spread.csv"), read(b.path(), "spread.csv"));

    let c = tempfile::tempdir().unwrap();
    assert!(lab(c.path(), &["--seed", "100", "spread", "--samples", "5000", "--velocity", "0.2,0,0.4"]).status.success());
    assert_ne!(read(a.path(), "spread.csv"), read(c.path(), "spread.csv"));
}

#[test]
fn config_echo_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    let out = lab(a.path(), &["--seed", "5", "--M-over-mu", "4", "ladder", "--samples", "2000"]);
    assert!(out.status.success());
    let cfg = a.path().join("config.txt");
    let b = tempfile::tempdir().unwrap();
    let out = lab(b.path(), &["--config", cfg.to_str().unwrap(), "ladder"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(a.path(), "ladder.csv"), read(b.path(), "ladder.csv"));
    assert_eq!(read(a.path(), "config.txt"), read(b.path(), "config.txt"));
    // Eight orders for M/mu = 4.
    assert_eq!(read(a.path(), "ladder.csv").lines().count(), 9);
}

#[test]
fn manifest_lists_every_output_with_its_hash() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["--format", "csv+svg", "correlator", "--points", "4"]);
    assert!(out.status.success());
    let manifest = read(dir.path(), "manifest.txt");
    assert!(manifest.contains("subcommand = correlator"));
    assert!(manifest.contains("[params]"));
    assert!(manifest.contains("outputs_sha256 = "));
    for name in ["correlator.csv", "correlator.svg", "config.txt"] {
        let line = manifest
            .lines()
            .find(|l| l.ends_with(&format!("  {name}")))
            .unwrap_or_else(|| panic!("{name} missing from manifest"));
        let digest = line.split_whitespace().next().unwrap();
        assert_eq!(digest, collapse_lab::validation::hex_digest(read(dir.path(), name).as_bytes()));
    }
    assert!(read(dir.path(), "correlator.svg").starts_with("<svg"));
}

#[test]
fn identity_checks_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["identity-checks"]);
    assert!(out.status.success());
    assert!(read(dir.path(), "identities.csv").lines().count() > 5);
}
