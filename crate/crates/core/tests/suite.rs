use collapse_lab::seed::DEFAULT_MASTER_SEED;
use collapse_lab::validation::{compare_artifacts, run_criteria};
use collapse_lab::Execution;

#[test]
fn criteria_pass_for_other_seeds() {
    for seed in [1, 2, 0xdead_beef] {
        let (results, _) = run_criteria(seed, Execution::default());
        for r in &results {
            assert!(r.passed(), "seed {seed}: {}", r.line());
        }
    }
}

#[test]
fn same_seed_reproduces_every_artifact() {
    let (_, a) = run_criteria(DEFAULT_MASTER_SEED, Execution::Sequential);
    let (_, b) = run_criteria(DEFAULT_MASTER_SEED, Execution::Sequential);
    assert_eq!(compare_artifacts(&a, &b), Ok(a.len()));
    let (_, c) = run_criteria(DEFAULT_MASTER_SEED + 1, Execution::Sequential);
    assert!(compare_artifacts(&a, &c).is_err());
}
