//! Experiment-level invariants: determinism, covariance structure, targets.

use stabclt::experiments::{
    default_t_grid, run_plan, theorem42_experiment, theorem42_plan, ExperimentPlan, ExperimentReport,
    ProcessKind, RunOptions, DEFAULT_GRID_BUDGET,
};
use stabclt::functionals::{FunctionalSpec, TestFunctionSpec};
use stabclt::point_process::{DensitySpec, Normalization};
use stabclt::regions::{AxisBox, Region};
use stabclt::special_fn::WeightExponent;

fn w(a: f64) -> WeightExponent {
    WeightExponent::new(a).unwrap()
}

fn run(plan: &ExperimentPlan, workers: usize) -> ExperimentReport {
    run_plan(plan, &RunOptions { workers: Some(workers), progress: None }).unwrap()
}

fn square_plan(process: ProcessKind) -> ExperimentPlan {
    let half = |lo: f64, hi: f64| Region::new(2, vec![AxisBox::new(vec![lo, 0.0], vec![hi, 1.0]).unwrap()]).unwrap();
    ExperimentPlan {
        density: DensitySpec::homogeneous(Region::unit_cube(2).unwrap()).unwrap(),
        test_functions: vec![TestFunctionSpec::indicator(half(0.0, 0.5)), TestFunctionSpec::indicator(half(0.5, 1.0))],
        functional: FunctionalSpec::undirected_knn(3, w(1.0), 100.0).unwrap(),
        process,
        lambda_grid: vec![100.0, 300.0],
        replicates: 200,
        seed: 77,
        t_grid: default_t_grid(),
        grid_budget: DEFAULT_GRID_BUDGET,
    }
}

#[test]
fn worker_count_does_not_change_reports() {
    for process in [ProcessKind::Poisson, ProcessKind::Binomial] {
        let plan = square_plan(process);
        let one = serde_json::to_string(&run(&plan, 1)).unwrap();
        let eight = serde_json::to_string(&run(&plan, 8)).unwrap();
        assert_eq!(one, eight, "{process:?}");
    }
}

#[test]
fn covariance_is_symmetric_psd_with_variance_diagonal() {
    let report = theorem42_experiment(
        w(1.0),
        &[1.0, 0.5, 2.0],
        &[(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)],
        &[200.0],
        500,
        3,
        None,
    )
    .unwrap();
    let l = &report.lambdas[0];
    let c = &l.covariance;
    assert_eq!(c.len(), 3);
    for i in 0..3 {
        assert!((c[i][i] - l.regions[i].var).abs() <= 1e-9 * c[i][i].abs());
        for j in 0..3 {
            assert_eq!(c[i][j], c[j][i]);
        }
    }
    // leading principal minors (and every 2x2 minor) are nonnegative
    let tol = 1e-9;
    for i in 0..3 {
        assert!(c[i][i] >= -tol);
        for j in (i + 1)..3 {
            assert!(c[i][i] * c[j][j] - c[i][j] * c[j][i] >= -tol * c[i][i] * c[j][j]);
        }
    }
    let det = c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1]) - c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0])
        + c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0]);
    assert!(det >= -tol * c[0][0] * c[1][1] * c[2][2], "det {det}");
}

#[test]
fn disjoint_regions_are_nearly_uncorrelated() {
    let n = 2000;
    let report = theorem42_experiment(w(1.0), &[1.0, 1.0], &[(0.0, 1.0), (1.0, 2.0)], &[300.0], n, 9, None).unwrap();
    let r = report.lambdas[0].correlation[0][1];
    assert!(r.abs() <= 3.0 / (n as f64).sqrt() + 0.01, "corr {r}");
}

#[test]
fn constant_density_targets_scale_with_kappa() {
    // kappa = 2 on (0,1), alpha = 2: the scaled mean tends to
    // 2^-2 Gamma(3) * 2^(1-2) = 1/4, not 2^-2 Gamma(3) * 2 = 1.
    let n = 2000;
    let report = theorem42_experiment(w(2.0), &[2.0], &[(0.0, 1.0)], &[500.0], n, 21, None).unwrap();
    let row = &report.lambdas[0].regions[0];
    assert!((row.target_mean.unwrap() - 0.25).abs() < 1e-12);
    assert!((row.scaled_mean - 0.25).abs() <= 3.0 * row.se_scaled_mean + 0.005, "{}", row.scaled_mean);
    // Poisson variance target: 2^(1-4) (V_2 + delta_2^2) = (85/108 + 1/4) / 8
    let target_var = (85.0 / 108.0 + 0.25) / 8.0;
    assert!((row.target_var.unwrap() - target_var).abs() < 1e-12);
    assert!((row.scaled_var - target_var).abs() <= 3.0 * row.se_scaled_var + 0.01, "{}", row.scaled_var);
}

#[test]
fn plans_are_validated() {
    let plan = theorem42_plan(w(1.0), &[1.0], &[(0.0, 1.0)], &[100.0], 10, 0).unwrap();
    assert!(plan.validate().is_ok());
    assert!(theorem42_plan(w(1.0), &[1.0, 2.0], &[(0.0, 1.0)], &[100.0], 10, 0).is_err());
    assert!(theorem42_plan(w(1.0), &[0.0], &[(0.0, 1.0)], &[100.0], 10, 0).is_err());
    let mut bad = plan.clone();
    bad.lambda_grid = vec![100.0, 50.0];
    assert!(bad.validate().is_err());
    let mut bad = plan;
    bad.density = DensitySpec::new(
        Region::unit_cube(2).unwrap(),
        vec![1.0],
        Normalization::Probability,
    )
    .unwrap();
    assert!(bad.validate().is_err());
}
