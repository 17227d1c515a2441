//! Monte Carlo engine: replicated statistics, moment estimates, CLT
//! discrepancies and rate fits over a grid of intensities.
//!
//! Replicate `r` at intensity `lambda` draws its configuration from stream
//! `r` of a seed derived from `(plan.seed, lambda)`, so every number in a
//! report is a function of the plan alone, never of the worker count.

mod clt;
mod estimators;
mod rate;

pub use clt::{
    default_t_grid, ks_to_normal, product_form_discrepancy, JointDiscrepancy, DEFAULT_GRID_BUDGET,
};
pub use estimators::{estimate_moments, estimate_moments_raw, standardize, EstimatorSummary};
pub use rate::{fit_rate, RateFit};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{t_vector, Family, FunctionalSpec, StatVector, TestFunctionKind, TestFunctionSpec};
use crate::point_process::{sample_binomial_with, sample_poisson_with, DensitySpec};
use crate::regions::Region;
use crate::rng::{derive_seed, retry_stream, stream_rng};
use crate::special_fn::{delta_alpha, exp_moment, v_alpha, WeightExponent};

/// Retries after the first attempt when a replicate lacks points.
pub const MAX_RETRIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessKind {
    /// Poisson process with intensity `lambda * kappa`.
    Poisson,
    /// `round(lambda * integral of kappa)` i.i.d. points from normalized kappa.
    Binomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub density: DensitySpec,
    /// One test function per region; the regions must be disjoint.
    pub test_functions: Vec<TestFunctionSpec>,
    /// Family, `k` and `alpha`; its `lambda` is replaced per grid point.
    pub functional: FunctionalSpec,
    pub process: ProcessKind,
    pub lambda_grid: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub t_grid: Vec<f64>,
    pub grid_budget: usize,
}

impl ExperimentPlan {
    pub fn regions(&self) -> Vec<&Region> {
        self.test_functions.iter().map(|f| f.region()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: self.replicates,
            });
        }
        if self.lambda_grid.is_empty() {
            return Err(Error::InvalidParameter("lambda grid is empty".into()));
        }
        if let Some(l) = self.lambda_grid.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "lambda values must be finite and > 0, got {l}"
            )));
        }
        if self.lambda_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "lambda grid must be strictly increasing".into(),
            ));
        }
        if self.test_functions.is_empty() {
            return Err(Error::InvalidParameter("at least one region is required".into()));
        }
        let d = self.density.dimension();
        for f in &self.test_functions {
            if f.region().dimension() != d {
                return Err(Error::InvalidParameter(format!(
                    "region in dimension {} but density in dimension {d}",
                    f.region().dimension()
                )));
            }
        }
        for i in 0..self.test_functions.len() {
            for j in (i + 1)..self.test_functions.len() {
                if self.test_functions[i]
                    .region()
                    .overlaps(self.test_functions[j].region())
                {
                    return Err(Error::OverlappingRegions { first: i, second: j });
                }
            }
        }
        // surface a bad grid before any sampling
        let probe = vec![vec![0.0; self.test_functions.len()]];
        product_form_discrepancy(&probe, &self.t_grid, self.grid_budget)?;
        FunctionalSpec::new(
            self.functional.family,
            self.functional.k,
            self.functional.alpha,
            self.lambda_grid[0],
        )?;
        Ok(())
    }

    /// Seed for the replicates at one grid intensity.
    pub fn lambda_seed(&self, lambda: f64) -> u64 {
        derive_seed(self.seed, lambda.to_bits())
    }
}

fn replicate(plan: &ExperimentPlan, spec: &FunctionalSpec, seed: u64, r: usize) -> Result<StatVector> {
    let lambda = spec.lambda;
    let mut last = None;
    for attempt in 0..=MAX_RETRIES {
        let mut rng = stream_rng(seed, retry_stream(r as u64, attempt as u64));
        let config = match plan.process {
            ProcessKind::Poisson => sample_poisson_with(&plan.density, lambda, &mut rng)?,
            ProcessKind::Binomial => {
                let n = (lambda * plan.density.total_mass()).round() as usize;
                sample_binomial_with(&plan.density, n, &mut rng)
            }
        };
        match t_vector(&config, &plan.test_functions, spec) {
            Ok(v) => return Ok(v),
            Err(e @ Error::InsufficientPoints { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(Error::ReplicateFailed {
        replicate: r,
        attempts: MAX_RETRIES + 1,
        source: Box::new(last.expect("at least one attempt")),
    })
}

/// `plan.replicates` statistic vectors at `lambda`, in replicate order.
/// Runs on the current rayon pool.
pub fn run_replicates(plan: &ExperimentPlan, lambda: f64) -> Result<Vec<StatVector>> {
    plan.validate()?;
    let spec = plan.functional.with_lambda(lambda)?;
    let seed = plan.lambda_seed(lambda);
    (0..plan.replicates)
        .into_par_iter()
        .map(|r| replicate(plan, &spec, seed, r))
        .collect()
}

/// Run `f` on a dedicated pool of `workers` threads (`None`: rayon default).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidParameter("workers must be >= 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub region: usize,
    pub kappa_integral: f64,
    /// Moments of `T_i`.
    pub mean: f64,
    pub se_mean: f64,
    pub var: f64,
    pub se_var: f64,
    /// `mean / lambda` and `var / lambda`; for the directed nearest-neighbour
    /// family on the line these are `lambda^(a-1) E[L]` and
    /// `lambda^(2a-1) Var[L]`.
    pub scaled_mean: f64,
    pub se_scaled_mean: f64,
    pub scaled_var: f64,
    pub se_scaled_var: f64,
    /// Large-lambda limits of the scaled moments, where a closed form applies.
    pub target_mean: Option<f64>,
    pub target_var: Option<f64>,
    /// Kolmogorov distance of the standardized component to the normal law.
    pub ks: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaReport {
    pub lambda: f64,
    pub replicates: usize,
    pub regions: Vec<RegionRow>,
    pub covariance: Vec<Vec<f64>>,
    pub correlation: Vec<Vec<f64>>,
    pub joint_discrepancy: Option<f64>,
    pub joint_argmax: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub family: Family,
    pub k: usize,
    pub alpha: f64,
    pub process: ProcessKind,
    pub dimension: usize,
    pub seed: u64,
    pub replicates: usize,
    pub t_grid: Vec<f64>,
    pub lambdas: Vec<LambdaReport>,
    /// Fit of `ln D` against `ln lambda` over the uncensored grid points.
    pub rate: Option<RateFit>,
    /// Intensities whose discrepancy sat below the `1/sqrt(N)` noise floor.
    pub censored_lambdas: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Default)]
pub struct RunOptions<'a> {
    pub workers: Option<usize>,
    /// Called once per finished grid intensity.
    pub progress: Option<&'a (dyn Fn(&LambdaReport) + Sync)>,
}

/// Scaled-moment limits for region `i`, when kappa is constant on it.
///
/// For the directed nearest-neighbour functional on the line with kappa
/// equal to `c` on an interval union of length `p`, homogeneity gives
/// `lambda^(a-1) E[L] -> 2^-a G(1+a) c^(1-a) p` and
/// `lambda^(2a-1) Var[L] -> c^(1-2a) (V_a p + delta_a^2 p^2)`
/// (Poisson), without the `delta` term for the binomial process when the
/// region carries all of kappa's mass. At `c = 1` these are
/// `E * integral` and `V * integral + (delta * integral)^2`.
fn targets(plan: &ExperimentPlan, i: usize, warnings: &mut Vec<String>) -> Result<(Option<f64>, Option<f64>)> {
    let f = &plan.test_functions[i];
    if plan.functional.family != Family::DirectedNn
        || plan.density.dimension() != 1
        || f.kind() != TestFunctionKind::Indicator
    {
        return Ok((None, None));
    }
    let Some(c) = constant_density_on(&plan.density, f.region()) else {
        warnings.push(format!(
            "region {i}: kappa is not constant on the region; no closed-form targets"
        ));
        return Ok((None, None));
    };
    let a = plan.functional.alpha;
    let p = f.region().volume();
    let mean = exp_moment(a.value())? * c.powf(1.0 - a.value()) * p;
    let v = v_alpha(a)?;
    let var = match plan.process {
        ProcessKind::Poisson => {
            let delta = delta_alpha(a)?;
            Some(c.powf(1.0 - 2.0 * a.value()) * (v * p + delta * delta * p * p))
        }
        ProcessKind::Binomial => {
            let mass = plan.density.total_mass();
            if ((c * p) - mass).abs() <= 1e-9 * mass {
                Some(c.powf(1.0 - 2.0 * a.value()) * v * p)
            } else {
                warnings.push(format!(
                    "region {i}: binomial variance limit only tabulated when the region carries all of kappa"
                ));
                None
            }
        }
    };
    Ok((Some(mean), var))
}

/// The common value of kappa on `gamma` if it is constant and positive there.
fn constant_density_on(density: &DensitySpec, gamma: &Region) -> Option<f64> {
    let mut value: Option<f64> = None;
    let mut covered = 0.0;
    for (b, &w) in density.region().boxes().iter().zip(density.weights()) {
        let overlap: f64 = gamma.boxes().iter().map(|g| b.overlap_volume(g)).sum();
        if overlap <= 0.0 {
            continue;
        }
        match value {
            None => value = Some(w),
            Some(v) if v == w => {}
            Some(_) => return None,
        }
        covered += overlap;
    }
    let vol = gamma.volume();
    match value {
        Some(c) if c > 0.0 && (covered - vol).abs() <= 1e-12 * vol.max(1.0) => Some(c),
        _ => None,
    }
}

fn lambda_report(
    plan: &ExperimentPlan,
    lambda: f64,
    samples: &[StatVector],
    targets: &[(Option<f64>, Option<f64>)],
    warnings: &mut Vec<String>,
) -> Result<LambdaReport> {
    let summary = estimate_moments(samples)?;
    let (z, degenerate) = match standardize(samples, &summary) {
        Ok(z) => (Some(z), None),
        Err(Error::DegenerateComponent { index }) => (None, Some(index)),
        Err(e) => return Err(e),
    };
    if let Some(i) = degenerate {
        warnings.push(format!(
            "lambda {lambda}: component {i} has zero variance; normality diagnostics skipped"
        ));
    }
    let mut rows = Vec::with_capacity(summary.dimension());
    for i in 0..summary.dimension() {
        let ks = match &z {
            Some(z) => {
                let col: Vec<f64> = z.iter().map(|s| s.values[i]).collect();
                Some(ks_to_normal(&col)?)
            }
            None => None,
        };
        rows.push(RegionRow {
            region: i,
            kappa_integral: plan.density.integral_over(plan.test_functions[i].region()),
            mean: summary.mean[i],
            se_mean: summary.se_mean[i],
            var: summary.variance[i],
            se_var: summary.se_variance[i],
            scaled_mean: summary.mean[i] / lambda,
            se_scaled_mean: summary.se_mean[i] / lambda,
            scaled_var: summary.variance[i] / lambda,
            se_scaled_var: summary.se_variance[i] / lambda,
            target_mean: targets[i].0,
            target_var: targets[i].1,
            ks,
        });
    }
    let joint = match &z {
        Some(z) => {
            let rows: Vec<Vec<f64>> = z.iter().map(|s| s.values.clone()).collect();
            Some(product_form_discrepancy(&rows, &plan.t_grid, plan.grid_budget)?)
        }
        None => None,
    };
    Ok(LambdaReport {
        lambda,
        replicates: samples.len(),
        regions: rows,
        correlation: summary.correlation(),
        covariance: summary.covariance,
        joint_discrepancy: joint.as_ref().map(|j| j.sup),
        joint_argmax: joint.map(|j| j.argmax),
    })
}

/// Run every grid intensity of `plan` and assemble the report.
pub fn run_plan(plan: &ExperimentPlan, options: &RunOptions<'_>) -> Result<ExperimentReport> {
    plan.validate()?;
    let mut warnings = Vec::new();
    let targets = (0..plan.test_functions.len())
        .map(|i| targets(plan, i, &mut warnings))
        .collect::<Result<Vec<_>>>()?;
    let mut lambdas = Vec::with_capacity(plan.lambda_grid.len());
    for &lambda in &plan.lambda_grid {
        let samples = with_workers(options.workers, || run_replicates(plan, lambda))??;
        let report = lambda_report(plan, lambda, &samples, &targets, &mut warnings)?;
        if let Some(progress) = options.progress {
            progress(&report);
        }
        lambdas.push(report);
    }
    let (rate, censored_lambdas) = rate_over(&lambdas, plan.replicates, &mut warnings);
    Ok(ExperimentReport {
        family: plan.functional.family,
        k: plan.functional.k,
        alpha: plan.functional.alpha.value(),
        process: plan.process,
        dimension: plan.density.dimension(),
        seed: plan.seed,
        replicates: plan.replicates,
        t_grid: plan.t_grid.clone(),
        lambdas,
        rate,
        censored_lambdas,
        warnings,
    })
}

/// Rate fit over the joint discrepancies, leaving out grid points at or
/// below the Monte Carlo noise floor `1/sqrt(N)`.
pub fn rate_over(
    lambdas: &[LambdaReport],
    replicates: usize,
    warnings: &mut Vec<String>,
) -> (Option<RateFit>, Vec<f64>) {
    let floor = 1.0 / (replicates as f64).sqrt();
    let mut xs = Vec::new();
    let mut ds = Vec::new();
    let mut censored = Vec::new();
    for l in lambdas {
        match l.joint_discrepancy {
            Some(d) if d > floor => {
                xs.push(l.lambda);
                ds.push(d);
            }
            Some(d) => {
                warnings.push(format!(
                    "lambda {}: discrepancy {d:.3e} is below the noise floor {floor:.3e}; left out of the rate fit",
                    l.lambda
                ));
                censored.push(l.lambda);
            }
            None => censored.push(l.lambda),
        }
    }
    if lambdas.len() < 3 {
        return (None, censored);
    }
    match fit_rate(&xs, &ds) {
        Ok(fit) => (Some(fit), censored),
        Err(e) => {
            warnings.push(format!("no rate fit: {e}"));
            (None, censored)
        }
    }
}

/// Directed nearest-neighbour experiment on disjoint intervals of the line
/// with kappa equal to `kappas[i]` on `intervals[i]` and zero elsewhere.
#[allow(clippy::too_many_arguments)]
pub fn theorem42_experiment(
    alpha: WeightExponent,
    kappas: &[f64],
    intervals: &[(f64, f64)],
    lambda_grid: &[f64],
    replicates: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<ExperimentReport> {
    theorem42_plan(alpha, kappas, intervals, lambda_grid, replicates, seed)
        .and_then(|plan| run_plan(&plan, &RunOptions { workers, progress: None }))
}

/// The plan behind [`theorem42_experiment`].
pub fn theorem42_plan(
    alpha: WeightExponent,
    kappas: &[f64],
    intervals: &[(f64, f64)],
    lambda_grid: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<ExperimentPlan> {
    if kappas.len() != intervals.len() {
        return Err(Error::InvalidParameter(format!(
            "{} kappa values for {} intervals",
            kappas.len(),
            intervals.len()
        )));
    }
    if let Some(k) = kappas.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "kappa must be positive on every interval, got {k}"
        )));
    }
    let support = Region::intervals(intervals)?;
    let density = DensitySpec::relaxed(support, kappas.to_vec())?;
    let test_functions = intervals
        .iter()
        .map(|&(lo, hi)| Region::interval(lo, hi).map(TestFunctionSpec::indicator))
        .collect::<Result<Vec<_>>>()?;
    let first = lambda_grid.first().copied().unwrap_or(1.0);
    Ok(ExperimentPlan {
        density,
        test_functions,
        functional: FunctionalSpec::directed_nn(alpha, first)?,
        process: ProcessKind::Poisson,
        lambda_grid: lambda_grid.to_vec(),
        replicates,
        seed,
        t_grid: default_t_grid(),
        grid_budget: DEFAULT_GRID_BUDGET,
    })
}
