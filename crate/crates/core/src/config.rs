//! JSON run configuration.
//!
//! ```json
//! {
//!   "dimension": 1,
//!   "density": { "support": [{"lower": [0], "upper": [1]}], "homogeneous": true },
//!   "regions": [[{"lower": [0], "upper": [1]}]],
//!   "functional": { "family": "nn_directed", "alpha": 1.0 },
//!   "lambda_grid": [2000],
//!   "replicates": 20000,
//!   "seed": 42
//! }
//! ```
//!
//! Unknown keys are rejected everywhere. Seed, worker count and output
//! directory resolve as flag, then config, then `STABCLT_SEED` /
//! `STABCLT_WORKERS` / `STABCLT_OUT`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::experiments::{default_t_grid, ExperimentPlan, ProcessKind, DEFAULT_GRID_BUDGET};
use crate::functionals::{Family, FunctionalSpec, ProbeOptions, TestFunctionSpec};
use crate::point_process::{DensitySpec, Normalization};
use crate::regions::{AxisBox, Region};
use crate::special_fn::WeightExponent;

pub const ENV_SEED: &str = "STABCLT_SEED";
pub const ENV_WORKERS: &str = "STABCLT_WORKERS";
pub const ENV_OUT: &str = "STABCLT_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub support: Vec<AxisBox>,
    /// Per-box values of kappa; omitted when `homogeneous` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Uniform density normalized to unit mass over the support.
    #[serde(default)]
    pub homogeneous: bool,
    /// `probability` (default) insists on unit mass; `relaxed` accepts any
    /// bounded profile.
    #[serde(default = "default_normalization")]
    pub normalization: Normalization,
}

fn default_normalization() -> Normalization {
    Normalization::Probability
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    pub family: Family,
    #[serde(default = "one")]
    pub k: usize,
    pub alpha: f64,
}

fn one() -> usize {
    1
}

/// Acceptance thresholds applied with `--check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    /// Scaled moments must lie within this many standard errors of their
    /// closed-form targets, or within the absolute tolerances below.
    #[serde(default = "three")]
    pub se_multiplier: f64,
    /// Finite-lambda bias of the scaled mean is O(1/lambda) and can exceed
    /// a few standard errors at large N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_abs_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var_abs_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_joint_discrepancy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_abs_correlation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_band: Option<(f64, f64)>,
}

fn three() -> f64 {
    3.0
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self {
            se_multiplier: 3.0,
            mean_abs_tolerance: None,
            var_abs_tolerance: None,
            max_joint_discrepancy: None,
            max_abs_correlation: None,
            rate_band: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// Intensity to probe at; defaults to the first grid value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default = "probe_count")]
    pub probe_count: usize,
    #[serde(default = "resample_count")]
    pub resample_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_radius: Option<f64>,
    #[serde(default = "probe_tolerance")]
    pub tolerance: f64,
    #[serde(default = "tail_grid_points")]
    pub tail_grid_points: usize,
    #[serde(default = "min_tail_count")]
    pub min_tail_count: usize,
}

fn probe_count() -> usize {
    ProbeOptions::default().probe_count
}
fn resample_count() -> usize {
    ProbeOptions::default().resample_count
}
fn probe_tolerance() -> f64 {
    ProbeOptions::default().tolerance
}
fn tail_grid_points() -> usize {
    ProbeOptions::default().tail_grid_points
}
fn min_tail_count() -> usize {
    ProbeOptions::default().min_tail_count
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            lambda: None,
            probe_count: probe_count(),
            resample_count: resample_count(),
            max_radius: None,
            tolerance: probe_tolerance(),
            tail_grid_points: tail_grid_points(),
            min_tail_count: min_tail_count(),
        }
    }
}

impl ProbeConfig {
    pub fn options(&self) -> ProbeOptions {
        ProbeOptions {
            probe_count: self.probe_count,
            resample_count: self.resample_count,
            max_radius: self.max_radius,
            tolerance: self.tolerance,
            tail_grid_points: self.tail_grid_points,
            min_tail_count: self.min_tail_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub density: DensityConfig,
    /// Each region is a list of disjoint boxes.
    pub regions: Vec<Vec<AxisBox>>,
    /// Per-box test-function values for each region; `null` or absent
    /// means the indicator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_values: Option<Vec<Option<Vec<f64>>>>,
    pub functional: FunctionalConfig,
    #[serde(default = "default_process")]
    pub process: ProcessKind,
    pub lambda_grid: Vec<f64>,
    pub replicates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<ChecksConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeConfig>,
}

fn default_process() -> ProcessKind {
    ProcessKind::Poisson
}

/// Problems found while reading or resolving a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        ConfigError(e.to_string())
    }
}

/// Default seed when neither flag, config nor environment sets one.
pub const DEFAULT_SEED: u64 = 0;

impl RunConfig {
    /// Parse JSON text; diagnostics carry the line and column.
    pub fn from_json(text: &str) -> std::result::Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))
    }

    pub fn from_path(path: &std::path::Path) -> std::result::Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn density_spec(&self) -> std::result::Result<DensitySpec, ConfigError> {
        let d = &self.density;
        let region = Region::new(self.dimension, d.support.clone())
            .map_err(|e| ConfigError(format!("density.support: {e}")))?;
        let spec = match (d.homogeneous, &d.weights) {
            (true, Some(_)) => {
                return Err(ConfigError(
                    "density: give either `weights` or `homogeneous: true`, not both".into(),
                ))
            }
            (true, None) => DensitySpec::homogeneous(region),
            (false, Some(w)) => DensitySpec::new(region, w.clone(), d.normalization),
            (false, None) => {
                return Err(ConfigError(
                    "density: missing field `weights` (or set `homogeneous: true`)".into(),
                ))
            }
        };
        spec.map_err(|e| ConfigError(format!("density: {e}")))
    }

    pub fn functional_spec(&self, lambda: f64) -> std::result::Result<FunctionalSpec, ConfigError> {
        let f = &self.functional;
        let alpha =
            WeightExponent::new(f.alpha).map_err(|e| ConfigError(format!("functional.alpha: {e}")))?;
        FunctionalSpec::new(f.family, f.k, alpha, lambda)
            .map_err(|e| ConfigError(format!("functional: {e}")))
    }

    pub fn test_functions(&self) -> std::result::Result<Vec<TestFunctionSpec>, ConfigError> {
        if let Some(tv) = &self.test_values {
            if tv.len() != self.regions.len() {
                return Err(ConfigError(format!(
                    "test_values: {} entries for {} regions",
                    tv.len(),
                    self.regions.len()
                )));
            }
        }
        self.regions
            .iter()
            .enumerate()
            .map(|(i, boxes)| {
                let region = Region::new(self.dimension, boxes.clone())
                    .map_err(|e| ConfigError(format!("regions[{i}]: {e}")))?;
                match self.test_values.as_ref().and_then(|tv| tv[i].clone()) {
                    None => Ok(TestFunctionSpec::indicator(region)),
                    Some(values) => TestFunctionSpec::piecewise(region, values)
                        .map_err(|e| ConfigError(format!("test_values[{i}]: {e}"))),
                }
            })
            .collect()
    }

    /// Validated experiment plan with the given seed.
    pub fn plan(&self, seed: u64) -> std::result::Result<ExperimentPlan, ConfigError> {
        let first = self.lambda_grid.first().copied().ok_or_else(|| {
            ConfigError("lambda_grid: at least one intensity is required".into())
        })?;
        let plan = ExperimentPlan {
            density: self.density_spec()?,
            test_functions: self.test_functions()?,
            functional: self.functional_spec(first)?,
            process: self.process,
            lambda_grid: self.lambda_grid.clone(),
            replicates: self.replicates,
            seed,
            t_grid: self.t_grid.clone().unwrap_or_else(default_t_grid),
            grid_budget: self.grid_budget.unwrap_or(DEFAULT_GRID_BUDGET),
        };
        plan.validate()?;
        Ok(plan)
    }

    /// SHA-256 over the canonical serialization, with the run-local keys
    /// (`workers`, `output`) left out and the resolved seed filled in.
    pub fn hash(&self, seed: u64) -> String {
        let mut canonical = self.clone();
        canonical.workers = None;
        canonical.output = None;
        canonical.seed = Some(seed);
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Resolve one setting by precedence flag > config > environment.
pub fn resolve<T: std::str::FromStr>(
    flag: Option<T>,
    config: Option<T>,
    env_key: &str,
    env: &dyn Fn(&str) -> Option<String>,
) -> std::result::Result<Option<T>, ConfigError> {
    if flag.is_some() {
        return Ok(flag);
    }
    if config.is_some() {
        return Ok(config);
    }
    match env(env_key) {
        None => Ok(None),
        Some(raw) => raw
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| ConfigError(format!("{env_key}={raw:?} is not a valid value"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "dimension": 1,
        "density": {"support": [{"lower": [0], "upper": [1]}], "homogeneous": true},
        "regions": [[{"lower": [0], "upper": [1]}]],
        "functional": {"family": "nn_directed", "alpha": 1.0},
        "lambda_grid": [100],
        "replicates": 10
    }"#;

    #[test]
    fn minimal_config_builds_a_plan() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        let plan = cfg.plan(5).unwrap();
        assert_eq!(plan.seed, 5);
        assert_eq!(plan.t_grid.len(), 13);
        assert_eq!(plan.process, ProcessKind::Poisson);
    }

    #[test]
    fn unknown_and_missing_keys() {
        let bad = MINIMAL.replace("\"replicates\"", "\"replicate\"");
        let e = RunConfig::from_json(&bad).unwrap_err();
        assert!(e.0.contains("replicate"), "{e}");
        assert!(e.0.contains("line"), "{e}");
        let no_density = r#"{
            "dimension": 1,
            "regions": [[{"lower": [0], "upper": [1]}]],
            "functional": {"family": "nn_directed", "alpha": 1.0},
            "lambda_grid": [100],
            "replicates": 10
        }"#;
        let e = RunConfig::from_json(no_density).unwrap_err();
        assert!(e.0.contains("`density`"), "{e}");
    }

    #[test]
    fn semantic_errors() {
        let mut cfg = RunConfig::from_json(MINIMAL).unwrap();
        cfg.functional.alpha = -1.0;
        assert!(cfg.plan(0).unwrap_err().0.contains("alpha"));
        let mut cfg = RunConfig::from_json(MINIMAL).unwrap();
        cfg.density.homogeneous = false;
        assert!(cfg.plan(0).unwrap_err().0.contains("weights"));
        let mut cfg = RunConfig::from_json(MINIMAL).unwrap();
        cfg.density.homogeneous = false;
        cfg.density.weights = Some(vec![2.0]);
        assert!(cfg.plan(0).is_err());
        cfg.density.normalization = Normalization::Relaxed;
        assert!(cfg.plan(0).is_ok());
    }

    #[test]
    fn hash_ignores_run_local_keys() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        let mut other = cfg.clone();
        other.workers = Some(8);
        other.output = Some("elsewhere".into());
        assert_eq!(cfg.hash(1), other.hash(1));
        assert_ne!(cfg.hash(1), cfg.hash(2));
        assert_eq!(cfg.hash(1).len(), 64);
    }

    #[test]
    fn precedence() {
        let env = |k: &str| (k == ENV_SEED).then(|| "7".to_string());
        assert_eq!(resolve(Some(1u64), Some(2), ENV_SEED, &env).unwrap(), Some(1));
        assert_eq!(resolve(None, Some(2u64), ENV_SEED, &env).unwrap(), Some(2));
        assert_eq!(resolve::<u64>(None, None, ENV_SEED, &env).unwrap(), Some(7));
        assert_eq!(resolve::<u64>(None, None, ENV_OUT, &env).unwrap(), None);
        let junk = |_: &str| Some("x".to_string());
        assert!(resolve::<u64>(None, None, ENV_SEED, &junk).is_err());
    }
}
