//! Empirical radius of stabilization.
//!
//! For a probe location `x` drawn from kappa, the radius is the smallest
//! dilated distance `r` such that `xi(x; .)` is unchanged whenever every
//! point farther than `lambda^{-1/d} r` from `x` is replaced. Replacements
//! are the empty exterior plus `resample_count` fresh Poisson samples. The
//! search is a bisection, so the radius is reported to within
//! `ProbeOptions::tolerance` from above.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::neighbors::dist2;
use super::{xi_at, FunctionalSpec};
use crate::error::{Error, Result};
use crate::point_process::{sample_poisson_with, DensitySpec, PointConfiguration};
use crate::rng::{derive_seed, stream_rng};
use crate::stats::linear_fit;

const PROBE_LABEL: u64 = 0x5EED_0F_57AB;
const MAX_REDRAWS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub probe_count: usize,
    pub resample_count: usize,
    /// Largest dilated radius searched; defaults to the dilated diameter
    /// of the support, beyond which nothing can change.
    pub max_radius: Option<f64>,
    /// Bisection stops once the bracket is this narrow (dilated units).
    pub tolerance: f64,
    pub tail_grid_points: usize,
    /// Grid nodes with fewer exceedances than this are left out of the fit.
    pub min_tail_count: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            probe_count: 500,
            resample_count: 8,
            max_radius: None,
            tolerance: 1e-6,
            tail_grid_points: 25,
            min_tail_count: 10,
        }
    }
}

/// Fitted `ln P[R > t] ~ slope * t + intercept` over the upper tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizationProbeResult {
    /// One radius per probe, in dilated units. Censored radii are lower bounds.
    pub radii: Vec<f64>,
    /// Unperturbed functional value at each probe location.
    pub xi_values: Vec<f64>,
    pub censored: Vec<bool>,
    pub t_grid: Vec<f64>,
    /// Estimated `P[R > t]` at each grid node.
    pub tail_probs: Vec<f64>,
    /// Censored radii exceeding each grid node.
    pub censored_counts: Vec<usize>,
    pub fit: Option<TailFit>,
}

impl StabilizationProbeResult {
    pub fn decay_slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

/// Probe the spec's functional at `probe_count` random locations.
pub fn stabilization_probe(
    density: &DensitySpec,
    lambda: f64,
    spec: &FunctionalSpec,
    probe_count: usize,
    resample_count: usize,
    seed: u64,
) -> Result<StabilizationProbeResult> {
    let options = ProbeOptions {
        probe_count,
        resample_count,
        ..ProbeOptions::default()
    };
    let spec = *spec;
    stabilization_probe_with(density, lambda, &options, seed, &move |cfg, i| {
        xi_at(cfg, i, &spec)
    })
}

/// Probe an arbitrary functional `xi(config, index)`.
pub fn stabilization_probe_with<F>(
    density: &DensitySpec,
    lambda: f64,
    options: &ProbeOptions,
    seed: u64,
    xi: &F,
) -> Result<StabilizationProbeResult>
where
    F: Fn(&PointConfiguration, usize) -> Result<f64> + Sync,
{
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "stabilization probe needs lambda >= 1, got {lambda}"
        )));
    }
    if options.probe_count == 0 {
        return Err(Error::InvalidParameter("probe_count must be >= 1".into()));
    }
    if !(options.tolerance > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be > 0".into()));
    }
    let d = density.dimension();
    let length = lambda.powf(1.0 / d as f64);
    let max_radius = match options.max_radius {
        Some(r) if r > 0.0 => r,
        Some(r) => {
            return Err(Error::InvalidParameter(format!(
                "max_radius must be > 0, got {r}"
            )))
        }
        None => {
            let (lo, hi) = density.region().bounding_box();
            dist2(&lo, &hi).sqrt() * length * (1.0 + 1e-9)
        }
    };
    let seed = derive_seed(seed, PROBE_LABEL);

    let outcomes: Vec<(f64, f64, bool)> = (0..options.probe_count)
        .into_par_iter()
        .map(|p| probe_one(density, lambda, length, max_radius, options, seed, p as u64, xi))
        .collect::<Result<_>>()?;
    let radii = outcomes.iter().map(|o| o.0).collect();
    let xi_values = outcomes.iter().map(|o| o.1).collect();
    let censored = outcomes.iter().map(|o| o.2).collect();
    Ok(summarize(radii, xi_values, censored, options))
}

#[allow(clippy::too_many_arguments)]
fn probe_one<F>(
    density: &DensitySpec,
    lambda: f64,
    length: f64,
    max_radius: f64,
    options: &ProbeOptions,
    seed: u64,
    probe: u64,
    xi: &F,
) -> Result<(f64, f64, bool)>
where
    F: Fn(&PointConfiguration, usize) -> Result<f64> + Sync,
{
    let mut rng = stream_rng(seed, probe);
    let d = density.dimension();
    let mut x = Vec::with_capacity(d);
    let mut base = PointConfiguration::empty(d);
    let mut original = None;
    for _ in 0..MAX_REDRAWS {
        base = sample_poisson_with(density, lambda, &mut rng)?;
        x.clear();
        density.sample_location(&mut rng, &mut x);
        if let Ok(v) = xi(&assemble(&x, &base, None, f64::INFINITY), 0) {
            original = Some(v);
            break;
        }
    }
    let original = original.ok_or_else(|| {
        Error::InvalidParameter(format!(
            "probe {probe}: functional undefined on {MAX_REDRAWS} consecutive draws; raise lambda"
        ))
    })?;
    let exteriors: Vec<PointConfiguration> = (0..options.resample_count)
        .map(|_| sample_poisson_with(density, lambda, &mut rng))
        .collect::<Result<_>>()?;

    let invariant = |r: f64| -> bool {
        let rho = r / length;
        let same = |cfg: PointConfiguration| {
            xi(&cfg, 0).is_ok_and(|v| {
                v == original || (v - original).abs() <= 1e-12 * original.abs().max(v.abs())
            })
        };
        same(assemble(&x, &base, None, rho))
            && exteriors
                .iter()
                .all(|ext| same(assemble(&x, &base, Some(ext), rho)))
    };

    if invariant(0.0) {
        return Ok((0.0, original, false));
    }
    if !invariant(max_radius) {
        return Ok((max_radius, original, true));
    }
    let (mut lo, mut hi) = (0.0, max_radius);
    while hi - lo > options.tolerance {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if invariant(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi, original, false))
}

/// `x` first, then the points of `base` within `rho` of `x`, then the
/// points of `exterior` farther than `rho`.
fn assemble(
    x: &[f64],
    base: &PointConfiguration,
    exterior: Option<&PointConfiguration>,
    rho: f64,
) -> PointConfiguration {
    let rho2 = rho * rho;
    let mut cfg = PointConfiguration::empty(x.len());
    cfg.push(x);
    for p in base.points() {
        if dist2(p, x) <= rho2 {
            cfg.push(p);
        }
    }
    if let Some(ext) = exterior {
        for p in ext.points() {
            if dist2(p, x) > rho2 {
                cfg.push(p);
            }
        }
    }
    cfg
}

fn summarize(
    radii: Vec<f64>,
    xi_values: Vec<f64>,
    censored: Vec<bool>,
    options: &ProbeOptions,
) -> StabilizationProbeResult {
    let n = radii.len() as f64;
    let top = radii.iter().cloned().fold(0.0, f64::max);
    let g = options.tail_grid_points.max(2);
    let t_grid: Vec<f64> = (0..g).map(|j| top * j as f64 / (g - 1) as f64).collect();
    let mut counts = Vec::with_capacity(g);
    let mut censored_counts = Vec::with_capacity(g);
    for &t in &t_grid {
        counts.push(radii.iter().filter(|&&r| r > t).count());
        censored_counts.push(
            radii
                .iter()
                .zip(&censored)
                .filter(|(&r, &c)| c && r > t)
                .count(),
        );
    }
    let tail_probs: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();

    let mut sorted = radii.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let usable = |j: &usize| counts[*j] >= options.min_tail_count.max(1);
    let mut fit_nodes: Vec<usize> = (0..g).filter(|j| t_grid[*j] >= median && usable(j)).collect();
    if fit_nodes.len() < 3 {
        fit_nodes = (0..g).filter(usable).collect();
    }
    let fit = (fit_nodes.len() >= 3)
        .then(|| {
            let ts: Vec<f64> = fit_nodes.iter().map(|&j| t_grid[j]).collect();
            let ys: Vec<f64> = fit_nodes.iter().map(|&j| tail_probs[j].ln()).collect();
            linear_fit(&ts, &ys).map(|l| TailFit {
                slope: l.slope,
                intercept: l.intercept,
                r_squared: l.r_squared,
                points_used: ts.len(),
            })
        })
        .flatten();

    StabilizationProbeResult {
        radii,
        xi_values,
        censored,
        t_grid,
        tail_probs,
        censored_counts,
        fit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{nn_distance, Family};
    use crate::regions::Region;
    use crate::special_fn::WeightExponent;

    fn unit() -> DensitySpec {
        DensitySpec::homogeneous(Region::interval(0.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn constant_functional_has_zero_radius() {
        let opts = ProbeOptions {
            probe_count: 20,
            resample_count: 3,
            ..Default::default()
        };
        let res = stabilization_probe_with(&unit(), 50.0, &opts, 1, &|_: &PointConfiguration, _| Ok(1.0))
            .unwrap();
        assert!(res.radii.iter().all(|&r| r == 0.0));
        assert!(res.fit.is_none());
        assert!(res.tail_probs.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn nn_radius_bounded_below_by_dilated_distance() {
        // With the exterior removed, invariance needs the nearest neighbour
        // inside the ball, so the radius equals lambda * d(x) up to tolerance.
        let lambda = 40.0;
        let opts = ProbeOptions {
            probe_count: 30,
            resample_count: 2,
            ..Default::default()
        };
        let res = stabilization_probe_with(&unit(), lambda, &opts, 3, &|cfg: &PointConfiguration, i| {
            nn_distance(cfg.point(i), cfg)
        })
        .unwrap();
        for (&r, &v) in res.radii.iter().zip(&res.xi_values) {
            assert!(r >= lambda * v * (1.0 - 1e-12), "{r} < {}", lambda * v);
            assert!(r <= lambda * v + opts.tolerance);
        }
        let spec = FunctionalSpec::new(Family::DirectedNn, 1, WeightExponent::new(1.0).unwrap(), lambda).unwrap();
        let res2 = stabilization_probe(&unit(), lambda, &spec, 30, 2, 3).unwrap();
        assert_eq!(res.radii, res2.radii);
    }

    #[test]
    fn censoring_when_search_window_too_small() {
        let opts = ProbeOptions {
            probe_count: 10,
            resample_count: 2,
            max_radius: Some(1e-6),
            ..Default::default()
        };
        let spec = FunctionalSpec::directed_nn(WeightExponent::new(1.0).unwrap(), 10.0).unwrap();
        let res = stabilization_probe_with(&unit(), 10.0, &opts, 9, &|c: &PointConfiguration, i| xi_at(c, i, &spec))
            .unwrap();
        assert!(res.censored.iter().all(|&c| c));
        assert_eq!(res.censored_counts[0], 10);
    }

    #[test]
    fn rejects_bad_arguments() {
        let spec = FunctionalSpec::directed_nn(WeightExponent::new(1.0).unwrap(), 10.0).unwrap();
        assert!(stabilization_probe(&unit(), 10.0, &spec, 0, 2, 1).is_err());
        assert!(stabilization_probe(&unit(), 0.5, &spec, 5, 2, 1).is_err());
    }

    #[test]
    fn tail_is_nonincreasing() {
        let spec = FunctionalSpec::undirected_knn(2, WeightExponent::new(1.0).unwrap(), 30.0).unwrap();
        let res = stabilization_probe(&unit(), 30.0, &spec, 40, 3, 4).unwrap();
        assert!(res.tail_probs.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(res.radii.len(), 40);
    }
}
