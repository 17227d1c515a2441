//! Nearest-neighbour stabilizing functionals and the region-restricted
//! statistics built from them.
//!
//! Two families are supported:
//!
//! * directed nearest neighbour: `xi(x; X) = d(x; X)^alpha`, the
//!   `alpha`-power of the distance from `x` to its nearest other point;
//! * undirected k-nearest-neighbour graph: `xi(x; X)` is half the sum of
//!   `length^alpha` over the kNG edges incident to `x`, so summing over all
//!   points gives the total weighted edge length (`alpha = 1` is the plain
//!   total length).
//!
//! Statistics use the scaled functional
//! `xi_lambda(x; X) = xi(lambda^{1/d} x; lambda^{1/d} X)`, which for both
//! families equals `lambda^{alpha/d} xi(x; X)`.

pub mod neighbors;
mod probe;

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

pub use neighbors::{brute_force_knn, Exclude, Neighbor, NeighborIndex};
pub use probe::{
    stabilization_probe, stabilization_probe_with, ProbeOptions, StabilizationProbeResult,
    TailFit,
};

use crate::error::{Error, Result};
use crate::point_process::PointConfiguration;
use crate::regions::Region;
use crate::special_fn::WeightExponent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "nn_directed")]
    DirectedNn,
    #[serde(rename = "knn_undirected")]
    UndirectedKnn,
}

/// Functional family, neighbour count, weight exponent and the scaling
/// intensity `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSpec {
    pub family: Family,
    pub k: usize,
    pub alpha: WeightExponent,
    pub lambda: f64,
}

impl FunctionalSpec {
    pub fn new(family: Family, k: usize, alpha: WeightExponent, lambda: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if family == Family::DirectedNn && k != 1 {
            return Err(Error::InvalidParameter(format!(
                "directed nearest-neighbour functional has k = 1, got {k}"
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and > 0, got {lambda}"
            )));
        }
        Ok(Self {
            family,
            k,
            alpha,
            lambda,
        })
    }

    pub fn directed_nn(alpha: WeightExponent, lambda: f64) -> Result<Self> {
        Self::new(Family::DirectedNn, 1, alpha, lambda)
    }

    pub fn undirected_knn(k: usize, alpha: WeightExponent, lambda: f64) -> Result<Self> {
        Self::new(Family::UndirectedKnn, k, alpha, lambda)
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        Self::new(self.family, self.k, self.alpha, lambda)
    }

    /// Factor `lambda^{alpha/d}` turning `xi` into `xi_lambda`.
    pub fn scale_factor(&self, dimension: usize) -> f64 {
        self.lambda.powf(self.alpha.value() / dimension as f64)
    }

    /// Factor `lambda^{1/d}` mapping distances into the dilated picture.
    pub fn length_factor(&self, dimension: usize) -> f64 {
        self.lambda.powf(1.0 / dimension as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunctionKind {
    Indicator,
    PiecewiseConstant,
}

/// Bounded test function supported on a region, constant on each box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    region: Region,
    kind: TestFunctionKind,
    values: Vec<f64>,
}

impl TestFunctionSpec {
    pub fn indicator(region: Region) -> Self {
        let values = vec![1.0; region.boxes().len()];
        Self {
            region,
            kind: TestFunctionKind::Indicator,
            values,
        }
    }

    pub fn piecewise(region: Region, values: Vec<f64>) -> Result<Self> {
        if values.len() != region.boxes().len() {
            return Err(Error::InvalidParameter(format!(
                "{} test-function values for {} boxes",
                values.len(),
                region.boxes().len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "test-function values must be finite".into(),
            ));
        }
        Ok(Self {
            region,
            kind: TestFunctionKind::PiecewiseConstant,
            values,
        })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn kind(&self) -> TestFunctionKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `x`, or `None` off the support.
    pub fn eval(&self, x: &[f64]) -> Option<f64> {
        self.region.locate(x).map(|b| self.values[b])
    }

    pub fn bound(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        Self {
            region: self.region.translated(shift),
            kind: self.kind,
            values: self.values.clone(),
        }
    }
}

/// `(T_1, ..., T_m)` for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatVector {
    pub values: Vec<f64>,
    pub lambda: f64,
    pub spec: FunctionalSpec,
}

/// Unscaled score of one point plus the distance it depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PointScore {
    xi: f64,
    /// Distance to the farthest point the score reads (nearest neighbour
    /// or longest incident kNG edge), in original units.
    radius: f64,
}

/// Scores of the points selected by `wanted`, `None` for the rest.
fn point_scores(
    config: &PointConfiguration,
    family: Family,
    k: usize,
    alpha: f64,
    wanted: impl Fn(usize) -> bool,
) -> Result<Vec<Option<PointScore>>> {
    let n = config.len();
    let selected: Vec<usize> = (0..n).filter(|&i| wanted(i)).collect();
    let mut out = vec![None; n];
    if selected.is_empty() {
        return Ok(out);
    }
    let index = NeighborIndex::new(config);
    match family {
        Family::DirectedNn => {
            for i in selected {
                let r = index.nearest_of(i)?.distance();
                out[i] = Some(PointScore {
                    xi: r.powf(alpha),
                    radius: r,
                });
            }
        }
        Family::UndirectedKnn => {
            let edges = knn_graph_edges(&index, k)?;
            let mut sums = vec![0.0; n];
            let mut longest = vec![0.0f64; n];
            for &(a, b, len) in &edges {
                let w = len.powf(alpha);
                sums[a] += w;
                sums[b] += w;
                longest[a] = longest[a].max(len);
                longest[b] = longest[b].max(len);
            }
            for i in selected {
                out[i] = Some(PointScore {
                    xi: 0.5 * sums[i],
                    radius: longest[i],
                });
            }
        }
    }
    Ok(out)
}

/// Undirected kNG edge list `(a, b, length)` with `a < b`, sorted.
fn knn_graph_edges(index: &NeighborIndex<'_>, k: usize) -> Result<Vec<(usize, usize, f64)>> {
    let n = index.config().len();
    let mut edges = Vec::with_capacity(n * k);
    for i in 0..n {
        for nb in index.knn_of(i, k)? {
            let (a, b) = if i < nb.index { (i, nb.index) } else { (nb.index, i) };
            edges.push((a, b, nb.distance()));
        }
    }
    edges.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    edges.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);
    Ok(edges)
}

/// Total `length^alpha` of the undirected kNG.
pub fn knn_graph_weight(config: &PointConfiguration, k: usize, alpha: WeightExponent) -> Result<f64> {
    let index = NeighborIndex::new(config);
    Ok(knn_graph_edges(&index, k)?
        .iter()
        .map(|e| e.2.powf(alpha.value()))
        .sum())
}

/// Euclidean distance from `x` to the nearest point of `config` other than `x`.
pub fn nn_distance(x: &[f64], config: &PointConfiguration) -> Result<f64> {
    let index = NeighborIndex::new(config);
    Ok(index.knn_at(x, Exclude::Location(x), 1)?[0].distance())
}

/// The `k` nearest points to `x` (excluding `x`), nearest first.
pub fn knn_neighbors(x: &[f64], config: &PointConfiguration, k: usize) -> Result<Vec<Vec<f64>>> {
    let index = NeighborIndex::new(config);
    Ok(index
        .knn_at(x, Exclude::Location(x), k)?
        .into_iter()
        .map(|nb| config.point(nb.index).to_vec())
        .collect())
}

/// Index of `x` in `config`, appending it when absent.
fn with_point<'c>(x: &[f64], config: &'c PointConfiguration) -> (Cow<'c, PointConfiguration>, usize) {
    match config.position_of(x) {
        Some(i) => (Cow::Borrowed(config), i),
        None => {
            let mut owned = config.clone();
            owned.push(x);
            let i = owned.len() - 1;
            (Cow::Owned(owned), i)
        }
    }
}

/// Half the `alpha`-weighted length of kNG edges incident to `x` in
/// `config` (with `x` added if it is not already a point).
pub fn xi_knn(x: &[f64], config: &PointConfiguration, spec: &FunctionalSpec) -> Result<f64> {
    let (cfg, i) = with_point(x, config);
    let scores = point_scores(&cfg, Family::UndirectedKnn, spec.k, spec.alpha.value(), |j| j == i)?;
    Ok(scores[i].map_or(0.0, |s| s.xi))
}

/// `d(x; X)^alpha`.
pub fn xi_directed_nn(x: &[f64], config: &PointConfiguration, alpha: WeightExponent) -> Result<f64> {
    Ok(nn_distance(x, config)?.powf(alpha.value()))
}

/// Evaluate the unscaled functional of `spec`'s family at point `i`.
pub fn xi_at(config: &PointConfiguration, i: usize, spec: &FunctionalSpec) -> Result<f64> {
    let scores = point_scores(config, spec.family, spec.k, spec.alpha.value(), |j| j == i)?;
    Ok(scores[i].map_or(0.0, |s| s.xi))
}

/// `L^alpha(X; G)`: sum of `d(x; X)^alpha` over points of `X` in `G`, with
/// neighbours taken from the whole configuration.
pub fn l_alpha(config: &PointConfiguration, gamma: &Region, alpha: WeightExponent) -> Result<f64> {
    let scores = point_scores(config, Family::DirectedNn, 1, alpha.value(), |i| {
        gamma.contains(config.point(i))
    })?;
    Ok(scores.iter().flatten().map(|s| s.xi).sum())
}

fn check_disjoint(fs: &[TestFunctionSpec]) -> Result<()> {
    for i in 0..fs.len() {
        for j in (i + 1)..fs.len() {
            if fs[i].region().overlaps(fs[j].region()) {
                return Err(Error::OverlappingRegions { first: i, second: j });
            }
        }
    }
    Ok(())
}

fn check_dimensions(config: &PointConfiguration, fs: &[TestFunctionSpec]) -> Result<()> {
    match fs
        .iter()
        .find(|f| f.region().dimension() != config.dimension())
    {
        Some(f) => Err(Error::InvalidParameter(format!(
            "test function lives in dimension {}, configuration in {}",
            f.region().dimension(),
            config.dimension()
        ))),
        None => Ok(()),
    }
}

/// Shared core of the statistic evaluations: per-region sums of
/// `xi_lambda * f` over points passing `keep` (given the dilated radius).
fn weighted_sums(
    config: &PointConfiguration,
    fs: &[TestFunctionSpec],
    spec: &FunctionalSpec,
    keep: impl Fn(f64) -> bool,
) -> Result<Vec<f64>> {
    check_dimensions(config, fs)?;
    let d = config.dimension();
    // region membership and value per point
    let hits: Vec<Option<(usize, f64)>> = config
        .points()
        .map(|p| {
            fs.iter()
                .enumerate()
                .find_map(|(r, f)| f.eval(p).map(|v| (r, v)))
        })
        .collect();
    let scores = point_scores(config, spec.family, spec.k, spec.alpha.value(), |i| {
        hits[i].is_some_and(|(_, v)| v != 0.0)
    })?;
    let scale = spec.scale_factor(d);
    let length = spec.length_factor(d);
    let mut sums = vec![0.0; fs.len()];
    for (hit, score) in hits.iter().zip(&scores) {
        if let (Some((r, v)), Some(s)) = (hit, score) {
            if keep(s.radius * length) {
                sums[*r] += s.xi * v;
            }
        }
    }
    Ok(sums.into_iter().map(|s| s * scale).collect())
}

/// `T = sum over x in X and the support of f of xi_lambda(x; X) f(x)`.
pub fn t_statistic(
    config: &PointConfiguration,
    f: &TestFunctionSpec,
    spec: &FunctionalSpec,
) -> Result<f64> {
    Ok(weighted_sums(config, std::slice::from_ref(f), spec, |_| true)?[0])
}

/// Statistics for several disjoint regions on one shared configuration.
pub fn t_vector(
    config: &PointConfiguration,
    fs: &[TestFunctionSpec],
    spec: &FunctionalSpec,
) -> Result<StatVector> {
    check_disjoint(fs)?;
    Ok(StatVector {
        values: weighted_sums(config, fs, spec, |_| true)?,
        lambda: spec.lambda,
        spec: *spec,
    })
}

/// [`t_statistic`] restricted to points whose dilated radius (nearest
/// neighbour distance, or longest incident kNG edge) is at most `threshold`.
pub fn thresholded_t(
    config: &PointConfiguration,
    f: &TestFunctionSpec,
    spec: &FunctionalSpec,
    threshold: f64,
) -> Result<f64> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "threshold must be >= 0, got {threshold}"
        )));
    }
    Ok(weighted_sums(config, std::slice::from_ref(f), spec, |r| r <= threshold)?[0])
}

/// Default threshold `s * ln(lambda)`.
pub fn default_threshold(stab_constant: f64, lambda: f64) -> f64 {
    stab_constant * lambda.ln()
}
