//! Poisson, binomial and homogeneous line processes with piecewise-constant
//! densities on unions of boxes.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regions::{AxisBox, Region};
use crate::rng::stream_rng;

/// How the per-box weights of a [`DensitySpec`] are constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// A probability density: weights integrate to one.
    Probability,
    /// Any bounded nonnegative intensity profile.
    Relaxed,
}

/// Piecewise-constant density `kappa` on a union of boxes: box `b`
/// carries the constant value `weights[b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    region: Region,
    weights: Vec<f64>,
    normalization: Normalization,
}

const NORMALIZATION_TOL: f64 = 1e-9;

impl DensitySpec {
    pub fn new(region: Region, weights: Vec<f64>, normalization: Normalization) -> Result<Self> {
        if weights.len() != region.boxes().len() {
            return Err(Error::InvalidDensity(format!(
                "{} weights for {} boxes",
                weights.len(),
                region.boxes().len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidDensity(format!(
                "weights must be finite and >= 0, got {w}"
            )));
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::InvalidDensity(
                "at least one weight must be positive".into(),
            ));
        }
        let spec = Self {
            region,
            weights,
            normalization,
        };
        if normalization == Normalization::Probability {
            let mass = spec.total_mass();
            if (mass - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidDensity(format!(
                    "probability density integrates to {mass}, expected 1"
                )));
            }
        }
        Ok(spec)
    }

    /// Uniform probability density on the region.
    pub fn homogeneous(region: Region) -> Result<Self> {
        let v = region.volume();
        let weights = vec![1.0 / v; region.boxes().len()];
        Self::new(region, weights, Normalization::Probability)
    }

    /// Intensity profile with the given per-box values, no normalization.
    pub fn relaxed(region: Region, weights: Vec<f64>) -> Result<Self> {
        Self::new(region, weights, Normalization::Relaxed)
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn dimension(&self) -> usize {
        self.region.dimension()
    }

    pub fn sup_norm(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    pub fn total_mass(&self) -> f64 {
        self.box_masses().sum()
    }

    fn box_masses(&self) -> impl Iterator<Item = f64> + '_ {
        self.region
            .boxes()
            .iter()
            .zip(&self.weights)
            .map(|(b, w)| w * b.volume())
    }

    /// Density value at `x` (zero off the support).
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.region.locate(x).map_or(0.0, |b| self.weights[b])
    }

    /// Integral of kappa over `gamma`.
    pub fn integral_over(&self, gamma: &Region) -> f64 {
        self.region
            .boxes()
            .iter()
            .zip(&self.weights)
            .map(|(b, w)| w * gamma.boxes().iter().map(|g| b.overlap_volume(g)).sum::<f64>())
            .sum()
    }

    pub fn translated(&self, shift: &[f64]) -> DensitySpec {
        DensitySpec {
            region: self.region.translated(shift),
            weights: self.weights.clone(),
            normalization: self.normalization,
        }
    }

    /// One point drawn from kappa normalized to a probability density.
    pub fn sample_location<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        let masses: Vec<f64> = self.box_masses().collect();
        let b = pick_weighted(&masses, rng);
        push_uniform_in_box(&self.region.boxes()[b], rng, out);
    }
}

fn pick_weighted<R: Rng + ?Sized>(masses: &[f64], rng: &mut R) -> usize {
    let total: f64 = masses.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &m) in masses.iter().enumerate() {
        if u < m {
            return i;
        }
        u -= m;
    }
    // rounding fallthrough: last box with positive mass
    masses.iter().rposition(|&m| m > 0.0).unwrap_or(0)
}

fn push_uniform_in_box<R: Rng + ?Sized>(b: &AxisBox, rng: &mut R, out: &mut Vec<f64>) {
    for (&lo, &hi) in b.lower().iter().zip(b.upper()) {
        let v = lo + rng.random::<f64>() * (hi - lo);
        out.push(if v < hi { v } else { hi.next_down() });
    }
}

/// Where a configuration came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub stream: u64,
}

/// Ordered finite point set; the order is the generation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConfiguration {
    dimension: usize,
    coords: Vec<f64>,
    provenance: Option<Provenance>,
}

impl PointConfiguration {
    pub fn empty(dimension: usize) -> Self {
        Self {
            dimension,
            coords: Vec::new(),
            provenance: None,
        }
    }

    /// Build from a flat coordinate buffer of `n * dimension` values.
    pub fn from_flat(dimension: usize, coords: Vec<f64>) -> Result<Self> {
        if dimension == 0 || coords.len() % dimension != 0 {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not split into points of dimension {dimension}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("coordinates must be finite".into()));
        }
        Ok(Self {
            dimension,
            coords,
            provenance: None,
        })
    }

    pub fn from_points(dimension: usize, points: &[Vec<f64>]) -> Result<Self> {
        if points.iter().any(|p| p.len() != dimension) {
            return Err(Error::InvalidParameter(format!(
                "every point must have dimension {dimension}"
            )));
        }
        Self::from_flat(dimension, points.concat())
    }

    /// Points on the line.
    pub fn from_line(xs: &[f64]) -> Result<Self> {
        Self::from_flat(1, xs.to_vec())
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dimension)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn provenance(&self) -> Option<Provenance> {
        self.provenance
    }

    pub fn push(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.dimension, "point dimension mismatch");
        self.coords.extend_from_slice(x);
    }

    /// Position of the first point equal to `x`.
    pub fn position_of(&self, x: &[f64]) -> Option<usize> {
        self.points().position(|p| p == x)
    }

    pub fn translated(&self, shift: &[f64]) -> PointConfiguration {
        let coords = self
            .coords
            .chunks_exact(self.dimension)
            .flat_map(|p| p.iter().zip(shift).map(|(a, s)| a + s))
            .collect();
        PointConfiguration {
            dimension: self.dimension,
            coords,
            provenance: self.provenance,
        }
    }

    pub fn scaled(&self, factor: f64) -> PointConfiguration {
        PointConfiguration {
            dimension: self.dimension,
            coords: self.coords.iter().map(|c| c * factor).collect(),
            provenance: self.provenance,
        }
    }

    /// Keep only the points for which `keep` returns true, in order.
    pub fn filtered(&self, mut keep: impl FnMut(&[f64]) -> bool) -> PointConfiguration {
        let mut out = PointConfiguration::empty(self.dimension);
        for p in self.points() {
            if keep(p) {
                out.coords.extend_from_slice(p);
            }
        }
        out
    }
}

/// Poisson process with intensity measure `lambda * kappa(x) dx`, drawn
/// from an explicit generator.
pub fn sample_poisson_with<R: Rng + ?Sized>(
    density: &DensitySpec,
    lambda: f64,
    rng: &mut R,
) -> Result<PointConfiguration> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and > 0, got {lambda}"
        )));
    }
    let mut config = PointConfiguration::empty(density.dimension());
    for (b, &w) in density.region.boxes().iter().zip(&density.weights) {
        let mean = lambda * w * b.volume();
        if mean <= 0.0 {
            continue;
        }
        let dist = Poisson::new(mean).map_err(|e| {
            Error::InvalidParameter(format!("cannot sample Poisson({mean}): {e}"))
        })?;
        let count = dist.sample(rng) as usize;
        config.coords.reserve(count * density.dimension());
        for _ in 0..count {
            push_uniform_in_box(b, rng, &mut config.coords);
        }
    }
    Ok(config)
}

/// Poisson process `P_lambda` addressed by `(seed, stream)`.
pub fn sample_poisson(
    density: &DensitySpec,
    lambda: f64,
    seed: u64,
    stream: u64,
) -> Result<PointConfiguration> {
    let mut rng = stream_rng(seed, stream);
    Ok(sample_poisson_with(density, lambda, &mut rng)?.with_provenance(Provenance { seed, stream }))
}

/// `n` i.i.d. points from kappa normalized to a probability density.
pub fn sample_binomial_with<R: Rng + ?Sized>(
    density: &DensitySpec,
    n: usize,
    rng: &mut R,
) -> PointConfiguration {
    let masses: Vec<f64> = density.box_masses().collect();
    let mut config = PointConfiguration::empty(density.dimension());
    config.coords.reserve(n * density.dimension());
    for _ in 0..n {
        let b = pick_weighted(&masses, rng);
        push_uniform_in_box(&density.region.boxes()[b], rng, &mut config.coords);
    }
    config
}

/// Binomial process `U_n`: `n` i.i.d. uniform points on the region.
pub fn sample_binomial(
    region: &Region,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<PointConfiguration> {
    let density = DensitySpec::homogeneous(region.clone())?;
    let mut rng = stream_rng(seed, stream);
    Ok(sample_binomial_with(&density, n, &mut rng).with_provenance(Provenance { seed, stream }))
}

/// Homogeneous Poisson process of the given intensity on a window of the line.
pub fn sample_homogeneous_line(
    intensity: f64,
    window: &AxisBox,
    seed: u64,
    stream: u64,
) -> Result<PointConfiguration> {
    if window.dimension() != 1 {
        return Err(Error::InvalidParameter(format!(
            "line process needs a 1-d window, got dimension {}",
            window.dimension()
        )));
    }
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "intensity must be finite and > 0, got {intensity}"
        )));
    }
    let region = Region::new(1, vec![window.clone()])?;
    let density = DensitySpec::relaxed(region, vec![1.0])?;
    sample_poisson(&density, intensity, seed, stream)
}
