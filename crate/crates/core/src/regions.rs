//! Regions built from disjoint axis-aligned boxes, plus the unit-cube
//! lattice constructions used by the covering diagnostics.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open axis-aligned box `[lower, upper)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct AxisBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawBox> for AxisBox {
    type Error = Error;

    fn try_from(raw: RawBox) -> Result<Self> {
        AxisBox::new(raw.lower, raw.upper)
    }
}

impl From<AxisBox> for RawBox {
    fn from(b: AxisBox) -> Self {
        RawBox {
            lower: b.lower,
            upper: b.upper,
        }
    }
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidRegion(format!(
                "box corners must have equal nonzero dimension, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidRegion(format!(
                    "box needs lower < upper on every axis; axis {j} has [{lo}, {hi})"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// One-dimensional interval `[lo, hi)`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&lo, &hi))| lo <= v && v < hi)
    }

    /// Volume of the intersection with another box (zero if disjoint).
    pub fn overlap_volume(&self, other: &AxisBox) -> f64 {
        let mut vol = 1.0;
        for j in 0..self.dimension() {
            let lo = self.lower[j].max(other.lower[j]);
            let hi = self.upper[j].min(other.upper[j]);
            if hi <= lo {
                return 0.0;
            }
            vol *= hi - lo;
        }
        vol
    }

    pub fn translated(&self, shift: &[f64]) -> AxisBox {
        AxisBox {
            lower: self.lower.iter().zip(shift).map(|(a, s)| a + s).collect(),
            upper: self.upper.iter().zip(shift).map(|(a, s)| a + s).collect(),
        }
    }

    fn scaled(&self, factor: f64) -> AxisBox {
        AxisBox {
            lower: self.lower.iter().map(|a| a * factor).collect(),
            upper: self.upper.iter().map(|a| a * factor).collect(),
        }
    }
}

/// Which norm to measure distances in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L2,
    LInf,
}

/// Distance from `x` to the closed box with the given (possibly infinite) bounds.
fn distance_to_closed_box(x: &[f64], lower: &[f64], upper: &[f64], norm: Norm) -> f64 {
    let gaps = x
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(&v, (&lo, &hi))| (lo - v).max(v - hi).max(0.0));
    match norm {
        Norm::L2 => gaps.map(|g| g * g).sum::<f64>().sqrt(),
        Norm::LInf => gaps.fold(0.0, f64::max),
    }
}

/// A union of pairwise disjoint boxes of a common dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRegion", into = "RawRegion")]
pub struct Region {
    dimension: usize,
    boxes: Vec<AxisBox>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    dimension: usize,
    boxes: Vec<AxisBox>,
}

impl TryFrom<RawRegion> for Region {
    type Error = Error;

    fn try_from(raw: RawRegion) -> Result<Self> {
        Region::new(raw.dimension, raw.boxes)
    }
}

impl From<Region> for RawRegion {
    fn from(r: Region) -> Self {
        RawRegion {
            dimension: r.dimension,
            boxes: r.boxes,
        }
    }
}

impl Region {
    pub fn new(dimension: usize, boxes: Vec<AxisBox>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidRegion("dimension must be >= 1".into()));
        }
        if boxes.is_empty() {
            return Err(Error::InvalidRegion("region needs at least one box".into()));
        }
        if let Some((i, b)) = boxes
            .iter()
            .enumerate()
            .find(|(_, b)| b.dimension() != dimension)
        {
            return Err(Error::InvalidRegion(format!(
                "box {i} has dimension {}, region has {dimension}",
                b.dimension()
            )));
        }
        for i in 0..boxes.len() {
            for j in (i + 1)..boxes.len() {
                if boxes[i].overlap_volume(&boxes[j]) > 0.0 {
                    return Err(Error::InvalidRegion(format!(
                        "boxes {i} and {j} overlap"
                    )));
                }
            }
        }
        Ok(Self { dimension, boxes })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(1, vec![AxisBox::interval(lo, hi)?])
    }

    /// Disjoint union of intervals on the line.
    pub fn intervals(bounds: &[(f64, f64)]) -> Result<Self> {
        let boxes = bounds
            .iter()
            .map(|&(lo, hi)| AxisBox::interval(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Self::new(1, boxes)
    }

    /// The unit cube `[0, 1)^d`.
    pub fn unit_cube(dimension: usize) -> Result<Self> {
        Self::new(
            dimension,
            vec![AxisBox::new(vec![0.0; dimension], vec![1.0; dimension])?],
        )
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn boxes(&self) -> &[AxisBox] {
        &self.boxes
    }

    pub fn volume(&self) -> f64 {
        self.boxes.iter().map(AxisBox::volume).sum()
    }

    /// Index of the box containing `x`, if any.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        self.boxes.iter().position(|b| b.contains(x))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.locate(x).is_some()
    }

    pub fn overlap_volume(&self, other: &Region) -> f64 {
        self.boxes
            .iter()
            .flat_map(|a| other.boxes.iter().map(move |b| a.overlap_volume(b)))
            .sum()
    }

    pub fn overlaps(&self, other: &Region) -> bool {
        self.overlap_volume(other) > 0.0
    }

    pub fn translated(&self, shift: &[f64]) -> Region {
        Region {
            dimension: self.dimension,
            boxes: self.boxes.iter().map(|b| b.translated(shift)).collect(),
        }
    }

    /// Coordinate-wise bounding box as `(lower, upper)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dimension];
        let mut hi = vec![f64::NEG_INFINITY; self.dimension];
        for b in &self.boxes {
            for j in 0..self.dimension {
                lo[j] = lo[j].min(b.lower[j]);
                hi[j] = hi[j].max(b.upper[j]);
            }
        }
        (lo, hi)
    }

    /// Distance from `x` to the boundary of the union.
    ///
    /// The union is cut into the rectilinear cells spanned by every box
    /// face; a cell lies wholly inside or wholly outside the union, so the
    /// boundary distance is the distance to the nearest cell on the other
    /// side.
    pub fn dist_to_boundary(&self, x: &[f64], norm: Norm) -> f64 {
        let inside = self.contains(x);
        if !inside {
            return self
                .boxes
                .iter()
                .map(|b| distance_to_closed_box(x, &b.lower, &b.upper, norm))
                .fold(f64::INFINITY, f64::min);
        }

        let cuts: Vec<Vec<f64>> = (0..self.dimension)
            .map(|j| {
                let mut c: Vec<f64> = self
                    .boxes
                    .iter()
                    .flat_map(|b| [b.lower[j], b.upper[j]])
                    .collect();
                c.sort_by(f64::total_cmp);
                c.dedup();
                let mut full = Vec::with_capacity(c.len() + 2);
                full.push(f64::NEG_INFINITY);
                full.extend(c);
                full.push(f64::INFINITY);
                full
            })
            .collect();

        let mut best = f64::INFINITY;
        let mut idx = vec![0usize; self.dimension];
        let mut lower = vec![0.0; self.dimension];
        let mut upper = vec![0.0; self.dimension];
        let mut probe = vec![0.0; self.dimension];
        'cells: loop {
            let mut unbounded = false;
            for j in 0..self.dimension {
                lower[j] = cuts[j][idx[j]];
                upper[j] = cuts[j][idx[j] + 1];
                unbounded |= lower[j].is_infinite() || upper[j].is_infinite();
                probe[j] = 0.5 * (lower[j] + upper[j]);
            }
            if unbounded || !self.contains(&probe) {
                best = best.min(distance_to_closed_box(x, &lower, &upper, norm));
            }
            for j in 0..self.dimension {
                idx[j] += 1;
                if idx[j] + 1 < cuts[j].len() {
                    continue 'cells;
                }
                idx[j] = 0;
            }
            break;
        }
        best
    }

    fn scaled(&self, factor: f64) -> Region {
        Region {
            dimension: self.dimension,
            boxes: self.boxes.iter().map(|b| b.scaled(factor)).collect(),
        }
    }
}

/// Intensity plus the boundary-width constant that sets
/// `s = stab_constant * lambda^(-1/d) * ln(lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub lambda: f64,
    pub stab_constant: f64,
}

impl LatticeParams {
    pub fn new(lambda: f64) -> Result<Self> {
        Self::with_constant(lambda, 1.0)
    }

    pub fn with_constant(lambda: f64, stab_constant: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and > 0, got {lambda}"
            )));
        }
        if !(stab_constant > 0.0 && stab_constant.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "stab_constant must be finite and > 0, got {stab_constant}"
            )));
        }
        Ok(Self {
            lambda,
            stab_constant,
        })
    }

    /// Boundary width `s_lambda` in original (undilated) units.
    pub fn log_lambda_width(&self, dimension: usize) -> f64 {
        self.stab_constant * self.lambda.powf(-1.0 / dimension as f64) * self.lambda.ln()
    }
}

/// Splits a region into the points within `s_lambda` (sup-norm) of its
/// boundary and the remaining interior.
#[derive(Debug, Clone)]
pub struct BoundarySplit<'a> {
    region: &'a Region,
    width: f64,
}

impl<'a> BoundarySplit<'a> {
    pub fn new(region: &'a Region, params: LatticeParams) -> Result<Self> {
        if params.lambda <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "boundary split needs lambda > 1, got {}",
                params.lambda
            )));
        }
        Ok(Self {
            region,
            width: params.log_lambda_width(region.dimension()),
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn is_boundary(&self, x: &[f64]) -> bool {
        self.region.contains(x) && self.region.dist_to_boundary(x, Norm::LInf) <= self.width
    }

    pub fn is_interior(&self, x: &[f64]) -> bool {
        self.region.contains(x) && self.region.dist_to_boundary(x, Norm::LInf) > self.width
    }

    /// Exact measure of the boundary part, for a single interval.
    pub fn interval_boundary_measure(&self) -> Option<f64> {
        match self.region.boxes() {
            [b] if self.region.dimension() == 1 => {
                Some((2.0 * self.width).min(b.upper[0] - b.lower[0]))
            }
            _ => None,
        }
    }

    /// Monte Carlo estimate of the boundary part's volume.
    pub fn boundary_measure_estimate<R: rand::Rng + ?Sized>(
        &self,
        samples: usize,
        rng: &mut R,
    ) -> f64 {
        let total = self.region.volume();
        let weights: Vec<f64> = self.region.boxes().iter().map(AxisBox::volume).collect();
        let mut hits = 0usize;
        let mut x = vec![0.0; self.region.dimension()];
        for _ in 0..samples {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = weights.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if u < *w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            let b = &self.region.boxes()[chosen];
            for (j, v) in x.iter_mut().enumerate() {
                *v = b.lower[j] + rng.random::<f64>() * (b.upper[j] - b.lower[j]);
            }
            if self.is_boundary(&x) {
                hits += 1;
            }
        }
        total * hits as f64 / samples as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverKind {
    Covering,
    Packing,
}

/// Integer lattice centers of unit cubes `[z - 1/2, z + 1/2]^d` that meet
/// (covering) or fit inside (packing) the dilated region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeCover {
    pub kind: CoverKind,
    pub centers: Vec<Vec<i64>>,
}

impl CubeCover {
    pub fn count(&self) -> usize {
        self.centers.len()
    }
}

/// Volume of `lambda^{1/d} B`.
pub fn dilated_volume(region: &Region, lambda: f64) -> f64 {
    region.volume() * lambda
}

fn dilate(region: &Region, lambda: f64) -> Result<Region> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and > 0, got {lambda}"
        )));
    }
    Ok(region.scaled(lambda.powf(1.0 / region.dimension() as f64)))
}

fn lattice_box(ranges: &[(i64, i64)], out: &mut BTreeSet<Vec<i64>>) {
    if ranges.iter().any(|&(lo, hi)| lo > hi) {
        return;
    }
    let mut z: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    'outer: loop {
        out.insert(z.clone());
        for j in 0..z.len() {
            z[j] += 1;
            if z[j] <= ranges[j].1 {
                continue 'outer;
            }
            z[j] = ranges[j].0;
        }
        break;
    }
}

/// Centers `z` whose closed unit cube meets `lambda^{1/d} B`.
pub fn covering(region: &Region, lambda: f64) -> Result<CubeCover> {
    if region.volume() <= 0.0 {
        return Err(Error::EmptyCover);
    }
    let dilated = dilate(region, lambda)?;
    let mut centers = BTreeSet::new();
    for b in dilated.boxes() {
        // [z - 1/2, z + 1/2] meets [lo, hi) iff z >= lo - 1/2 and z < hi + 1/2.
        let ranges: Vec<(i64, i64)> = b
            .lower
            .iter()
            .zip(&b.upper)
            .map(|(&lo, &hi)| {
                let first = (lo - 0.5).ceil() as i64;
                let bound = hi + 0.5;
                let mut last = bound.floor() as i64;
                if last as f64 == bound {
                    last -= 1;
                }
                (first, last)
            })
            .collect();
        lattice_box(&ranges, &mut centers);
    }
    Ok(CubeCover {
        kind: CoverKind::Covering,
        centers: centers.into_iter().collect(),
    })
}

/// Centers `w` whose unit cube lies inside the closure of `lambda^{1/d} B`.
///
/// A closed cube lies in the closure of the union exactly when the union
/// covers all of its volume, so containment is tested by summing the
/// overlap with every box.
pub fn packing(region: &Region, lambda: f64) -> Result<CubeCover> {
    let dilated = dilate(region, lambda)?;
    let d = region.dimension();
    let mut centers = Vec::new();
    if region.volume() > 0.0 {
        for z in covering(region, lambda)?.centers {
            let lower: Vec<f64> = z.iter().map(|&c| c as f64 - 0.5).collect();
            let upper: Vec<f64> = z.iter().map(|&c| c as f64 + 0.5).collect();
            let cube = AxisBox::new(lower, upper)?;
            let covered: f64 = dilated.boxes().iter().map(|b| cube.overlap_volume(b)).sum();
            if covered >= 1.0 - 1e-9 * d as f64 {
                centers.push(z);
            }
        }
    }
    Ok(CubeCover {
        kind: CoverKind::Packing,
        centers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn volumes() {
        assert_eq!(Region::interval(0.0, 1.0).unwrap().volume(), 1.0);
        assert_eq!(Region::unit_cube(2).unwrap().volume(), 1.0);
        assert_eq!(
            Region::intervals(&[(0.0, 1.0), (2.0, 3.5)]).unwrap().volume(),
            2.5
        );
    }

    #[test]
    fn rejects_bad_regions() {
        assert!(AxisBox::interval(1.0, 1.0).is_err());
        assert!(AxisBox::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(Region::intervals(&[(0.0, 1.0), (0.5, 2.0)]).is_err());
        assert!(Region::new(1, vec![]).is_err());
        // touching boxes are fine
        assert!(Region::intervals(&[(0.0, 1.0), (1.0, 2.0)]).is_ok());
    }

    #[test]
    fn half_open_membership() {
        let r = Region::intervals(&[(0.0, 1.0), (1.0, 2.0)]).unwrap();
        assert_eq!(r.locate(&[1.0]), Some(1));
        assert_eq!(r.locate(&[0.0]), Some(0));
        assert_eq!(r.locate(&[2.0]), None);
    }

    #[test]
    fn boundary_distances() {
        let unit = Region::interval(0.0, 1.0).unwrap();
        assert_eq!(unit.dist_to_boundary(&[0.5], Norm::LInf), 0.5);
        assert!((unit.dist_to_boundary(&[0.1], Norm::LInf) - 0.1).abs() < 1e-15);
        let sq = Region::unit_cube(2).unwrap();
        assert!((sq.dist_to_boundary(&[0.5, 0.2], Norm::LInf) - 0.2).abs() < 1e-15);
        assert!((sq.dist_to_boundary(&[0.5, 0.2], Norm::L2) - 0.2).abs() < 1e-15);
        // outside: distance to the set itself
        assert!((sq.dist_to_boundary(&[2.0, 2.0], Norm::L2) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(sq.dist_to_boundary(&[2.0, 2.0], Norm::LInf), 1.0);
    }

    #[test]
    fn shared_faces_are_not_boundary() {
        let r = Region::intervals(&[(0.0, 1.0), (1.0, 3.0)]).unwrap();
        assert!((r.dist_to_boundary(&[0.9], Norm::LInf) - 0.9).abs() < 1e-15);
        let l = Region::new(
            2,
            vec![
                AxisBox::new(vec![0.0, 0.0], vec![2.0, 1.0]).unwrap(),
                AxisBox::new(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap(),
            ],
        )
        .unwrap();
        // near the re-entrant corner (1, 1)
        let d = l.dist_to_boundary(&[0.8, 0.9], Norm::L2);
        assert!((d - (0.2f64 * 0.2 + 0.1 * 0.1).sqrt()).abs() < 1e-12);
        let d = l.dist_to_boundary(&[0.8, 0.9], Norm::LInf);
        assert!((d - 0.2).abs() < 1e-12);
    }

    #[test]
    fn boundary_split_examples() {
        let unit = Region::interval(0.0, 1.0).unwrap();
        let params = LatticeParams::with_constant(std::f64::consts::E, 0.1).unwrap();
        let split = BoundarySplit::new(&unit, params).unwrap();
        assert!((split.width() - 0.1 / std::f64::consts::E).abs() < 1e-15);
        assert!(split.is_boundary(&[0.02]));
        assert!(!split.is_interior(&[0.02]));
        assert!(split.is_interior(&[0.5]));
        assert!(!split.is_boundary(&[0.5]));
        assert!(!split.is_boundary(&[1.5]) && !split.is_interior(&[1.5]));

        let wide = LatticeParams::with_constant(std::f64::consts::E, 10.0).unwrap();
        let split = BoundarySplit::new(&unit, wide).unwrap();
        for i in 0..100 {
            assert!(split.is_boundary(&[i as f64 / 100.0]));
        }
        assert_eq!(split.interval_boundary_measure(), Some(1.0));
        assert!(BoundarySplit::new(&unit, LatticeParams::new(1.0).unwrap()).is_err());
    }

    #[test]
    fn boundary_measure_closed_form_matches_estimate() {
        let g = Region::interval(2.0, 2.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for lambda in [3.0, 50.0, 1000.0] {
            let split = BoundarySplit::new(&g, LatticeParams::new(lambda).unwrap()).unwrap();
            let exact = split.interval_boundary_measure().unwrap();
            assert!((exact - (2.0 * split.width()).min(2.7 - 2.0)).abs() < 1e-15);
            let est = split.boundary_measure_estimate(200_000, &mut rng);
            assert!((est - exact).abs() < 0.005, "lambda {lambda}: {est} vs {exact}");
        }
    }

    #[test]
    fn hand_counted_covers() {
        let unit = Region::interval(0.0, 1.0).unwrap();
        let c = covering(&unit, 4.0).unwrap();
        assert_eq!(c.centers, (0..=4).map(|z| vec![z]).collect::<Vec<_>>());
        let c = covering(&unit, 1.0).unwrap();
        assert_eq!(c.centers, vec![vec![0], vec![1]]);
        let p = packing(&unit, 4.0).unwrap();
        assert_eq!(p.centers, vec![vec![1], vec![2], vec![3]]);
        assert_eq!(packing(&unit, 1.0).unwrap().count(), 0);
    }

    #[test]
    fn packing_across_adjacent_boxes() {
        // [0, 1.2) and [1.2, 2.5): the cube around 1 spans both boxes.
        let r = Region::intervals(&[(0.0, 1.2), (1.2, 2.5)]).unwrap();
        let p = packing(&r, 1.0).unwrap();
        assert_eq!(p.centers, vec![vec![1], vec![2]]);
    }

    #[test]
    fn covering_growth_is_surface_order() {
        let b = Region::new(
            2,
            vec![AxisBox::new(vec![0.1, 0.2], vec![0.83, 0.9]).unwrap()],
        )
        .unwrap();
        let ratios: Vec<f64> = (0..6)
            .map(|o| {
                let lambda = 100.0 * 2f64.powi(o);
                let n = covering(&b, lambda).unwrap().count() as f64;
                (n - dilated_volume(&b, lambda)) / lambda.sqrt()
            })
            .collect();
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        assert!(min > 0.0 && max / min < 10.0, "{ratios:?}");
    }

    #[test]
    fn serde_round_trip_rejects_unknown_keys() {
        let r: Region = serde_json::from_str(
            r#"{"dimension": 1, "boxes": [{"lower": [0], "upper": [1]}]}"#,
        )
        .unwrap();
        assert_eq!(r, Region::interval(0.0, 1.0).unwrap());
        assert!(serde_json::from_str::<Region>(
            r#"{"dimension": 1, "boxes": [{"lower": [0], "upper": [1], "x": 1}]}"#
        )
        .is_err());
        assert!(serde_json::from_str::<Region>(
            r#"{"dimension": 1, "boxes": [{"lower": [1], "upper": [0]}]}"#
        )
        .is_err());
    }
}
