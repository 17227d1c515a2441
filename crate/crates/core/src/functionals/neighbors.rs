//! k-nearest-neighbour search.
//!
//! Points on the line are handled by a sorted order with two-sided
//! expansion; higher dimensions use a uniform grid with ring expansion.
//! Ties are broken by canonical point order, so the result is a pure
//! function of the configuration and matches [`brute_force_knn`] exactly.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::point_process::PointConfiguration;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist2: f64,
}

impl Neighbor {
    pub fn distance(&self) -> f64 {
        self.dist2.sqrt()
    }

    fn key_cmp(&self, other: &Neighbor) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

/// Which points a query must skip.
#[derive(Debug, Clone, Copy)]
pub enum Exclude<'a> {
    /// Skip the point with this index (the query point itself).
    Index(usize),
    /// Skip every point located exactly at these coordinates.
    Location(&'a [f64]),
    Nothing,
}

impl Exclude<'_> {
    #[inline]
    fn skips(&self, index: usize, point: &[f64]) -> bool {
        match *self {
            Exclude::Index(i) => i == index,
            Exclude::Location(x) => x == point,
            Exclude::Nothing => false,
        }
    }
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// O(n) scan per query; the reference the accelerated search is checked against.
pub fn brute_force_knn(
    config: &PointConfiguration,
    query: &[f64],
    exclude: Exclude<'_>,
    k: usize,
) -> Result<Vec<Neighbor>> {
    let mut all: Vec<Neighbor> = config
        .points()
        .enumerate()
        .filter(|(i, p)| !exclude.skips(*i, p))
        .map(|(index, p)| Neighbor {
            index,
            dist2: dist2(query, p),
        })
        .collect();
    if all.len() < k {
        return Err(Error::InsufficientPoints {
            needed: k,
            available: all.len(),
        });
    }
    all.sort_by(Neighbor::key_cmp);
    all.truncate(k);
    Ok(all)
}

/// Spatial index over a borrowed configuration.
pub struct NeighborIndex<'a> {
    config: &'a PointConfiguration,
    kind: IndexKind,
}

enum IndexKind {
    Line(LineIndex),
    Grid(GridIndex),
}

struct LineIndex {
    /// Point indices sorted by (coordinate, index).
    order: Vec<u32>,
    /// Sorted coordinates, parallel to `order`.
    xs: Vec<f64>,
    /// Position of each point within `order`.
    rank: Vec<u32>,
}

struct GridIndex {
    origin: Vec<f64>,
    cell: f64,
    dims: Vec<usize>,
    /// CSR layout: points of cell `c` are `entries[starts[c]..starts[c + 1]]`.
    starts: Vec<usize>,
    entries: Vec<u32>,
    slack: f64,
}

impl<'a> NeighborIndex<'a> {
    pub fn new(config: &'a PointConfiguration) -> Self {
        assert!(
            config.len() < u32::MAX as usize,
            "configuration too large for the neighbour index"
        );
        let kind = if config.dimension() == 1 {
            IndexKind::Line(LineIndex::build(config))
        } else {
            IndexKind::Grid(GridIndex::build(config))
        };
        Self { config, kind }
    }

    pub fn config(&self) -> &PointConfiguration {
        self.config
    }

    /// The `k` nearest other points of point `i`.
    pub fn knn_of(&self, i: usize, k: usize) -> Result<Vec<Neighbor>> {
        self.query(self.config.point(i), Exclude::Index(i), k)
    }

    /// The `k` nearest points to an arbitrary location.
    pub fn knn_at(&self, x: &[f64], exclude: Exclude<'_>, k: usize) -> Result<Vec<Neighbor>> {
        self.query(x, exclude, k)
    }

    /// Nearest other point of point `i`.
    pub fn nearest_of(&self, i: usize) -> Result<Neighbor> {
        Ok(self.knn_of(i, 1)?[0])
    }

    fn query(&self, x: &[f64], exclude: Exclude<'_>, k: usize) -> Result<Vec<Neighbor>> {
        if k == 0 {
            return Ok(Vec::new());
        }
        match &self.kind {
            IndexKind::Line(line) => line.query(self.config, x, exclude, k),
            IndexKind::Grid(grid) => grid.query(self.config, x, exclude, k),
        }
    }
}

impl LineIndex {
    fn build(config: &PointConfiguration) -> Self {
        let coords = config.coords();
        let mut order: Vec<u32> = (0..coords.len() as u32).collect();
        order.sort_unstable_by(|&a, &b| {
            coords[a as usize]
                .total_cmp(&coords[b as usize])
                .then(a.cmp(&b))
        });
        let xs: Vec<f64> = order.iter().map(|&i| coords[i as usize]).collect();
        let mut rank = vec![0u32; order.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i as usize] = r as u32;
        }
        Self { order, xs, rank }
    }

    fn query(
        &self,
        config: &PointConfiguration,
        x: &[f64],
        exclude: Exclude<'_>,
        k: usize,
    ) -> Result<Vec<Neighbor>> {
        let q = x[0];
        // First sorted position whose coordinate is >= q (or the query's own slot).
        let start = match exclude {
            Exclude::Index(i) => self.rank[i] as usize,
            _ => self.xs.partition_point(|&v| v < q),
        };
        let mut left = start as isize - 1;
        // an indexed query point occupies `start` itself
        let mut right = match exclude {
            Exclude::Index(_) => start + 1,
            _ => start,
        };
        let mut cands: Vec<Neighbor> = Vec::with_capacity(k + 2);
        let mut valid = 0usize;
        let mut kth = f64::INFINITY;
        loop {
            let dl = (left >= 0).then(|| {
                let v = q - self.xs[left as usize];
                v * v
            });
            let dr = (right < self.xs.len()).then(|| {
                let v = self.xs[right] - q;
                v * v
            });
            let (d, take_left) = match (dl, dr) {
                (None, None) => break,
                (Some(a), None) => (a, true),
                (None, Some(b)) => (b, false),
                (Some(a), Some(b)) => {
                    if a <= b {
                        (a, true)
                    } else {
                        (b, false)
                    }
                }
            };
            if valid >= k && d > kth {
                break;
            }
            let pos = if take_left {
                let p = left as usize;
                left -= 1;
                p
            } else {
                let p = right;
                right += 1;
                p
            };
            let index = self.order[pos] as usize;
            if exclude.skips(index, config.point(index)) {
                continue;
            }
            cands.push(Neighbor { index, dist2: d });
            valid += 1;
            if valid == k {
                kth = d;
            }
        }
        if valid < k {
            return Err(Error::InsufficientPoints {
                needed: k,
                available: valid,
            });
        }
        cands.sort_by(Neighbor::key_cmp);
        cands.truncate(k);
        Ok(cands)
    }
}

impl GridIndex {
    fn build(config: &PointConfiguration) -> Self {
        let d = config.dimension();
        let n = config.len();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        let mut scale = 0f64;
        for p in config.points() {
            for j in 0..d {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
                scale = scale.max(p[j].abs());
            }
        }
        if n == 0 {
            lo.fill(0.0);
            hi.fill(0.0);
        }
        let extent: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| b - a).collect();
        let max_extent = extent.iter().cloned().fold(0.0, f64::max);
        // Roughly one point per cell; degenerate axes get a single cell.
        let floor = (max_extent * 1e-9).max(f64::MIN_POSITIVE);
        let volume: f64 = extent.iter().map(|e| e.max(floor)).product();
        let mut cell = (volume / n.max(1) as f64).powf(1.0 / d as f64);
        if !(cell > 0.0 && cell.is_finite()) {
            cell = 1.0;
        }
        let mut dims: Vec<usize>;
        loop {
            dims = extent
                .iter()
                .map(|e| ((e / cell).floor() as usize + 1).max(1))
                .collect();
            let total: usize = dims.iter().try_fold(1usize, |acc, &m| acc.checked_mul(m)).unwrap_or(usize::MAX);
            if total <= 4 * n.max(1) + 8 {
                break;
            }
            cell *= 1.5;
        }

        let mut grid = GridIndex {
            origin: lo,
            cell,
            dims,
            starts: Vec::new(),
            entries: Vec::new(),
            slack: 1e-9 * cell + 8.0 * f64::EPSILON * (scale + cell),
        };
        let ncells: usize = grid.dims.iter().product();
        let cell_of: Vec<usize> = config
            .points()
            .map(|p| grid.flat(&grid.cell_coords(p)))
            .collect();
        let mut counts = vec![0usize; ncells + 1];
        for &c in &cell_of {
            counts[c + 1] += 1;
        }
        for c in 0..ncells {
            counts[c + 1] += counts[c];
        }
        let mut fill = counts.clone();
        let mut entries = vec![0u32; n];
        for (i, &c) in cell_of.iter().enumerate() {
            entries[fill[c]] = i as u32;
            fill[c] += 1;
        }
        grid.starts = counts;
        grid.entries = entries;
        grid
    }

    fn cell_coords(&self, x: &[f64]) -> Vec<usize> {
        x.iter()
            .zip(&self.origin)
            .zip(&self.dims)
            .map(|((&v, &o), &m)| {
                let c = ((v - o) / self.cell).floor();
                if c <= 0.0 {
                    0
                } else {
                    (c as usize).min(m - 1)
                }
            })
            .collect()
    }

    fn flat(&self, c: &[usize]) -> usize {
        c.iter()
            .zip(&self.dims)
            .rev()
            .fold(0, |acc, (&ci, &m)| acc * m + ci)
    }

    fn query(
        &self,
        config: &PointConfiguration,
        x: &[f64],
        exclude: Exclude<'_>,
        k: usize,
    ) -> Result<Vec<Neighbor>> {
        let d = self.dims.len();
        let home = self.cell_coords(x);
        let max_ring = home
            .iter()
            .zip(&self.dims)
            .map(|(&c, &m)| c.max(m - 1 - c))
            .max()
            .unwrap_or(0);
        let mut best: Vec<Neighbor> = Vec::with_capacity(k + 1);
        let mut cell = vec![0usize; d];
        let mut offset = vec![0isize; d];

        for ring in 0..=max_ring {
            let r = ring as isize;
            // enumerate the cube [-r, r]^d, keeping cells on its surface
            offset.fill(-r);
            'cube: loop {
                let on_surface = offset.iter().any(|o| o.abs() == r);
                let mut in_bounds = true;
                if on_surface {
                    for j in 0..d {
                        let c = home[j] as isize + offset[j];
                        if c < 0 || c >= self.dims[j] as isize {
                            in_bounds = false;
                            break;
                        }
                        cell[j] = c as usize;
                    }
                    if in_bounds {
                        let f = self.flat(&cell);
                        for &e in &self.entries[self.starts[f]..self.starts[f + 1]] {
                            let index = e as usize;
                            let p = config.point(index);
                            if exclude.skips(index, p) {
                                continue;
                            }
                            let cand = Neighbor {
                                index,
                                dist2: dist2(x, p),
                            };
                            if best.len() < k {
                                let at = best
                                    .binary_search_by(|b| b.key_cmp(&cand))
                                    .unwrap_or_else(|e| e);
                                best.insert(at, cand);
                            } else if cand.key_cmp(&best[k - 1]) == Ordering::Less {
                                best.pop();
                                let at = best
                                    .binary_search_by(|b| b.key_cmp(&cand))
                                    .unwrap_or_else(|e| e);
                                best.insert(at, cand);
                            }
                        }
                    }
                }
                if r == 0 {
                    break;
                }
                for j in 0..d {
                    if offset[j] < r {
                        offset[j] += 1;
                        continue 'cube;
                    }
                    offset[j] = -r;
                }
                break;
            }
            // Unvisited cells lie at least `ring` whole cells away.
            if best.len() == k {
                let reach = ring as f64 * self.cell - self.slack;
                if reach > 0.0 && best[k - 1].dist2.sqrt() < reach {
                    break;
                }
            }
        }
        if best.len() < k {
            return Err(Error::InsufficientPoints {
                needed: k,
                available: best.len(),
            });
        }
        Ok(best)
    }
}
