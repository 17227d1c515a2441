//! Kolmogorov-type distances between standardized statistics and the
//! standard normal law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::normal_cdf;

/// Default cap on `m * |grid|^m` node evaluations.
pub const DEFAULT_GRID_BUDGET: usize = 10_000;

/// `{-3, -2.5, ..., 3}`.
pub fn default_t_grid() -> Vec<f64> {
    (0..13).map(|i| -3.0 + 0.5 * i as f64).collect()
}

/// `sup_t |F_N(t) - Phi(t)|` for the empirical CDF of `values`.
pub fn ks_to_normal(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let phi = normal_cdf(x);
            ((i + 1) as f64 / n - phi).abs().max((i as f64 / n - phi).abs())
        })
        .fold(0.0, f64::max))
}

/// Largest gap between the joint empirical CDF and `prod Phi(t_i)` over the
/// product grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDiscrepancy {
    pub sup: f64,
    pub argmax: Vec<f64>,
}

/// Product-form discrepancy of standardized `m`-vectors over `t_grid^m`.
pub fn product_form_discrepancy(
    samples: &[Vec<f64>],
    t_grid: &[f64],
    budget: usize,
) -> Result<JointDiscrepancy> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let m = samples[0].len();
    if m == 0 || samples.iter().any(|s| s.len() != m) {
        return Err(Error::InvalidParameter(
            "samples must be nonempty vectors of one common length".into(),
        ));
    }
    let mut grid = t_grid.to_vec();
    if grid.is_empty() || grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("t-grid must be nonempty and finite".into()));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let g = grid.len();
    let nodes = u32::try_from(m)
        .ok()
        .and_then(|e| g.checked_pow(e))
        .and_then(|n| n.checked_mul(m))
        .unwrap_or(usize::MAX);
    if nodes > budget {
        return Err(Error::GridTooLarge { nodes, budget });
    }
    let cells = nodes / m;

    // Bucket each sample by its per-axis first grid index with t >= value,
    // then accumulate along every axis to get the joint CDF at each node.
    let mut hist = vec![0u64; cells];
    'samples: for s in samples {
        let mut flat = 0usize;
        for &v in s.iter().rev() {
            let idx = grid.partition_point(|&t| t < v);
            if idx == g {
                continue 'samples;
            }
            flat = flat * g + idx;
        }
        hist[flat] += 1;
    }
    let mut stride = 1usize;
    for _ in 0..m {
        for c in 0..cells {
            if (c / stride) % g != 0 {
                hist[c] += hist[c - stride];
            }
        }
        stride *= g;
    }

    let phi: Vec<f64> = grid.iter().map(|&t| normal_cdf(t)).collect();
    let n = samples.len() as f64;
    let mut best = JointDiscrepancy {
        sup: -1.0,
        argmax: Vec::new(),
    };
    for (c, &count) in hist.iter().enumerate() {
        let mut rest = c;
        let mut prod = 1.0;
        let mut node = Vec::with_capacity(m);
        for _ in 0..m {
            let i = rest % g;
            rest /= g;
            prod *= phi[i];
            node.push(grid[i]);
        }
        let gap = (count as f64 / n - prod).abs();
        if gap > best.sup {
            best = JointDiscrepancy { sup: gap, argmax: node };
        }
    }
    Ok(best)
}
