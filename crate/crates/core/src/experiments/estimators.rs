use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::StatVector;

/// Sample moments of replicated statistic vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub replicates: usize,
    pub mean: Vec<f64>,
    /// Unbiased (N - 1) variances; equal to the covariance diagonal.
    pub variance: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// `sqrt(var / N)`.
    pub se_mean: Vec<f64>,
    /// Standard error of the sample variance from the fourth central moment.
    pub se_variance: Vec<f64>,
}

impl EstimatorSummary {
    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    /// Correlation matrix; entries involving a zero-variance component are NaN
    /// off the diagonal.
    pub fn correlation(&self) -> Vec<Vec<f64>> {
        let m = self.dimension();
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        if i == j {
                            1.0
                        } else {
                            self.covariance[i][j] / (self.variance[i] * self.variance[j]).sqrt()
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

fn check_shape(rows: &[&[f64]]) -> Result<usize> {
    if rows.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: rows.len(),
        });
    }
    let m = rows[0].len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidParameter(
            "statistic vectors have differing lengths".into(),
        ));
    }
    Ok(m)
}

/// Mean, unbiased covariance and standard errors of raw vectors.
pub fn estimate_moments_raw(rows: &[&[f64]]) -> Result<EstimatorSummary> {
    let m = check_shape(rows)?;
    let n = rows.len();
    let nf = n as f64;
    let mut mean = vec![0.0; m];
    for r in rows {
        for (acc, v) in mean.iter_mut().zip(r.iter()) {
            *acc += v;
        }
    }
    for v in &mut mean {
        *v /= nf;
    }
    let mut cov = vec![vec![0.0; m]; m];
    let mut m4 = vec![0.0; m];
    for r in rows {
        for i in 0..m {
            let di = r[i] - mean[i];
            m4[i] += di.powi(4);
            for j in i..m {
                cov[i][j] += di * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..m {
        for j in i..m {
            cov[i][j] /= nf - 1.0;
            cov[j][i] = cov[i][j];
        }
    }
    let variance: Vec<f64> = (0..m).map(|i| cov[i][i]).collect();
    let se_mean = variance.iter().map(|v| (v / nf).sqrt()).collect();
    let se_variance = (0..m)
        .map(|i| {
            let mu4 = m4[i] / nf;
            let s2 = variance[i];
            ((mu4 - (nf - 3.0) / (nf - 1.0) * s2 * s2) / nf).max(0.0).sqrt()
        })
        .collect();
    Ok(EstimatorSummary {
        replicates: n,
        mean,
        variance,
        covariance: cov,
        se_mean,
        se_variance,
    })
}

pub fn estimate_moments(samples: &[StatVector]) -> Result<EstimatorSummary> {
    let rows: Vec<&[f64]> = samples.iter().map(|s| s.values.as_slice()).collect();
    estimate_moments_raw(&rows)
}

/// `(T_i - mean_i) / sqrt(var_i)` componentwise, using the sample moments.
pub fn standardize(samples: &[StatVector], summary: &EstimatorSummary) -> Result<Vec<StatVector>> {
    if let Some(i) = summary.variance.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::DegenerateComponent { index: i });
    }
    let sd: Vec<f64> = summary.variance.iter().map(|v| v.sqrt()).collect();
    Ok(samples
        .iter()
        .map(|s| StatVector {
            values: s
                .values
                .iter()
                .zip(summary.mean.iter().zip(&sd))
                .map(|(v, (m, d))| (v - m) / d)
                .collect(),
            lambda: s.lambda,
            spec: s.spec,
        })
        .collect())
}
