use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::linear_fit;

/// Least-squares fit of `ln D = slope * ln lambda + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
    /// Intensities left out because their discrepancy was zero.
    pub dropped: Vec<f64>,
}

pub fn fit_rate(lambdas: &[f64], discrepancies: &[f64]) -> Result<RateFit> {
    if lambdas.len() != discrepancies.len() {
        return Err(Error::InvalidParameter(format!(
            "{} intensities but {} discrepancies",
            lambdas.len(),
            discrepancies.len()
        )));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::InvalidParameter(format!("intensity {l} is not positive")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dropped = Vec::new();
    for (&l, &d) in lambdas.iter().zip(discrepancies) {
        if d > 0.0 && d.is_finite() {
            xs.push(l.ln());
            ys.push(d.ln());
        } else {
            dropped.push(l);
        }
    }
    if xs.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: xs.len(),
        });
    }
    let fit = linear_fit(&xs, &ys).ok_or_else(|| {
        Error::InvalidParameter("rate fit needs at least two distinct intensities".into())
    })?;
    Ok(RateFit {
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        points_used: xs.len(),
        dropped,
    })
}
