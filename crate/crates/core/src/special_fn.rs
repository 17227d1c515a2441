//! Closed-form asymptotic constants for the directed nearest-neighbour
//! functional in one dimension, together with the special functions they
//! are built from.
//!
//! All functions here are pure and allocation free.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Edge-weight power `alpha > 0` applied to nearest-neighbour distances.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct WeightExponent(f64);

impl WeightExponent {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::Domain(format!(
                "weight exponent must be finite and > 0, got {alpha}"
            )))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for WeightExponent {
    type Error = Error;

    fn try_from(alpha: f64) -> Result<Self> {
        Self::new(alpha)
    }
}

impl From<WeightExponent> for f64 {
    fn from(alpha: WeightExponent) -> f64 {
        alpha.0
    }
}

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Euler Gamma function for positive real arguments.
///
/// Positive integers up to 30 are evaluated as exact factorial products;
/// everything else goes through the Lanczos series, with the reflection
/// formula for arguments below one half.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "gamma is only defined here for finite x > 0, got {x}"
        )));
    }
    if x.fract() == 0.0 && x <= 30.0 {
        let n = x as u32;
        return Ok((1..n).fold(1.0, |acc, i| acc * f64::from(i)));
    }
    Ok(gamma_lanczos(x))
}

fn gamma_lanczos(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_lanczos(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// Truncation control for [`gauss_2f1_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// Relative size of a term, compared with the running sum, below which
    /// the term counts as negligible.
    pub rel_tol: f64,
    /// Number of consecutive negligible terms needed to stop.
    pub consecutive: usize,
    pub max_terms: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-13,
            consecutive: 3,
            max_terms: 10_000,
        }
    }
}

/// Gauss hypergeometric function `2F1(a, b; c; z)` for real arguments with
/// `|z| < 1`, summed directly from its power series.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    gauss_2f1_with(a, b, c, z, SeriesOptions::default())
}

pub fn gauss_2f1_with(a: f64, b: f64, c: f64, z: f64, opts: SeriesOptions) -> Result<f64> {
    if !(z.abs() < 1.0) {
        return Err(Error::Domain(format!(
            "2F1 series needs |z| < 1, got z = {z}"
        )));
    }
    if ![a, b, c].iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("2F1 parameters must be finite".into()));
    }
    let terminating = is_nonpositive_integer(a) || is_nonpositive_integer(b);

    let mut sum = 1.0;
    let mut term = 1.0;
    let mut small_run = 0usize;
    for n in 0..opts.max_terms {
        let nf = n as f64;
        let num = (a + nf) * (b + nf);
        if num == 0.0 {
            return Ok(sum);
        }
        if c + nf == 0.0 {
            return Err(Error::Pole { step: n });
        }
        term *= num / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term == 0.0 {
            // z == 0 or underflow; every later term is zero as well.
            return Ok(sum);
        }
        if !terminating {
            if term.abs() <= opts.rel_tol * sum.abs() {
                small_run += 1;
                if small_run >= opts.consecutive {
                    return Ok(sum);
                }
            } else {
                small_run = 0;
            }
        }
    }
    Err(Error::ConvergenceFailure {
        terms: opts.max_terms,
    })
}

fn is_nonpositive_integer(v: f64) -> bool {
    v <= 0.0 && v.fract() == 0.0
}

/// Limiting scaled variance of the directed nearest-neighbour functional
/// for `n` uniform points on the unit interval:
///
/// ```text
/// V = (4^-a + 2 * 3^(-1-2a)) G(1+2a) - 4^-a (3 + a^2) G(1+a)^2
///     + 8 * 6^(-a-1) G(2+2a) / (1+a) * 2F1(-a, 1+a; 2+a; 1/3)
/// ```
pub fn v_alpha(alpha: WeightExponent) -> Result<f64> {
    let a = alpha.value();
    let g1 = gamma(1.0 + a)?;
    let first = (4f64.powf(-a) + 2.0 * 3f64.powf(-1.0 - 2.0 * a)) * gamma(1.0 + 2.0 * a)?;
    let second = 4f64.powf(-a) * (3.0 + a * a) * g1 * g1;
    let hyp = gauss_2f1(-a, 1.0 + a, 2.0 + a, 1.0 / 3.0)?;
    let third = 8.0 * 6f64.powf(-a - 1.0) * gamma(2.0 + 2.0 * a)? / (1.0 + a) * hyp;
    Ok(first - second + third)
}

/// Signed Poisson-excess coefficient `2^-a G(1+a) (1-a)`; zero at `a = 1`.
pub fn delta_alpha(alpha: WeightExponent) -> Result<f64> {
    let a = alpha.value();
    Ok(exp_moment(a)? * (1.0 - a))
}

/// `E[D^a]` for `D ~ Exp(2)`, the nearest-neighbour distance of a
/// unit-intensity Poisson process on the line. Accepts `a = 0`.
pub fn exp_moment(alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "moment order must be finite and >= 0, got {alpha}"
        )));
    }
    Ok(2f64.powf(-alpha) * gamma(1.0 + alpha)?)
}

/// Limit of `lambda^(a-1) E[L^a(P_lambda; G)]` for a region with
/// `integral of kappa over G = kappa_integral`.
pub fn limiting_mean(alpha: WeightExponent, kappa_integral: f64) -> Result<f64> {
    check_integral(kappa_integral)?;
    Ok(exp_moment(alpha.value())? * kappa_integral)
}

/// Limit of `lambda^(2a-1) Var[L^a(P_lambda; G)]`:
/// `V_a * I + (delta_a * I)^2` with `I` the integral of kappa over `G`.
pub fn limiting_variance(alpha: WeightExponent, kappa_integral: f64) -> Result<f64> {
    check_integral(kappa_integral)?;
    let delta = delta_alpha(alpha)?;
    Ok(v_alpha(alpha)? * kappa_integral + (delta * kappa_integral).powi(2))
}

fn check_integral(kappa_integral: f64) -> Result<()> {
    if kappa_integral >= 0.0 && kappa_integral.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "integral of kappa must be finite and >= 0, got {kappa_integral}"
        )))
    }
}

/// Bundle of every constant needed to state the limits for a set of regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    pub alpha: WeightExponent,
    pub v_alpha: f64,
    pub delta_alpha: f64,
    pub delta_alpha_sq: f64,
    pub limiting_mean_coeff: f64,
    pub sigma_sq_per_region: Vec<f64>,
}

impl AsymptoticConstants {
    pub fn new(alpha: WeightExponent, kappa_integrals: &[f64]) -> Result<Self> {
        let v = v_alpha(alpha)?;
        let delta = delta_alpha(alpha)?;
        let sigma_sq_per_region = kappa_integrals
            .iter()
            .map(|&i| limiting_variance(alpha, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            alpha,
            v_alpha: v,
            delta_alpha: delta,
            delta_alpha_sq: delta * delta,
            limiting_mean_coeff: exp_moment(alpha.value())?,
            sigma_sq_per_region,
        })
    }
}
