//! Quantiles of the chi-square, F, t and normal distributions.
//!
//! CDFs come from the regularized incomplete gamma and beta functions; the
//! quantiles are found by bisection to an absolute tolerance of 1e-12 on the
//! probability scale's argument.

use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_lr;

use crate::error::{EllipError, Result};

const BISECT_TOL: f64 = 1e-12;
const MAX_ITER: usize = 400;

fn check_prob(prob: f64) -> Result<()> {
    if prob.is_finite() && prob > 0.0 && prob < 1.0 {
        Ok(())
    } else {
        Err(EllipError::invalid(format!(
            "probability must lie in (0, 1), got {prob}"
        )))
    }
}

fn check_df(df: f64, name: &str) -> Result<()> {
    if df.is_finite() && df > 0.0 {
        Ok(())
    } else {
        Err(EllipError::invalid(format!(
            "{name} degrees of freedom must be positive, got {df}"
        )))
    }
}

/// Bisection for an increasing `cdf` on `[lo, hi]`.
fn bisect(cdf: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= BISECT_TOL * (1.0 + mid.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn chisq_cdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(0.5 * df, 0.5 * x)
    }
}

pub fn chisq_quantile(prob: f64, df: f64) -> Result<f64> {
    check_prob(prob)?;
    check_df(df, "chi-square")?;
    let mut hi = df.max(1.0);
    while chisq_cdf(hi, df) < prob {
        hi *= 2.0;
    }
    Ok(bisect(|x| chisq_cdf(x, df), prob, 0.0, hi))
}

pub fn f_cdf(x: f64, df1: f64, df2: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        beta_reg(0.5 * df1, 0.5 * df2, df1 * x / (df1 * x + df2))
    }
}

/// Upper-tail probability of the F distribution.
pub fn f_sf(x: f64, df1: f64, df2: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        beta_reg(0.5 * df2, 0.5 * df1, df2 / (df1 * x + df2))
    }
}

pub fn f_quantile(prob: f64, df1: f64, df2: f64) -> Result<f64> {
    check_prob(prob)?;
    check_df(df1, "numerator")?;
    check_df(df2, "denominator")?;
    // Solve on the beta scale where the support is bounded.
    let (a, b) = (0.5 * df1, 0.5 * df2);
    let u = bisect(|u| beta_reg(a, b, u), prob, 0.0, 1.0);
    Ok(df2 * u / (df1 * (1.0 - u)))
}

pub fn t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * beta_reg(0.5 * df, 0.5, df / (df + t * t));
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

pub fn t_quantile(prob: f64, df: f64) -> Result<f64> {
    check_prob(prob)?;
    check_df(df, "t")?;
    if prob == 0.5 {
        return Ok(0.0);
    }
    let upper = prob.max(1.0 - prob);
    let f = f_quantile(2.0 * upper - 1.0, 1.0, df)?;
    let t = f.sqrt();
    Ok(if prob > 0.5 { t } else { -t })
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}
