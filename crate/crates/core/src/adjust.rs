//! Closed-form partial adjustment for the sham measurement: shrink the sham
//! estimate toward the population bias mean, subtract the shrunken bias, and
//! propagate its posterior uncertainty.
//!
//! With `sigma_b = 0` this reproduces the exposed-only estimate (for
//! `mu_b = 0`), and with `sigma_b = inf` the difference estimate; both limits
//! are handled exactly rather than through large finite values.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{Estimate, EstimateSet, Method};

/// Posterior of one study bias given its sham measurement and the
/// normal(mu_b, sigma_b) population distribution: precision-weighted mean and
/// posterior standard deviation.
pub fn posterior_bias(y0: f64, s0: f64, mu_b: f64, sigma_b: f64) -> Result<(f64, f64)> {
    check_sigma_b(sigma_b)?;
    if sigma_b == 0.0 {
        return Ok((mu_b, 0.0));
    }
    if sigma_b.is_infinite() {
        return Ok((y0, s0));
    }
    let prior_prec = 1.0 / (sigma_b * sigma_b);
    let data_prec = 1.0 / (s0 * s0);
    let b_hat = (prior_prec * mu_b + data_prec * y0) / (prior_prec + data_prec);
    let s_post = (prior_prec + data_prec).powf(-0.5);
    Ok((b_hat, s_post))
}

fn check_sigma_b(sigma_b: f64) -> Result<()> {
    if sigma_b.is_nan() || sigma_b < 0.0 {
        return Err(Error::invalid(
            "sigma_b",
            "must be nonnegative (inf allowed)",
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentRow {
    pub id: String,
    /// Fraction of the (centered) sham measurement subtracted.
    pub lambda: f64,
    /// Posterior mean of the study bias.
    pub b_hat: f64,
    /// Posterior standard deviation of the study bias.
    pub s_post: f64,
    /// Adjusted treatment-effect estimate.
    pub theta_hat: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentResult {
    pub mu_b: f64,
    pub sigma_b: f64,
    pub rows: Vec<AdjustmentRow>,
}

impl AdjustmentResult {
    pub fn to_estimate_set(&self) -> EstimateSet {
        EstimateSet {
            method: Method::LinearAdjust,
            entries: self
                .rows
                .iter()
                .map(|r| Estimate {
                    id: r.id.clone(),
                    estimate: r.theta_hat,
                    se: r.se,
                    df: None,
                })
                .collect(),
        }
    }
}

/// Partially adjust every study for its sham measurement under a fixed
/// normal(mu_b, sigma_b) bias distribution.
pub fn linear_adjust(dataset: &Dataset, mu_b: f64, sigma_b: f64) -> Result<AdjustmentResult> {
    check_sigma_b(sigma_b)?;
    if !mu_b.is_finite() {
        return Err(Error::invalid("mu_b", "must be finite"));
    }
    let rows = dataset
        .summary_records()?
        .iter()
        .map(|r| {
            let (lambda, b_hat, s_post, theta_hat) = if sigma_b == 0.0 {
                (0.0, mu_b, 0.0, r.y1 - mu_b)
            } else if sigma_b.is_infinite() {
                // lambda = 1 exactly; mu_b cancels from the estimate.
                (1.0, r.y0, r.s0, r.y1 - r.y0)
            } else {
                let v_b = sigma_b * sigma_b;
                let lambda = v_b / (v_b + r.s0 * r.s0);
                let (b_hat, s_post) = posterior_bias(r.y0, r.s0, mu_b, sigma_b)?;
                (lambda, b_hat, s_post, r.y1 - mu_b - lambda * (r.y0 - mu_b))
            };
            Ok(AdjustmentRow {
                id: r.id.clone(),
                lambda,
                b_hat,
                s_post,
                theta_hat,
                se: (s_post * s_post + r.s1 * r.s1).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AdjustmentResult {
        mu_b,
        sigma_b,
        rows,
    })
}
