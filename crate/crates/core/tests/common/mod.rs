//! Shared test oracles: central finite differences for gradients, random
//! dataset generators, and the conjugate Gaussian posterior for
//! fixed-hyperparameter fits. These deliberately avoid the library's own
//! gradient and sampling code paths.

#![allow(dead_code)]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use shamstat::data::{CountRecord, Dataset, StudyRecord};
use shamstat::model::Model;

/// Central finite-difference gradient with per-coordinate step
/// 1e-5 * (1 + |p_i|).
pub fn fd_gradient(model: &Model, p: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; p.len()];
    let mut work = p.to_vec();
    for i in 0..p.len() {
        let h = 1e-5 * (1.0 + p[i].abs());
        work[i] = p[i] + h;
        let fp = model.log_posterior(&work).unwrap();
        work[i] = p[i] - h;
        let fm = model.log_posterior(&work).unwrap();
        work[i] = p[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Scale-guarded relative error used for gradient comparisons.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Random summary dataset with a covariate on every record.
pub fn random_summary_dataset(rng: &mut ChaCha8Rng, n: usize) -> Dataset {
    let records = (0..n)
        .map(|j| StudyRecord {
            id: format!("s{}", j + 1),
            x: Some(1.0 + 15.0 * j as f64),
            y1: 0.1 + 0.1 * std_normal(rng),
            s1: rng.random_range(0.02..0.08),
            y0: 0.05 * std_normal(rng),
            s0: rng.random_range(0.02..0.08),
            n1: Some(32),
            n0: Some(32),
        })
        .collect();
    Dataset::summary(records).unwrap()
}

/// Random count dataset.
pub fn random_count_dataset(rng: &mut ChaCha8Rng, n: usize) -> Dataset {
    let records = (0..n)
        .map(|j| {
            let total1 = rng.random_range(8..30u32);
            let total0 = rng.random_range(8..30u32);
            CountRecord {
                id: format!("c{}", j + 1),
                n1: rng.random_range(0..=total1),
                total1,
                n0: rng.random_range(0..=total0),
                total0,
            }
        })
        .collect();
    Dataset::count(records).unwrap()
}

/// Random unconstrained parameter point of moderate scale.
pub fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| 0.5 * std_normal(rng)).collect()
}

/// Random point with the GP kernel coordinates kept in a well-conditioned
/// region. Length-scales much larger than the covariate spacing drive the
/// correlation matrix toward singular (saved only by the jitter), where the
/// density's higher derivatives through the Cholesky factor explode and
/// central differences cannot resolve the gradient; periods near zero do the
/// same through kernel oscillation.
pub fn random_point_for(model: &Model, rng: &mut ChaCha8Rng) -> Vec<f64> {
    use shamstat::model::Variant;
    let gp = model.spec().gp;
    // The SE length-scale lives in covariate units (spacing 15 here); the
    // periodic one is unitless against the normalized sine.
    let ell_center = if model.spec().variant == Variant::GpPeriodic {
        0.0
    } else {
        10.0f64.ln()
    };
    model
        .unconstrained_names()
        .iter()
        .map(|name| match name.as_str() {
            "log_ell" => ell_center + 0.3 * std_normal(rng),
            "log_period" => gp.period_log_mean + 0.3 * std_normal(rng),
            _ => 0.5 * std_normal(rng),
        })
        .collect()
}

/// Closed-form bivariate normal posterior of (theta_j, b_j) for one study
/// under fixed hyperparameters, normal likelihood:
///   y1 ~ N(theta + b, s1),  y0 ~ N(b, s0),
///   theta ~ N(mu_t, sig_t), b ~ N(mu_b, sig_b)  (prior precision 0 allowed).
/// Returns (mean_theta, mean_b, var_theta, var_b, cov).
pub fn conjugate_pair_posterior(
    y1: f64,
    s1: f64,
    y0: f64,
    s0: f64,
    mu_t: f64,
    prec_t: f64,
    mu_b: f64,
    prec_b: f64,
) -> (f64, f64, f64, f64, f64) {
    let w1 = 1.0 / (s1 * s1);
    let w0 = 1.0 / (s0 * s0);
    // Precision matrix of (theta, b).
    let a = prec_t + w1;
    let c = w1;
    let d = prec_b + w1 + w0;
    // Information vector.
    let e1 = prec_t * mu_t + w1 * y1;
    let e2 = prec_b * mu_b + w1 * y1 + w0 * y0;
    let det = a * d - c * c;
    let var_t = d / det;
    let var_b = a / det;
    let cov = -c / det;
    let mean_t = (d * e1 - c * e2) / det;
    let mean_b = (-c * e1 + a * e2) / det;
    (mean_t, mean_b, var_t, var_b, cov)
}

/// Posterior mean and marginal variances of a Gaussian in precision form:
/// posterior precision `lambda`, information vector `eta`. Solved densely via
/// Cholesky; test-scale dimensions only.
pub fn gaussian_posterior(
    lambda: &shamstat::model::SquareMatrix,
    eta: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = lambda.n;
    let l = shamstat::model::kernel::cholesky(lambda).expect("oracle precision must be SPD");
    let solve = |b: &[f64]| -> Vec<f64> {
        // L y = b, then L^T x = y.
        let mut y = b.to_vec();
        for i in 0..n {
            let mut v = y[i];
            for j in 0..i {
                v -= l.get(i, j) * y[j];
            }
            y[i] = v / l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            for j in i + 1..n {
                v -= l.get(j, i) * y[j];
            }
            y[i] = v / l.get(i, i);
        }
        y
    };
    let mean = solve(eta);
    let mut var = vec![0.0; n];
    let mut unit = vec![0.0; n];
    for k in 0..n {
        unit.fill(0.0);
        unit[k] = 1.0;
        var[k] = solve(&unit)[k];
    }
    (mean, var)
}

/// Build the joint Gaussian posterior of (theta_1..J, b_1..J) for a fixed-
/// hyperparameter model with normal likelihood, given the prior precision
/// matrix over the latents and the prior mean.
pub fn joint_posterior_from_prior(
    dataset: &Dataset,
    prior_prec: &shamstat::model::SquareMatrix,
    prior_mean: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let records = dataset.summary_records().unwrap();
    let j = records.len();
    let n = 2 * j;
    let mut lambda = prior_prec.clone();
    let mut eta = vec![0.0; n];
    // eta from the prior: Lambda_0 * mu_0.
    for i in 0..n {
        let mut v = 0.0;
        for k in 0..n {
            v += prior_prec.get(i, k) * prior_mean[k];
        }
        eta[i] = v;
    }
    for (idx, r) in records.iter().enumerate() {
        let w1 = 1.0 / (r.s1 * r.s1);
        let w0 = 1.0 / (r.s0 * r.s0);
        let (ti, bi) = (idx, j + idx);
        lambda.set(ti, ti, lambda.get(ti, ti) + w1);
        lambda.set(bi, bi, lambda.get(bi, bi) + w1 + w0);
        lambda.set(ti, bi, lambda.get(ti, bi) + w1);
        lambda.set(bi, ti, lambda.get(bi, ti) + w1);
        eta[ti] += w1 * r.y1;
        eta[bi] += w1 * r.y1 + w0 * r.y0;
    }
    gaussian_posterior(&lambda, &eta)
}

#[cfg(test)]
mod self_checks {
    use super::*;

    #[test]
    fn conjugate_pair_recovers_prior_with_infinite_noise() {
        let (mt, mb, vt, vb, _) =
            conjugate_pair_posterior(0.0, 1e9, 0.0, 1e9, 0.3, 1.0 / 0.04, -0.1, 1.0 / 0.09);
        assert!((mt - 0.3).abs() < 1e-6);
        assert!((mb - (-0.1)).abs() < 1e-6);
        assert!((vt - 0.04).abs() < 1e-6);
        assert!((vb - 0.09).abs() < 1e-6);
    }
}
