//! Gaussian process covariance kernels over the study covariate, plus the
//! small dense Cholesky routines the GP variants need.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative diagonal jitter: the full kernel is alpha^2 * (C + JITTER * I).
/// Repeated covariate values (duplicate frequencies) make C singular without
/// it.
pub const JITTER: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    SquaredExponential,
    Periodic,
}

/// Dense row-major square matrix, just enough for the GP code.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// y = L x for a lower-triangular matrix.
    pub fn lower_mul(&self, x: &[f64], y: &mut [f64]) {
        for (i, out) in y.iter_mut().enumerate() {
            let row = &self.data[i * self.n..i * self.n + i + 1];
            *out = row.iter().zip(&x[..=i]).map(|(a, b)| a * b).sum();
        }
    }

    /// y = L^T x for a lower-triangular matrix.
    #[allow(clippy::needless_range_loop)]
    pub fn lower_transpose_mul(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for i in 0..self.n {
            let xi = x[i];
            for j in 0..=i {
                y[j] += self.data[i * self.n + j] * xi;
            }
        }
    }

    /// Solve L z = x in place (forward substitution).
    #[allow(clippy::needless_range_loop)]
    pub fn lower_solve(&self, x: &mut [f64]) {
        for i in 0..self.n {
            let mut v = x[i];
            for j in 0..i {
                v -= self.data[i * self.n + j] * x[j];
            }
            x[i] = v / self.data[i * self.n + i];
        }
    }

    pub fn log_diag_sum(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).ln()).sum()
    }
}

fn corr_entry(kind: KernelKind, d: f64, ell: f64, period: f64) -> f64 {
    match kind {
        KernelKind::SquaredExponential => (-d * d / (2.0 * ell * ell)).exp(),
        KernelKind::Periodic => {
            let s = (std::f64::consts::PI * d / period).sin();
            (-2.0 * s * s / (ell * ell)).exp()
        }
    }
}

/// Correlation matrix C + JITTER * I (unit diagonal before jitter).
pub(crate) fn corr_matrix(kind: KernelKind, x: &[f64], ell: f64, period: f64) -> SquareMatrix {
    let n = x.len();
    let mut c = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let v = if i == j {
                1.0 + JITTER
            } else {
                corr_entry(kind, (x[i] - x[j]).abs(), ell, period)
            };
            c.set(i, j, v);
        }
    }
    c
}

/// Derivative of the correlation matrix with respect to log(ell).
pub(crate) fn corr_matrix_dlog_ell(
    kind: KernelKind,
    x: &[f64],
    ell: f64,
    period: f64,
) -> SquareMatrix {
    let n = x.len();
    let mut dc = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = (x[i] - x[j]).abs();
            let c = corr_entry(kind, d, ell, period);
            let v = match kind {
                KernelKind::SquaredExponential => c * d * d / (ell * ell),
                KernelKind::Periodic => {
                    let s = (std::f64::consts::PI * d / period).sin();
                    c * 4.0 * s * s / (ell * ell)
                }
            };
            dc.set(i, j, v);
        }
    }
    dc
}

/// Derivative of the periodic correlation matrix with respect to log(period).
pub(crate) fn corr_matrix_dlog_period(x: &[f64], ell: f64, period: f64) -> SquareMatrix {
    let n = x.len();
    let mut dc = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = (x[i] - x[j]).abs();
            let c = corr_entry(KernelKind::Periodic, d, ell, period);
            let u = 2.0 * std::f64::consts::PI * d / period;
            dc.set(i, j, c * u * u.sin() / (ell * ell));
        }
    }
    dc
}

/// Full covariance matrix alpha^2 * exp-kernel with diagonal jitter
/// 1e-8 * alpha^2.
pub fn kernel_matrix(
    kind: KernelKind,
    x: &[f64],
    alpha: f64,
    ell: f64,
    period: f64,
) -> Result<SquareMatrix> {
    if alpha <= 0.0
        || ell <= 0.0
        || period <= 0.0
        || alpha.is_nan()
        || ell.is_nan()
        || period.is_nan()
    {
        return Err(Error::invalid(
            "kernel",
            "alpha, ell, and period must be positive",
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("x", "covariates must be finite"));
    }
    let mut k = corr_matrix(kind, x, ell, period);
    for v in &mut k.data {
        *v *= alpha * alpha;
    }
    Ok(k)
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(a: &SquareMatrix) -> Result<SquareMatrix> {
    let n = a.n;
    let mut l = SquareMatrix::zeros(n);
    for j in 0..n {
        let mut diag = a.get(j, j);
        for k in 0..j {
            let v = l.get(j, k);
            diag -= v * v;
        }
        if diag <= 0.0 || diag.is_nan() {
            return Err(Error::KernelNotPositiveDefinite);
        }
        let dj = diag.sqrt();
        l.set(j, j, dj);
        for i in j + 1..n {
            let mut v = a.get(i, j);
            for k in 0..j {
                v -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, v / dj);
        }
    }
    Ok(l)
}

/// Forward-mode derivative of the Cholesky factor: given A = L L^T and a
/// symmetric direction dA, returns dL from differentiating the recurrence.
pub(crate) fn cholesky_directional(l: &SquareMatrix, da: &SquareMatrix) -> SquareMatrix {
    let n = l.n;
    let mut dl = SquareMatrix::zeros(n);
    for j in 0..n {
        let mut dd = da.get(j, j);
        for k in 0..j {
            dd -= 2.0 * dl.get(j, k) * l.get(j, k);
        }
        let ljj = l.get(j, j);
        let dljj = dd / (2.0 * ljj);
        dl.set(j, j, dljj);
        for i in j + 1..n {
            let mut dv = da.get(i, j);
            for k in 0..j {
                dv -= dl.get(i, k) * l.get(j, k) + l.get(i, k) * dl.get(j, k);
            }
            dv -= l.get(i, j) * dljj;
            dl.set(i, j, dv / ljj);
        }
    }
    dl
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn se_kernel_values() {
        let k =
            kernel_matrix(KernelKind::SquaredExponential, &[0.0, 30.0], 1.0, 30.0, 1.0).unwrap();
        assert!((k.get(0, 0) - (1.0 + 1e-8)).abs() < 1e-15);
        assert!((k.get(0, 1) - (-0.5f64).exp()).abs() < 1e-12);
        assert!((k.get(0, 1) - 0.60653).abs() < 1e-5);
    }

    #[test]
    fn se_kernel_scales_with_alpha_squared() {
        let k =
            kernel_matrix(KernelKind::SquaredExponential, &[0.0, 10.0], 2.0, 30.0, 1.0).unwrap();
        assert!((k.get(0, 0) - 4.0 * (1.0 + 1e-8)).abs() < 1e-12);
    }

    #[test]
    fn periodic_kernel_at_full_period() {
        let k = kernel_matrix(KernelKind::Periodic, &[0.0, 30.0], 1.3, 0.7, 30.0).unwrap();
        // sin(pi) = 0 so the off-diagonal equals alpha^2 with no jitter.
        assert!((k.get(0, 1) - 1.3 * 1.3).abs() < 1e-12);
        assert!(k.get(0, 0) > k.get(0, 1));
    }

    #[test]
    fn kernel_rejects_bad_params() {
        assert!(kernel_matrix(KernelKind::Periodic, &[0.0], 0.0, 1.0, 1.0).is_err());
        assert!(kernel_matrix(KernelKind::Periodic, &[0.0], 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn cholesky_reconstructs() {
        let x = [1.0, 2.0, 2.0, 5.0, 9.0]; // duplicate covariate needs jitter
        let k = kernel_matrix(KernelKind::SquaredExponential, &x, 0.8, 2.0, 1.0).unwrap();
        let l = cholesky(&k).unwrap();
        for i in 0..x.len() {
            for j in 0..x.len() {
                let mut v = 0.0;
                for m in 0..=i.min(j) {
                    v += l.get(i, m) * l.get(j, m);
                }
                assert!((v - k.get(i, j)).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn cholesky_directional_matches_finite_difference() {
        let x = [0.0, 1.0, 3.0, 7.0];
        let ell = 2.0;
        let h = 1e-6;
        let c = corr_matrix(KernelKind::SquaredExponential, &x, ell, 1.0);
        let l = cholesky(&c).unwrap();
        let dc = corr_matrix_dlog_ell(KernelKind::SquaredExponential, &x, ell, 1.0);
        let dl = cholesky_directional(&l, &dc);

        // Finite difference in log(ell).
        let lp = cholesky(&corr_matrix(
            KernelKind::SquaredExponential,
            &x,
            (ell.ln() + h).exp(),
            1.0,
        ))
        .unwrap();
        let lm = cholesky(&corr_matrix(
            KernelKind::SquaredExponential,
            &x,
            (ell.ln() - h).exp(),
            1.0,
        ))
        .unwrap();
        for i in 0..x.len() {
            for j in 0..=i {
                let fd = (lp.get(i, j) - lm.get(i, j)) / (2.0 * h);
                assert!(
                    (fd - dl.get(i, j)).abs() < 1e-7,
                    "({i},{j}): fd {fd} vs {}",
                    dl.get(i, j)
                );
            }
        }
    }

    #[test]
    fn periodic_dlog_period_matches_finite_difference() {
        let x = [0.0, 4.0, 11.0];
        let ell = 0.9;
        let period = 13.0;
        let h = 1e-6;
        let dc = corr_matrix_dlog_period(&x, ell, period);
        let cp = corr_matrix(KernelKind::Periodic, &x, ell, (period.ln() + h).exp());
        let cm = corr_matrix(KernelKind::Periodic, &x, ell, (period.ln() - h).exp());
        for i in 0..x.len() {
            for j in 0..x.len() {
                let fd = (cp.get(i, j) - cm.get(i, j)) / (2.0 * h);
                assert!((fd - dc.get(i, j)).abs() < 1e-7, "({i},{j})");
            }
        }
    }
}
