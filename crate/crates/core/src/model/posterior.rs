//! Density and gradient evaluation for every model variant.
//!
//! `eval` works on the unconstrained scale and includes the standard-normal
//! densities of the raw latents plus all change-of-variable terms;
//! `log_posterior_centered` evaluates the same model on the constrained
//! scale with no transform terms, which the tests use as an independent
//! route to the same density.

use super::kernel;
use super::HyperParams;
use super::{HyperCoord, LatentState, Model, PriorKind, Variant};
use crate::error::{Error, Result};
use crate::math::{
    half_normal_logpdf, inv_logit, normal_logpdf, softplus, std_normal_logpdf, LN_2PI,
};

/// Constrained hyperparameter values paired with the index of the matching
/// unconstrained coordinate (None when fixed or absent from the variant).
#[derive(Debug, Clone, Copy)]
pub(crate) struct HyperView {
    pub mu_t: f64,
    pub sig_t: f64,
    pub mu_b: f64,
    pub sig_b: f64,
    pub rho: f64,
    pub alpha: f64,
    pub ell: f64,
    pub period: f64,
    pub a: f64,
    pub b_slope: f64,
    pub i_mu_t: Option<usize>,
    pub i_sig_t: Option<usize>,
    pub i_mu_b: Option<usize>,
    pub i_sig_b: Option<usize>,
    pub i_rho: Option<usize>,
    pub i_alpha: Option<usize>,
    pub i_ell: Option<usize>,
    pub i_period: Option<usize>,
    pub i_a: Option<usize>,
    pub i_b_slope: Option<usize>,
}

impl Default for HyperView {
    fn default() -> Self {
        HyperView {
            mu_t: 0.0,
            sig_t: 1.0,
            mu_b: 0.0,
            sig_b: 1.0,
            rho: 0.0,
            alpha: 1.0,
            ell: 1.0,
            period: 1.0,
            a: 0.0,
            b_slope: 0.0,
            i_mu_t: None,
            i_sig_t: None,
            i_mu_b: None,
            i_sig_b: None,
            i_rho: None,
            i_alpha: None,
            i_ell: None,
            i_period: None,
            i_a: None,
            i_b_slope: None,
        }
    }
}

impl Model {
    pub(crate) fn hyper_view(&self, p: &[f64]) -> HyperView {
        let mut h = HyperView::default();
        if let Some(fixed) = &self.spec.fixed {
            if let Some(v) = fixed.mu_theta {
                h.mu_t = v;
            }
            if let Some(v) = fixed.sigma_theta {
                h.sig_t = v;
            }
            if let Some(v) = fixed.mu_b {
                h.mu_b = v;
            }
            if let Some(v) = fixed.sigma_b {
                h.sig_b = v;
            }
            if let Some(v) = fixed.rho {
                h.rho = v;
            }
            if let Some(v) = fixed.alpha {
                h.alpha = v;
            }
            if let Some(v) = fixed.ell {
                h.ell = v;
            }
            if let Some(v) = fixed.period {
                h.period = v;
            }
            if let Some(v) = fixed.trend_a {
                h.a = v;
            }
            if let Some(v) = fixed.trend_b {
                h.b_slope = v;
            }
            return h;
        }
        for (k, coord) in self.hypers.iter().enumerate() {
            let i = self.latent_dim + k;
            let v = coord.constrain(p[i]);
            match coord {
                HyperCoord::MuTheta => {
                    h.mu_t = v;
                    h.i_mu_t = Some(i);
                }
                HyperCoord::LogSigmaTheta => {
                    h.sig_t = v;
                    h.i_sig_t = Some(i);
                }
                HyperCoord::MuB => {
                    h.mu_b = v;
                    h.i_mu_b = Some(i);
                }
                HyperCoord::LogSigmaB => {
                    h.sig_b = v;
                    h.i_sig_b = Some(i);
                }
                HyperCoord::AtanhRho => {
                    h.rho = v;
                    h.i_rho = Some(i);
                }
                HyperCoord::LogAlpha => {
                    h.alpha = v;
                    h.i_alpha = Some(i);
                }
                HyperCoord::LogEll => {
                    h.ell = v;
                    h.i_ell = Some(i);
                }
                HyperCoord::LogPeriod => {
                    h.period = v;
                    h.i_period = Some(i);
                }
                HyperCoord::TrendA => {
                    h.a = v;
                    h.i_a = Some(i);
                }
                HyperCoord::TrendB => {
                    h.b_slope = v;
                    h.i_b_slope = Some(i);
                }
            }
        }
        h
    }

    /// Per-study log likelihood and its derivatives with respect to theta_j
    /// and b_j.
    #[inline]
    fn lik_j(&self, j: usize, theta: f64, b: f64) -> (f64, f64, f64) {
        if let Some(c) = &self.data.counts {
            let eta1 = theta + b;
            let eta0 = b;
            let lp = c.n1[j] * eta1 - c.total1[j] * softplus(eta1) + c.n0[j] * eta0
                - c.total0[j] * softplus(eta0);
            let et = c.n1[j] - c.total1[j] * inv_logit(eta1);
            let eb = et + c.n0[j] - c.total0[j] * inv_logit(eta0);
            (lp, et, eb)
        } else {
            let d = &self.data;
            let r1 = d.y1[j] - theta - b;
            let r0 = d.y0[j] - b;
            let lp = -LN_2PI
                - d.s1[j].ln()
                - d.s0[j].ln()
                - 0.5 * (r1 * r1 * d.w1[j] + r0 * r0 * d.w0[j]);
            let et = r1 * d.w1[j];
            let eb = et + r0 * d.w0[j];
            (lp, et, eb)
        }
    }

    /// Unnormalized log posterior; fills `grad` with the analytic gradient
    /// when given. Returns negative infinity on numeric failure (including a
    /// kernel Cholesky breakdown), which the sampler treats as a rejection.
    pub(crate) fn eval(&self, p: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let n = self.n;
        if p.iter().any(|v| !v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }

        macro_rules! gadd {
            ($i:expr, $v:expr) => {
                if let Some(g) = grad.as_deref_mut() {
                    g[$i] += $v;
                }
            };
        }

        let h = self.hyper_view(p);
        let mut lp = 0.0;

        match self.spec.variant {
            Variant::DiffMeta => {
                let rt = &p[..n];
                for j in 0..n {
                    let theta = h.mu_t + h.sig_t * rt[j];
                    let sd = self.data.sdiff[j];
                    let resid = self.data.ydiff[j] - theta;
                    let w = 1.0 / (sd * sd);
                    lp += -0.5 * LN_2PI - sd.ln() - 0.5 * resid * resid * w;
                    lp += std_normal_logpdf(rt[j]);
                    let e = resid * w;
                    gadd!(j, e * h.sig_t - rt[j]);
                    if let Some(i) = h.i_mu_t {
                        gadd!(i, e);
                    }
                    if let Some(i) = h.i_sig_t {
                        gadd!(i, e * h.sig_t * rt[j]);
                    }
                }
            }

            Variant::NormalDefault | Variant::Binomial => {
                let (rt, rb) = (&p[..n], &p[n..2 * n]);
                for j in 0..n {
                    let theta = h.mu_t + h.sig_t * rt[j];
                    let b = h.mu_b + h.sig_b * rb[j];
                    let (l, et, eb) = self.lik_j(j, theta, b);
                    lp += l + std_normal_logpdf(rt[j]) + std_normal_logpdf(rb[j]);
                    gadd!(j, et * h.sig_t - rt[j]);
                    gadd!(n + j, eb * h.sig_b - rb[j]);
                    if let Some(i) = h.i_mu_t {
                        gadd!(i, et);
                    }
                    if let Some(i) = h.i_sig_t {
                        gadd!(i, et * h.sig_t * rt[j]);
                    }
                    if let Some(i) = h.i_mu_b {
                        gadd!(i, eb);
                    }
                    if let Some(i) = h.i_sig_b {
                        gadd!(i, eb * h.sig_b * rb[j]);
                    }
                }
                if let Some(c) = &self.data.counts {
                    lp += c.ln_choose;
                }
            }

            Variant::Correlated => {
                let (r1, r2) = (&p[..n], &p[n..2 * n]);
                let q = (1.0 - h.rho * h.rho).sqrt();
                for j in 0..n {
                    let theta = h.mu_t + h.sig_t * r1[j];
                    let b = h.mu_b + h.sig_b * (h.rho * r1[j] + q * r2[j]);
                    let (l, et, eb) = self.lik_j(j, theta, b);
                    lp += l + std_normal_logpdf(r1[j]) + std_normal_logpdf(r2[j]);
                    gadd!(j, et * h.sig_t + eb * h.sig_b * h.rho - r1[j]);
                    gadd!(n + j, eb * h.sig_b * q - r2[j]);
                    if let Some(i) = h.i_mu_t {
                        gadd!(i, et);
                    }
                    if let Some(i) = h.i_sig_t {
                        gadd!(i, et * h.sig_t * r1[j]);
                    }
                    if let Some(i) = h.i_mu_b {
                        gadd!(i, eb);
                    }
                    if let Some(i) = h.i_sig_b {
                        gadd!(i, eb * h.sig_b * (h.rho * r1[j] + q * r2[j]));
                    }
                    if let Some(i) = h.i_rho {
                        // d b / d atanh(rho), with dq/drho folded in:
                        // sigma_b * (r1 (1 - rho^2) - rho q r2)
                        gadd!(
                            i,
                            eb * h.sig_b * (r1[j] * (1.0 - h.rho * h.rho) - h.rho * q * r2[j])
                        );
                    }
                }
            }

            Variant::NoPoolTheta => {
                let (th, rb) = (&p[..n], &p[n..2 * n]);
                for j in 0..n {
                    let b = h.mu_b + h.sig_b * rb[j];
                    let (l, et, eb) = self.lik_j(j, th[j], b);
                    lp += l + std_normal_logpdf(rb[j]);
                    gadd!(j, et);
                    gadd!(n + j, eb * h.sig_b - rb[j]);
                    if let Some(i) = h.i_mu_b {
                        gadd!(i, eb);
                    }
                    if let Some(i) = h.i_sig_b {
                        gadd!(i, eb * h.sig_b * rb[j]);
                    }
                }
            }

            Variant::NoPoolBoth => {
                let (th, bv) = (&p[..n], &p[n..2 * n]);
                for j in 0..n {
                    let (l, et, eb) = self.lik_j(j, th[j], bv[j]);
                    lp += l;
                    gadd!(j, et);
                    gadd!(n + j, eb);
                }
            }

            Variant::GpSe | Variant::GpPeriodic => {
                let kind = if self.spec.variant == Variant::GpSe {
                    kernel::KernelKind::SquaredExponential
                } else {
                    kernel::KernelKind::Periodic
                };
                let x = self.data.x.as_ref().expect("validated at construction");
                let local_chol;
                let lmat = match &self.fixed_chol {
                    Some(c) => c,
                    None => {
                        match kernel::cholesky(&kernel::corr_matrix(kind, x, h.ell, h.period)) {
                            Ok(c) => {
                                local_chol = c;
                                &local_chol
                            }
                            Err(_) => return f64::NEG_INFINITY,
                        }
                    }
                };

                let (rt, rb) = (&p[..n], &p[n..2 * n]);
                let mut lr = vec![0.0; n];
                lmat.lower_mul(rt, &mut lr);

                let mut et = vec![0.0; n];
                for j in 0..n {
                    let theta = h.mu_t + h.alpha * lr[j];
                    let b = h.mu_b + h.sig_b * rb[j];
                    let (l, etj, ebj) = self.lik_j(j, theta, b);
                    lp += l + std_normal_logpdf(rt[j]) + std_normal_logpdf(rb[j]);
                    et[j] = etj;
                    gadd!(n + j, ebj * h.sig_b - rb[j]);
                    if let Some(i) = h.i_mu_t {
                        gadd!(i, etj);
                    }
                    if let Some(i) = h.i_mu_b {
                        gadd!(i, ebj);
                    }
                    if let Some(i) = h.i_sig_b {
                        gadd!(i, ebj * h.sig_b * rb[j]);
                    }
                    if let Some(i) = h.i_alpha {
                        gadd!(i, etj * h.alpha * lr[j]);
                    }
                }
                if grad.is_some() {
                    let mut lt_et = vec![0.0; n];
                    lmat.lower_transpose_mul(&et, &mut lt_et);
                    for j in 0..n {
                        gadd!(j, h.alpha * lt_et[j] - rt[j]);
                    }
                    if let Some(i) = h.i_ell {
                        let dc = kernel::corr_matrix_dlog_ell(kind, x, h.ell, h.period);
                        let dl = kernel::cholesky_directional(lmat, &dc);
                        let mut dtheta = vec![0.0; n];
                        dl.lower_mul(rt, &mut dtheta);
                        let g: f64 = (0..n).map(|j| et[j] * h.alpha * dtheta[j]).sum();
                        gadd!(i, g);
                    }
                    if let Some(i) = h.i_period {
                        let dc = kernel::corr_matrix_dlog_period(x, h.ell, h.period);
                        let dl = kernel::cholesky_directional(lmat, &dc);
                        let mut dtheta = vec![0.0; n];
                        dl.lower_mul(rt, &mut dtheta);
                        let g: f64 = (0..n).map(|j| et[j] * h.alpha * dtheta[j]).sum();
                        gadd!(i, g);
                    }
                }
            }

            Variant::LinearTrend => {
                let x = self.data.x.as_ref().expect("validated at construction");
                let (rt, rb) = (&p[..n], &p[n..2 * n]);
                for j in 0..n {
                    let theta = h.a + h.b_slope * x[j] + h.sig_t * rt[j];
                    let b = h.mu_b + h.sig_b * rb[j];
                    let (l, et, eb) = self.lik_j(j, theta, b);
                    lp += l + std_normal_logpdf(rt[j]) + std_normal_logpdf(rb[j]);
                    gadd!(j, et * h.sig_t - rt[j]);
                    gadd!(n + j, eb * h.sig_b - rb[j]);
                    if let Some(i) = h.i_a {
                        gadd!(i, et);
                    }
                    if let Some(i) = h.i_b_slope {
                        gadd!(i, et * x[j]);
                    }
                    if let Some(i) = h.i_sig_t {
                        gadd!(i, et * h.sig_t * rt[j]);
                    }
                    if let Some(i) = h.i_mu_b {
                        gadd!(i, eb);
                    }
                    if let Some(i) = h.i_sig_b {
                        gadd!(i, eb * h.sig_b * rb[j]);
                    }
                }
            }
        }

        // Hyperprior and change-of-variable terms.
        let weak = self.spec.prior == PriorKind::Weak;
        let gp = self.spec.gp;
        for (k, coord) in self.hypers.iter().enumerate() {
            let i = self.latent_dim + k;
            let u = p[i];
            match coord {
                HyperCoord::MuTheta | HyperCoord::MuB | HyperCoord::TrendA | HyperCoord::TrendB => {
                    if weak {
                        lp += std_normal_logpdf(u);
                        gadd!(i, -u);
                    }
                }
                HyperCoord::LogSigmaTheta | HyperCoord::LogSigmaB => {
                    let sigma = u.exp();
                    if weak {
                        lp += half_normal_logpdf(sigma, 1.0) + u;
                        gadd!(i, 1.0 - sigma * sigma);
                    } else {
                        lp += u;
                        gadd!(i, 1.0);
                    }
                }
                HyperCoord::AtanhRho => {
                    let rho = u.tanh();
                    lp += (1.0 - rho * rho).ln() + 0.5f64.ln();
                    gadd!(i, -2.0 * rho);
                }
                HyperCoord::LogAlpha => {
                    let alpha = u.exp();
                    lp += half_normal_logpdf(alpha, gp.alpha_scale) + u;
                    gadd!(i, 1.0 - (alpha / gp.alpha_scale).powi(2));
                }
                HyperCoord::LogEll => {
                    lp += normal_logpdf(u, gp.ell_log_mean, gp.ell_log_sd);
                    gadd!(i, -(u - gp.ell_log_mean) / (gp.ell_log_sd * gp.ell_log_sd));
                }
                HyperCoord::LogPeriod => {
                    lp += normal_logpdf(u, gp.period_log_mean, gp.period_log_sd);
                    gadd!(
                        i,
                        -(u - gp.period_log_mean) / (gp.period_log_sd * gp.period_log_sd)
                    );
                }
            }
        }

        lp
    }

    /// Same density evaluated on the constrained scale: likelihood plus
    /// latent densities plus the hyperprior, with no transform terms.
    #[allow(clippy::needless_range_loop)]
    pub fn log_posterior_centered(
        &self,
        hp: &HyperParams,
        theta: &[f64],
        b: &[f64],
    ) -> Result<f64> {
        let n = self.n;
        if theta.len() != n || (super::has_b(self.spec.variant) && b.len() != n) {
            return Err(Error::Incompatible(
                "latent vectors do not match the dataset size".into(),
            ));
        }
        let mut lp = 0.0;

        // Likelihood.
        if self.spec.variant == Variant::DiffMeta {
            for j in 0..n {
                lp += normal_logpdf(self.data.ydiff[j], theta[j], self.data.sdiff[j]);
            }
        } else {
            for j in 0..n {
                lp += self.lik_j(j, theta[j], b[j]).0;
            }
            if let Some(c) = &self.data.counts {
                lp += c.ln_choose;
            }
        }

        let get = |v: Option<f64>, name: &'static str| -> Result<f64> {
            v.ok_or_else(|| Error::invalid("hyperparams", format!("missing {name}")))
        };

        // Latent densities.
        match self.spec.variant {
            Variant::NormalDefault | Variant::Binomial => {
                let (mu_t, sig_t) = (
                    get(hp.mu_theta, "mu_theta")?,
                    get(hp.sigma_theta, "sigma_theta")?,
                );
                let (mu_b, sig_b) = (get(hp.mu_b, "mu_b")?, get(hp.sigma_b, "sigma_b")?);
                for (t, bb) in theta.iter().zip(b) {
                    lp += normal_logpdf(*t, mu_t, sig_t) + normal_logpdf(*bb, mu_b, sig_b);
                }
            }
            Variant::DiffMeta => {
                let (mu_t, sig_t) = (
                    get(hp.mu_theta, "mu_theta")?,
                    get(hp.sigma_theta, "sigma_theta")?,
                );
                for t in theta {
                    lp += normal_logpdf(*t, mu_t, sig_t);
                }
            }
            Variant::Correlated => {
                let (mu_t, sig_t) = (
                    get(hp.mu_theta, "mu_theta")?,
                    get(hp.sigma_theta, "sigma_theta")?,
                );
                let (mu_b, sig_b) = (get(hp.mu_b, "mu_b")?, get(hp.sigma_b, "sigma_b")?);
                let rho = get(hp.rho, "rho")?;
                let om = 1.0 - rho * rho;
                for (t, bb) in theta.iter().zip(b) {
                    let z1 = (t - mu_t) / sig_t;
                    let z2 = (bb - mu_b) / sig_b;
                    lp += -LN_2PI
                        - sig_t.ln()
                        - sig_b.ln()
                        - 0.5 * om.ln()
                        - (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / (2.0 * om);
                }
            }
            Variant::NoPoolTheta => {
                let (mu_b, sig_b) = (get(hp.mu_b, "mu_b")?, get(hp.sigma_b, "sigma_b")?);
                for bb in b {
                    lp += normal_logpdf(*bb, mu_b, sig_b);
                }
            }
            Variant::NoPoolBoth => {}
            Variant::GpSe | Variant::GpPeriodic => {
                let kind = self.spec.variant.kernel_kind().unwrap();
                let x = self.data.x.as_ref().unwrap();
                let mu_t = get(hp.mu_theta, "mu_theta")?;
                let alpha = get(hp.alpha, "alpha")?;
                let ell = get(hp.ell, "ell")?;
                let period = hp.period.unwrap_or(1.0);
                let (mu_b, sig_b) = (get(hp.mu_b, "mu_b")?, get(hp.sigma_b, "sigma_b")?);
                let lmat = kernel::cholesky(&kernel::corr_matrix(kind, x, ell, period))?;
                let mut z: Vec<f64> = theta.iter().map(|t| (t - mu_t) / alpha).collect();
                lmat.lower_solve(&mut z);
                lp += -0.5 * n as f64 * LN_2PI
                    - n as f64 * alpha.ln()
                    - lmat.log_diag_sum()
                    - 0.5 * z.iter().map(|v| v * v).sum::<f64>();
                for bb in b {
                    lp += normal_logpdf(*bb, mu_b, sig_b);
                }
            }
            Variant::LinearTrend => {
                let a = get(hp.trend_a, "trend_a")?;
                let slope = get(hp.trend_b, "trend_b")?;
                let sig_t = get(hp.sigma_theta, "sigma_theta")?;
                let (mu_b, sig_b) = (get(hp.mu_b, "mu_b")?, get(hp.sigma_b, "sigma_b")?);
                let x = self.data.x.as_ref().unwrap();
                for j in 0..n {
                    lp += normal_logpdf(theta[j], a + slope * x[j], sig_t);
                    lp += normal_logpdf(b[j], mu_b, sig_b);
                }
            }
        }

        // Hyperprior on the constrained scale (zero when fixed: constants).
        if self.spec.fixed.is_none() {
            let weak = self.spec.prior == PriorKind::Weak;
            let gp = self.spec.gp;
            for coord in &self.hypers {
                match coord {
                    HyperCoord::MuTheta => {
                        if weak {
                            lp += std_normal_logpdf(hp.mu_theta.unwrap());
                        }
                    }
                    HyperCoord::MuB => {
                        if weak {
                            lp += std_normal_logpdf(hp.mu_b.unwrap());
                        }
                    }
                    HyperCoord::TrendA => {
                        if weak {
                            lp += std_normal_logpdf(hp.trend_a.unwrap());
                        }
                    }
                    HyperCoord::TrendB => {
                        if weak {
                            lp += std_normal_logpdf(hp.trend_b.unwrap());
                        }
                    }
                    HyperCoord::LogSigmaTheta => {
                        if weak {
                            lp += half_normal_logpdf(hp.sigma_theta.unwrap(), 1.0);
                        }
                    }
                    HyperCoord::LogSigmaB => {
                        if weak {
                            lp += half_normal_logpdf(hp.sigma_b.unwrap(), 1.0);
                        }
                    }
                    HyperCoord::AtanhRho => {
                        lp += 0.5f64.ln();
                    }
                    HyperCoord::LogAlpha => {
                        lp += half_normal_logpdf(hp.alpha.unwrap(), gp.alpha_scale);
                    }
                    HyperCoord::LogEll => {
                        let ell = hp.ell.unwrap();
                        lp += normal_logpdf(ell.ln(), gp.ell_log_mean, gp.ell_log_sd) - ell.ln();
                    }
                    HyperCoord::LogPeriod => {
                        let period = hp.period.unwrap();
                        lp += normal_logpdf(period.ln(), gp.period_log_mean, gp.period_log_sd)
                            - period.ln();
                    }
                }
            }
        }

        Ok(lp)
    }
}

/// Rebuild the constrained per-study latents from an unconstrained vector.
pub(crate) fn reconstruct_latents(model: &Model, p: &[f64], hp: &HyperParams) -> LatentState {
    let n = model.n;
    let raw_theta = p[..n].to_vec();
    let raw_b = if super::has_b(model.spec.variant) {
        p[n..2 * n].to_vec()
    } else {
        Vec::new()
    };

    let theta: Vec<f64>;
    let b: Vec<f64>;
    match model.spec.variant {
        Variant::NormalDefault | Variant::Binomial | Variant::DiffMeta => {
            let mu_t = hp.mu_theta.unwrap_or(0.0);
            let sig_t = hp.sigma_theta.unwrap_or(1.0);
            theta = raw_theta.iter().map(|r| mu_t + sig_t * r).collect();
            b = hier_b(hp, &raw_b);
        }
        Variant::Correlated => {
            let mu_t = hp.mu_theta.unwrap_or(0.0);
            let sig_t = hp.sigma_theta.unwrap_or(1.0);
            let mu_b = hp.mu_b.unwrap_or(0.0);
            let sig_b = hp.sigma_b.unwrap_or(1.0);
            let rho = hp.rho.unwrap_or(0.0);
            let q = (1.0 - rho * rho).sqrt();
            theta = raw_theta.iter().map(|r| mu_t + sig_t * r).collect();
            b = raw_theta
                .iter()
                .zip(&raw_b)
                .map(|(r1, r2)| mu_b + sig_b * (rho * r1 + q * r2))
                .collect();
        }
        Variant::NoPoolTheta => {
            theta = raw_theta.clone();
            b = hier_b(hp, &raw_b);
        }
        Variant::NoPoolBoth => {
            theta = raw_theta.clone();
            b = raw_b.clone();
        }
        Variant::GpSe | Variant::GpPeriodic => {
            let kind = model.spec.variant.kernel_kind().unwrap();
            let x = model.data.x.as_ref().unwrap();
            let mu_t = hp.mu_theta.unwrap_or(0.0);
            let alpha = hp.alpha.unwrap_or(1.0);
            let ell = hp.ell.unwrap_or(1.0);
            let period = hp.period.unwrap_or(1.0);
            let lmat = match &model.fixed_chol {
                Some(c) => c.clone(),
                None => kernel::cholesky(&kernel::corr_matrix(kind, x, ell, period))
                    .unwrap_or_else(|_| kernel::SquareMatrix::zeros(n)),
            };
            let mut lr = vec![0.0; n];
            lmat.lower_mul(&raw_theta, &mut lr);
            theta = lr.iter().map(|v| mu_t + alpha * v).collect();
            b = hier_b(hp, &raw_b);
        }
        Variant::LinearTrend => {
            let a = hp.trend_a.unwrap_or(0.0);
            let slope = hp.trend_b.unwrap_or(0.0);
            let sig_t = hp.sigma_theta.unwrap_or(1.0);
            let x = model.data.x.as_ref().unwrap();
            theta = raw_theta
                .iter()
                .zip(x)
                .map(|(r, xj)| a + slope * xj + sig_t * r)
                .collect();
            b = hier_b(hp, &raw_b);
        }
    }

    LatentState {
        theta,
        b,
        raw_theta,
        raw_b,
    }
}

fn hier_b(hp: &HyperParams, raw_b: &[f64]) -> Vec<f64> {
    let mu_b = hp.mu_b.unwrap_or(0.0);
    let sig_b = hp.sigma_b.unwrap_or(1.0);
    raw_b.iter().map(|r| mu_b + sig_b * r).collect()
}
