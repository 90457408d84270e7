//! Model variants over paired active/sham studies: unnormalized log posterior
//! densities and analytic gradients on an unconstrained parameterization.
//!
//! All hierarchical latents use the non-centered parameterization
//! (`theta = mu + sigma * raw`), scales are sampled as logs, and the bias
//! correlation as atanh(rho), with the change-of-variable terms included in
//! the density. The funnel at small sigma (the fitted chick data put sigma_b
//! near 0.008) makes the centered form unusable for gradient-based sampling.

pub mod kernel;
mod posterior;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
pub use kernel::{kernel_matrix, KernelKind, SquareMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Independent normal hierarchies on effects and biases.
    NormalDefault,
    /// Bivariate normal over (theta_j, b_j) with correlation rho.
    Correlated,
    /// Binomial likelihood on remission counts via inverse-logit.
    Binomial,
    /// Meta-analysis of the per-study differences; no bias latents.
    DiffMeta,
    /// Flat density on theta_j (no pooling of effects), biases pooled.
    NoPoolTheta,
    /// Flat density on both theta_j and b_j.
    NoPoolBoth,
    /// Gaussian process over the covariate with a squared-exponential kernel.
    GpSe,
    /// Gaussian process with a periodic kernel.
    GpPeriodic,
    /// Effect mean linear in the covariate: theta_j ~ N(a + b x_j, sigma).
    LinearTrend,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::NormalDefault,
        Variant::Correlated,
        Variant::Binomial,
        Variant::DiffMeta,
        Variant::NoPoolTheta,
        Variant::NoPoolBoth,
        Variant::GpSe,
        Variant::GpPeriodic,
        Variant::LinearTrend,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::NormalDefault => "normal-default",
            Variant::Correlated => "correlated",
            Variant::Binomial => "binomial",
            Variant::DiffMeta => "diff-meta",
            Variant::NoPoolTheta => "no-pool-theta",
            Variant::NoPoolBoth => "no-pool-both",
            Variant::GpSe => "gp-se",
            Variant::GpPeriodic => "gp-periodic",
            Variant::LinearTrend => "linear-trend",
        }
    }

    pub(crate) fn kernel_kind(&self) -> Option<KernelKind> {
        match self {
            Variant::GpSe => Some(KernelKind::SquaredExponential),
            Variant::GpPeriodic => Some(KernelKind::Periodic),
            _ => None,
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .iter()
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::invalid("variant", format!("unknown variant `{s}`")))
    }
}

/// Hyperprior choice. `Uniform` is the improper flat density on the
/// constrained scale; `Weak` adds normal(0,1) on locations and
/// half-normal(0,1) on scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    Uniform,
    Weak,
}

impl PriorKind {
    /// Weak priors below 15 studies, where the improper flat priors leave the
    /// scales poorly identified; uniform otherwise.
    pub fn auto_for(n_studies: usize) -> PriorKind {
        if n_studies < 15 {
            PriorKind::Weak
        } else {
            PriorKind::Uniform
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PriorKind::Uniform => "uniform",
            PriorKind::Weak => "weak",
        }
    }
}

impl std::str::FromStr for PriorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(PriorKind::Uniform),
            "weak" => Ok(PriorKind::Weak),
            _ => Err(Error::invalid("prior", format!("unknown prior `{s}`"))),
        }
    }
}

/// Hyperprior settings for the GP kernel parameters. These are defaults, not
/// published values: the kernel priors should come from domain expertise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpConfig {
    /// half-normal(0, alpha_scale) prior on the amplitude.
    pub alpha_scale: f64,
    /// log-normal(ell_log_mean, ell_log_sd) prior on the length-scale.
    pub ell_log_mean: f64,
    pub ell_log_sd: f64,
    /// log-normal(period_log_mean, period_log_sd) prior on the period.
    pub period_log_mean: f64,
    pub period_log_sd: f64,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            alpha_scale: 0.2,
            ell_log_mean: 50.0f64.ln(),
            ell_log_sd: 1.0,
            period_log_mean: 30.0f64.ln(),
            period_log_sd: 1.0,
        }
    }
}

/// Population-level parameters. Fields are present only when the chosen
/// variant uses them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_b: Option<f64>,
    /// Correlation between effect and bias (correlated variant).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// GP amplitude.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// GP length-scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    /// GP period (periodic kernel).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    /// Linear-trend intercept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trend_a: Option<f64>,
    /// Linear-trend slope.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trend_b: Option<f64>,
}

impl HyperParams {
    pub fn normal(mu_theta: f64, sigma_theta: f64, mu_b: f64, sigma_b: f64) -> Self {
        HyperParams {
            mu_theta: Some(mu_theta),
            sigma_theta: Some(sigma_theta),
            mu_b: Some(mu_b),
            sigma_b: Some(sigma_b),
            ..Default::default()
        }
    }
}

/// Per-study latent effects and biases, in both raw (standard-normal scale)
/// and constructed form.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub theta: Vec<f64>,
    pub b: Vec<f64>,
    pub raw_theta: Vec<f64>,
    pub raw_b: Vec<f64>,
}

/// Which model to fit: variant, hyperprior, kernel settings, and optionally a
/// full set of fixed hyperparameters (the latents are then the only free
/// coordinates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub prior: PriorKind,
    #[serde(default)]
    pub gp: GpConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed: Option<HyperParams>,
}

impl ModelSpec {
    pub fn new(variant: Variant, prior: PriorKind) -> Self {
        ModelSpec {
            variant,
            prior,
            gp: GpConfig::default(),
            fixed: None,
        }
    }

    pub fn with_fixed(mut self, fixed: HyperParams) -> Self {
        self.fixed = Some(fixed);
        self
    }
}

/// Unconstrained hyperparameter slots, in canonical order per variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum HyperCoord {
    MuTheta,
    LogSigmaTheta,
    MuB,
    LogSigmaB,
    AtanhRho,
    LogAlpha,
    LogEll,
    LogPeriod,
    TrendA,
    TrendB,
}

impl HyperCoord {
    fn unconstrained_name(&self) -> &'static str {
        match self {
            HyperCoord::MuTheta => "mu_theta",
            HyperCoord::LogSigmaTheta => "log_sigma_theta",
            HyperCoord::MuB => "mu_b",
            HyperCoord::LogSigmaB => "log_sigma_b",
            HyperCoord::AtanhRho => "atanh_rho",
            HyperCoord::LogAlpha => "log_alpha",
            HyperCoord::LogEll => "log_ell",
            HyperCoord::LogPeriod => "log_period",
            HyperCoord::TrendA => "trend_a",
            HyperCoord::TrendB => "trend_b",
        }
    }

    fn constrained_name(&self) -> &'static str {
        match self {
            HyperCoord::MuTheta => "mu_theta",
            HyperCoord::LogSigmaTheta => "sigma_theta",
            HyperCoord::MuB => "mu_b",
            HyperCoord::LogSigmaB => "sigma_b",
            HyperCoord::AtanhRho => "rho",
            HyperCoord::LogAlpha => "alpha",
            HyperCoord::LogEll => "ell",
            HyperCoord::LogPeriod => "period",
            HyperCoord::TrendA => "trend_a",
            HyperCoord::TrendB => "trend_b",
        }
    }

    pub(crate) fn constrain(&self, u: f64) -> f64 {
        match self {
            HyperCoord::LogSigmaTheta
            | HyperCoord::LogSigmaB
            | HyperCoord::LogAlpha
            | HyperCoord::LogEll
            | HyperCoord::LogPeriod => u.exp(),
            HyperCoord::AtanhRho => u.tanh(),
            _ => u,
        }
    }

    pub(crate) fn unconstrain(&self, v: f64) -> f64 {
        match self {
            HyperCoord::LogSigmaTheta
            | HyperCoord::LogSigmaB
            | HyperCoord::LogAlpha
            | HyperCoord::LogEll
            | HyperCoord::LogPeriod => v.ln(),
            HyperCoord::AtanhRho => v.atanh(),
            _ => v,
        }
    }
}

fn hyper_coords(variant: Variant) -> Vec<HyperCoord> {
    use HyperCoord::*;
    match variant {
        Variant::NormalDefault | Variant::Binomial => {
            vec![MuTheta, LogSigmaTheta, MuB, LogSigmaB]
        }
        Variant::Correlated => vec![MuTheta, LogSigmaTheta, MuB, LogSigmaB, AtanhRho],
        Variant::DiffMeta => vec![MuTheta, LogSigmaTheta],
        Variant::NoPoolTheta => vec![MuB, LogSigmaB],
        Variant::NoPoolBoth => vec![],
        Variant::GpSe => vec![MuTheta, MuB, LogSigmaB, LogAlpha, LogEll],
        Variant::GpPeriodic => vec![MuTheta, MuB, LogSigmaB, LogAlpha, LogEll, LogPeriod],
        Variant::LinearTrend => vec![TrendA, TrendB, LogSigmaTheta, MuB, LogSigmaB],
    }
}

/// Whether the variant's per-study latents are raw standard-normal
/// coordinates or sampled directly (flat prior).
fn theta_is_raw(variant: Variant) -> bool {
    !matches!(variant, Variant::NoPoolTheta | Variant::NoPoolBoth)
}

fn b_is_raw(variant: Variant) -> bool {
    !matches!(variant, Variant::NoPoolBoth)
}

pub(crate) fn has_b(variant: Variant) -> bool {
    !matches!(variant, Variant::DiffMeta)
}

/// Data prepared for repeated density evaluation.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub ids: Vec<String>,
    pub y1: Vec<f64>,
    pub s1: Vec<f64>,
    pub y0: Vec<f64>,
    pub s0: Vec<f64>,
    pub w1: Vec<f64>,
    pub w0: Vec<f64>,
    /// y1 - y0 and its variance, for the difference meta-analysis.
    pub ydiff: Vec<f64>,
    pub sdiff: Vec<f64>,
    pub x: Option<Vec<f64>>,
    /// Count data (binomial variant).
    pub counts: Option<CountData>,
}

#[derive(Debug, Clone)]
pub(crate) struct CountData {
    pub n1: Vec<f64>,
    pub total1: Vec<f64>,
    pub n0: Vec<f64>,
    pub total0: Vec<f64>,
    /// Sum of the log binomial coefficients (constant in the parameters).
    pub ln_choose: f64,
}

fn ln_choose(total: f64, n: f64) -> f64 {
    libm::lgamma(total + 1.0) - libm::lgamma(n + 1.0) - libm::lgamma(total - n + 1.0)
}

/// A model variant bound to a dataset, ready for density and gradient
/// evaluation. Pure function of its inputs; safe to share across threads.
#[derive(Debug, Clone)]
pub struct Model {
    pub(crate) spec: ModelSpec,
    pub(crate) n: usize,
    pub(crate) data: Prepared,
    pub(crate) hypers: Vec<HyperCoord>,
    pub(crate) latent_dim: usize,
    pub(crate) dim: usize,
    unconstrained_names: Vec<String>,
    constrained_names: Vec<String>,
    /// Cholesky of the correlation matrix, precomputed when the GP kernel
    /// parameters are fixed.
    pub(crate) fixed_chol: Option<SquareMatrix>,
}

impl Model {
    pub fn new(spec: ModelSpec, dataset: &Dataset) -> Result<Model> {
        let n = dataset.len();
        let data = prepare(spec.variant, dataset)?;

        let hypers = if spec.fixed.is_some() {
            Vec::new()
        } else {
            hyper_coords(spec.variant)
        };
        if let Some(fixed) = &spec.fixed {
            validate_fixed(spec.variant, fixed)?;
        }

        let latent_dim = if has_b(spec.variant) { 2 * n } else { n };
        let dim = latent_dim + hypers.len();

        let mut unconstrained_names = Vec::with_capacity(dim);
        let theta_prefix = if theta_is_raw(spec.variant) {
            "theta_raw"
        } else {
            "theta"
        };
        for k in 1..=n {
            unconstrained_names.push(format!("{theta_prefix}[{k}]"));
        }
        if has_b(spec.variant) {
            let b_prefix = if b_is_raw(spec.variant) { "b_raw" } else { "b" };
            for k in 1..=n {
                unconstrained_names.push(format!("{b_prefix}[{k}]"));
            }
        }
        for h in &hypers {
            unconstrained_names.push(h.unconstrained_name().to_string());
        }

        let mut constrained_names = Vec::new();
        for k in 1..=n {
            constrained_names.push(format!("theta[{k}]"));
        }
        if has_b(spec.variant) {
            for k in 1..=n {
                constrained_names.push(format!("b[{k}]"));
            }
        }
        for h in &hypers {
            constrained_names.push(h.constrained_name().to_string());
        }

        let fixed_chol = match (&spec.fixed, spec.variant.kernel_kind()) {
            (Some(fixed), Some(kind)) => {
                let x = data.x.as_ref().expect("validated above");
                let ell = fixed.ell.expect("validated");
                let period = fixed.period.unwrap_or(1.0);
                Some(kernel::cholesky(&kernel::corr_matrix(
                    kind, x, ell, period,
                ))?)
            }
            _ => None,
        };

        Ok(Model {
            spec,
            n,
            data,
            hypers,
            latent_dim,
            dim,
            unconstrained_names,
            constrained_names,
            fixed_chol,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn n_studies(&self) -> usize {
        self.n
    }

    pub fn study_ids(&self) -> &[String] {
        &self.data.ids
    }

    /// Number of unconstrained coordinates.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinates `0..latent_dim()` are per-study latents; the rest are
    /// hyperparameters.
    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn unconstrained_names(&self) -> &[String] {
        &self.unconstrained_names
    }

    pub fn constrained_names(&self) -> &[String] {
        &self.constrained_names
    }

    /// Unnormalized log posterior density on the unconstrained scale,
    /// including all change-of-variable terms.
    pub fn log_posterior(&self, p: &[f64]) -> Result<f64> {
        self.check_input(p)?;
        Ok(self.eval(p, None))
    }

    /// Analytic gradient of [`Model::log_posterior`] for every coordinate.
    pub fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_input(p)?;
        let mut g = vec![0.0; self.dim];
        self.eval(p, Some(&mut g));
        Ok(g)
    }

    fn check_input(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::Incompatible(format!(
                "parameter vector has length {}, model dimension is {}",
                p.len(),
                self.dim
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("params", "non-finite parameter value"));
        }
        if let Some(kind) = self.spec.variant.kernel_kind() {
            if self.spec.fixed.is_none() {
                // Surface a positive-definiteness failure as a typed error.
                let (_, _, ell, period) = self.gp_hypers(p);
                let x = self.data.x.as_ref().unwrap();
                kernel::cholesky(&kernel::corr_matrix(kind, x, ell, period))?;
            }
        }
        Ok(())
    }

    fn gp_hypers(&self, p: &[f64]) -> (f64, f64, f64, f64) {
        let h = &p[self.latent_dim..];
        // layout: mu_theta, mu_b, log_sigma_b, log_alpha, log_ell[, log_period]
        let alpha = h[3].exp();
        let ell = h[4].exp();
        let period = if h.len() > 5 { h[5].exp() } else { 1.0 };
        (h[0], alpha, ell, period)
    }

    /// Map an unconstrained vector to the constrained reporting parameters
    /// (per-study theta and b, then the constrained hyperparameters).
    pub fn constrain(&self, p: &[f64], out: &mut [f64]) {
        let (hp, latent) = self.unpack(p);
        let mut k = 0;
        for v in &latent.theta {
            out[k] = *v;
            k += 1;
        }
        if has_b(self.spec.variant) {
            for v in &latent.b {
                out[k] = *v;
                k += 1;
            }
        }
        for h in &self.hypers {
            out[k] = match h {
                HyperCoord::MuTheta => hp.mu_theta.unwrap(),
                HyperCoord::LogSigmaTheta => hp.sigma_theta.unwrap(),
                HyperCoord::MuB => hp.mu_b.unwrap(),
                HyperCoord::LogSigmaB => hp.sigma_b.unwrap(),
                HyperCoord::AtanhRho => hp.rho.unwrap(),
                HyperCoord::LogAlpha => hp.alpha.unwrap(),
                HyperCoord::LogEll => hp.ell.unwrap(),
                HyperCoord::LogPeriod => hp.period.unwrap(),
                HyperCoord::TrendA => hp.trend_a.unwrap(),
                HyperCoord::TrendB => hp.trend_b.unwrap(),
            };
            k += 1;
        }
    }

    pub fn n_constrained(&self) -> usize {
        self.constrained_names.len()
    }

    /// Split an unconstrained vector into hyperparameters (constrained scale)
    /// and latent state (both raw and reconstructed).
    pub fn unpack(&self, p: &[f64]) -> (HyperParams, LatentState) {
        let hp = self.hyper_params_at(p);
        let latent = posterior::reconstruct_latents(self, p, &hp);
        (hp, latent)
    }

    /// Inverse of [`Model::unpack`]: flatten hyperparameters and raw latents
    /// back into an unconstrained vector.
    pub fn pack(&self, hp: &HyperParams, latent: &LatentState) -> Result<Vec<f64>> {
        if latent.raw_theta.len() != self.n
            || (has_b(self.spec.variant) && latent.raw_b.len() != self.n)
        {
            return Err(Error::Incompatible(
                "latent state length does not match the dataset".into(),
            ));
        }
        let mut p = Vec::with_capacity(self.dim);
        p.extend_from_slice(&latent.raw_theta);
        if has_b(self.spec.variant) {
            p.extend_from_slice(&latent.raw_b);
        }
        for h in &self.hypers {
            let v = match h {
                HyperCoord::MuTheta => hp.mu_theta,
                HyperCoord::LogSigmaTheta => hp.sigma_theta,
                HyperCoord::MuB => hp.mu_b,
                HyperCoord::LogSigmaB => hp.sigma_b,
                HyperCoord::AtanhRho => hp.rho,
                HyperCoord::LogAlpha => hp.alpha,
                HyperCoord::LogEll => hp.ell,
                HyperCoord::LogPeriod => hp.period,
                HyperCoord::TrendA => hp.trend_a,
                HyperCoord::TrendB => hp.trend_b,
            }
            .ok_or_else(|| {
                Error::invalid("hyperparams", format!("missing {}", h.constrained_name()))
            })?;
            p.push(h.unconstrain(v));
        }
        Ok(p)
    }

    /// Constrained-scale hyperparameters at `p` (from the fixed set when the
    /// model was built with fixed hyperparameters).
    pub fn hyper_params_at(&self, p: &[f64]) -> HyperParams {
        if let Some(fixed) = &self.spec.fixed {
            return fixed.clone();
        }
        let mut hp = HyperParams::default();
        for (k, h) in self.hypers.iter().enumerate() {
            let v = h.constrain(p[self.latent_dim + k]);
            match h {
                HyperCoord::MuTheta => hp.mu_theta = Some(v),
                HyperCoord::LogSigmaTheta => hp.sigma_theta = Some(v),
                HyperCoord::MuB => hp.mu_b = Some(v),
                HyperCoord::LogSigmaB => hp.sigma_b = Some(v),
                HyperCoord::AtanhRho => hp.rho = Some(v),
                HyperCoord::LogAlpha => hp.alpha = Some(v),
                HyperCoord::LogEll => hp.ell = Some(v),
                HyperCoord::LogPeriod => hp.period = Some(v),
                HyperCoord::TrendA => hp.trend_a = Some(v),
                HyperCoord::TrendB => hp.trend_b = Some(v),
            }
        }
        hp
    }
}

fn prepare(variant: Variant, dataset: &Dataset) -> Result<Prepared> {
    if variant == Variant::Binomial {
        let records = dataset.count_records().map_err(|_| {
            Error::Incompatible("the binomial variant requires count records".into())
        })?;
        let n = records.len();
        let counts = CountData {
            n1: records.iter().map(|r| r.n1 as f64).collect(),
            total1: records.iter().map(|r| r.total1 as f64).collect(),
            n0: records.iter().map(|r| r.n0 as f64).collect(),
            total0: records.iter().map(|r| r.total0 as f64).collect(),
            ln_choose: records
                .iter()
                .map(|r| {
                    ln_choose(r.total1 as f64, r.n1 as f64)
                        + ln_choose(r.total0 as f64, r.n0 as f64)
                })
                .sum(),
        };
        return Ok(Prepared {
            ids: records.iter().map(|r| r.id.clone()).collect(),
            y1: vec![0.0; n],
            s1: vec![1.0; n],
            y0: vec![0.0; n],
            s0: vec![1.0; n],
            w1: vec![0.0; n],
            w0: vec![0.0; n],
            ydiff: vec![0.0; n],
            sdiff: vec![1.0; n],
            x: None,
            counts: Some(counts),
        });
    }

    let records = dataset.summary_records().map_err(|_| {
        Error::Incompatible(format!(
            "the {} variant requires summary records",
            variant.name()
        ))
    })?;
    let x = dataset.covariates();
    if matches!(
        variant,
        Variant::GpSe | Variant::GpPeriodic | Variant::LinearTrend
    ) && x.is_none()
    {
        return Err(Error::Incompatible(format!(
            "the {} variant requires a covariate x on every record",
            variant.name()
        )));
    }
    Ok(Prepared {
        ids: records.iter().map(|r| r.id.clone()).collect(),
        y1: records.iter().map(|r| r.y1).collect(),
        s1: records.iter().map(|r| r.s1).collect(),
        y0: records.iter().map(|r| r.y0).collect(),
        s0: records.iter().map(|r| r.s0).collect(),
        w1: records.iter().map(|r| 1.0 / (r.s1 * r.s1)).collect(),
        w0: records.iter().map(|r| 1.0 / (r.s0 * r.s0)).collect(),
        ydiff: records.iter().map(|r| r.y1 - r.y0).collect(),
        sdiff: records
            .iter()
            .map(|r| (r.s1 * r.s1 + r.s0 * r.s0).sqrt())
            .collect(),
        x,
        counts: None,
    })
}

fn validate_fixed(variant: Variant, fixed: &HyperParams) -> Result<()> {
    let need = |ok: bool, name: &'static str| -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(
                "fixed",
                format!("variant {} requires fixed {name}", variant.name()),
            ))
        }
    };
    for (name, v, lo_ok) in [
        ("sigma_theta", fixed.sigma_theta, 0.0),
        ("sigma_b", fixed.sigma_b, 0.0),
        ("alpha", fixed.alpha, f64::MIN_POSITIVE),
        ("ell", fixed.ell, f64::MIN_POSITIVE),
        ("period", fixed.period, f64::MIN_POSITIVE),
    ] {
        if let Some(v) = v {
            if !v.is_finite() || v < lo_ok {
                return Err(Error::invalid(
                    "fixed",
                    format!("{name} must be finite and nonnegative (positive for kernel parameters), got {v}"),
                ));
            }
        }
    }
    if let Some(rho) = fixed.rho {
        if !rho.is_finite() || rho <= -1.0 || rho >= 1.0 {
            return Err(Error::invalid(
                "fixed",
                "rho must lie strictly inside (-1, 1)",
            ));
        }
    }
    for (name, v) in [
        ("mu_theta", fixed.mu_theta),
        ("mu_b", fixed.mu_b),
        ("trend_a", fixed.trend_a),
        ("trend_b", fixed.trend_b),
    ] {
        if let Some(v) = v {
            if !v.is_finite() {
                return Err(Error::invalid("fixed", format!("{name} must be finite")));
            }
        }
    }
    match variant {
        Variant::NormalDefault | Variant::Binomial => {
            need(fixed.mu_theta.is_some(), "mu_theta")?;
            need(fixed.sigma_theta.is_some(), "sigma_theta")?;
            need(fixed.mu_b.is_some(), "mu_b")?;
            need(fixed.sigma_b.is_some(), "sigma_b")?;
        }
        Variant::Correlated => {
            need(fixed.mu_theta.is_some(), "mu_theta")?;
            need(fixed.sigma_theta.is_some(), "sigma_theta")?;
            need(fixed.mu_b.is_some(), "mu_b")?;
            need(fixed.sigma_b.is_some(), "sigma_b")?;
            need(fixed.rho.is_some(), "rho")?;
        }
        Variant::DiffMeta => {
            need(fixed.mu_theta.is_some(), "mu_theta")?;
            need(fixed.sigma_theta.is_some(), "sigma_theta")?;
        }
        Variant::NoPoolTheta => {
            need(fixed.mu_b.is_some(), "mu_b")?;
            need(fixed.sigma_b.is_some(), "sigma_b")?;
        }
        Variant::NoPoolBoth => {}
        Variant::GpSe => {
            need(fixed.mu_theta.is_some(), "mu_theta")?;
            need(fixed.mu_b.is_some(), "mu_b")?;
            need(fixed.sigma_b.is_some(), "sigma_b")?;
            need(fixed.alpha.is_some(), "alpha")?;
            need(fixed.ell.is_some(), "ell")?;
        }
        Variant::GpPeriodic => {
            need(fixed.mu_theta.is_some(), "mu_theta")?;
            need(fixed.mu_b.is_some(), "mu_b")?;
            need(fixed.sigma_b.is_some(), "sigma_b")?;
            need(fixed.alpha.is_some(), "alpha")?;
            need(fixed.ell.is_some(), "ell")?;
            need(fixed.period.is_some(), "period")?;
        }
        Variant::LinearTrend => {
            need(fixed.trend_a.is_some(), "trend_a")?;
            need(fixed.trend_b.is_some(), "trend_b")?;
            need(fixed.sigma_theta.is_some(), "sigma_theta")?;
            need(fixed.mu_b.is_some(), "mu_b")?;
            need(fixed.sigma_b.is_some(), "sigma_b")?;
        }
    }
    Ok(())
}
