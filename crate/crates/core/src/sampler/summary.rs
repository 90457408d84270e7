//! Posterior summarization: moments, quantiles, convergence diagnostics, and
//! draw-wise transformed summaries.

use serde::{Deserialize, Serialize};

use crate::math::{inv_logit, mean, quantile_sorted, sample_sd};

use super::diagnostics::diagnostics;
use super::Draws;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    /// exp(x), e.g. log odds ratio to odds ratio.
    Exp,
    /// 1/(1+exp(-x)), e.g. log odds to probability.
    InvLogit,
}

impl Transform {
    fn apply(&self, x: f64) -> f64 {
        match self {
            Transform::Exp => x.exp(),
            Transform::InvLogit => inv_logit(x),
        }
    }

    fn label(&self, param: &str) -> String {
        match self {
            Transform::Exp => format!("exp({param})"),
            Transform::InvLogit => format!("inv_logit({param})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub transform: Transform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q2_5: f64,
    pub q50: f64,
    pub q97_5: f64,
    pub rhat: f64,
    pub ess_bulk: f64,
}

impl ParamSummary {
    /// Monte Carlo standard error of the posterior mean.
    pub fn mcse(&self) -> f64 {
        if self.ess_bulk > 0.0 {
            self.sd / self.ess_bulk.sqrt()
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub schema_version: u32,
    pub params: Vec<ParamSummary>,
    pub n_chains: usize,
    pub n_draws_per_chain: usize,
    pub divergences: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl FitSummary {
    pub fn param(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// Moments, quantiles, and diagnostics for every parameter, plus draw-wise
/// transformed summaries for the named parameters.
pub fn summarize(draws: &Draws, transforms: &[(String, Transform)]) -> crate::Result<FitSummary> {
    let diags = diagnostics(draws)?;
    let mut params = Vec::with_capacity(draws.param_names.len() + transforms.len());
    for (k, name) in draws.param_names.iter().enumerate() {
        let column = draws.param_column(k);
        params.push(summary_row(
            name.clone(),
            &column,
            diags[k].rhat,
            diags[k].ess_bulk,
        ));
    }
    for (name, tr) in transforms {
        let k = draws.param_index(name).ok_or_else(|| {
            crate::Error::Incompatible(format!("no parameter named `{name}` to transform"))
        })?;
        let column: Vec<f64> = draws.param_column(k).iter().map(|&x| tr.apply(x)).collect();
        let chains: Vec<Vec<f64>> = (0..draws.n_chains)
            .map(|c| {
                draws
                    .chain_column(c, k)
                    .iter()
                    .map(|&x| tr.apply(x))
                    .collect()
            })
            .collect();
        let (rhat, ess) = super::diagnostics::rhat_ess(&chains);
        params.push(summary_row(tr.label(name), &column, rhat, ess));
    }

    let divergences = draws.divergence_count();
    let total = draws.n_chains * draws.n_draws;
    let mut warnings = Vec::new();
    let mut worst_rhat: f64 = 0.0;
    let mut least_ess = f64::INFINITY;
    for p in &params {
        if p.rhat.is_finite() {
            worst_rhat = worst_rhat.max(p.rhat);
        } else {
            worst_rhat = f64::INFINITY;
        }
        least_ess = least_ess.min(p.ess_bulk);
    }
    if worst_rhat > 1.01 {
        warnings.push(format!("max R-hat {worst_rhat:.4} exceeds 1.01"));
    }
    let ess_floor = 100.0 * draws.n_chains as f64;
    if least_ess < ess_floor {
        warnings.push(format!(
            "min bulk ESS {least_ess:.0} is below {ess_floor:.0}"
        ));
    }
    if divergences as f64 > 0.001 * total as f64 {
        warnings.push(format!(
            "{divergences} divergent transitions out of {total} draws"
        ));
    }

    Ok(FitSummary {
        schema_version: 1,
        params,
        n_chains: draws.n_chains,
        n_draws_per_chain: draws.n_draws,
        divergences,
        converged: warnings.is_empty(),
        warnings,
    })
}

fn summary_row(name: String, column: &[f64], rhat: f64, ess_bulk: f64) -> ParamSummary {
    let mut sorted = column.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    ParamSummary {
        name,
        mean: mean(column),
        sd: sample_sd(column),
        q2_5: quantile_sorted(&sorted, 0.025),
        q50: quantile_sorted(&sorted, 0.5),
        q97_5: quantile_sorted(&sorted, 0.975),
        rhat,
        ess_bulk,
    }
}
