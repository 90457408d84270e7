//! Multi-chain Hamiltonian Monte Carlo: configuration, deterministic chain
//! execution, draw storage, diagnostics, and posterior summaries.

pub mod diagnostics;
mod hmc;
pub mod summary;

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{Model, ModelSpec};

pub use diagnostics::{diagnostics, ParamDiag};
pub use summary::{summarize, FitSummary, ParamSummary, Transform};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub chains: usize,
    pub warmup: usize,
    pub draws: usize,
    pub target_accept: f64,
    pub max_leapfrog: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 4,
            warmup: 1000,
            draws: 1000,
            target_accept: 0.8,
            max_leapfrog: 1024,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    /// Reduced settings for harness-scale refits (2 chains, 500 + 500).
    pub fn reduced(seed: u64) -> Self {
        SamplerConfig {
            chains: 2,
            warmup: 500,
            draws: 500,
            seed,
            ..Default::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.warmup == 0 || self.draws == 0 || self.max_leapfrog == 0 {
            return Err(Error::invalid(
                "sampler",
                "chains, warmup, draws, and max_leapfrog must be positive",
            ));
        }
        if !(0.0 < self.target_accept && self.target_accept < 1.0) {
            return Err(Error::invalid(
                "target_accept",
                "must be strictly inside (0, 1)",
            ));
        }
        Ok(())
    }
}

/// Posterior draws on the constrained scale with chain structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Draws {
    pub param_names: Vec<String>,
    pub n_chains: usize,
    /// Retained draws per chain.
    pub n_draws: usize,
    /// Row-major `[chain][draw][param]`.
    pub(crate) values: Vec<f64>,
    /// Divergence flag per `[chain][draw]`.
    pub divergent: Vec<bool>,
}

impl Draws {
    /// Assemble draws from raw storage (row-major `[chain][draw][param]`).
    pub fn from_values(
        param_names: Vec<String>,
        n_chains: usize,
        n_draws: usize,
        values: Vec<f64>,
        divergent: Vec<bool>,
    ) -> Result<Draws> {
        if values.len() != n_chains * n_draws * param_names.len()
            || divergent.len() != n_chains * n_draws
        {
            return Err(Error::Incompatible(
                "draw storage does not match the declared shape".into(),
            ));
        }
        Ok(Draws {
            param_names,
            n_chains,
            n_draws,
            values,
            divergent,
        })
    }

    #[inline]
    pub fn value(&self, chain: usize, draw: usize, param: usize) -> f64 {
        self.values[(chain * self.n_draws + draw) * self.param_names.len() + param]
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|n| n == name)
    }

    /// All draws of one parameter, chains concatenated in index order.
    pub fn param_column(&self, param: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_chains * self.n_draws);
        for c in 0..self.n_chains {
            for d in 0..self.n_draws {
                out.push(self.value(c, d, param));
            }
        }
        out
    }

    pub fn chain_column(&self, chain: usize, param: usize) -> Vec<f64> {
        (0..self.n_draws)
            .map(|d| self.value(chain, d, param))
            .collect()
    }

    pub fn n_total(&self) -> usize {
        self.n_chains * self.n_draws
    }

    pub fn divergence_count(&self) -> usize {
        self.divergent.iter().filter(|&&d| d).count()
    }

    /// CSV export: `chain,iteration,divergent,<param...>` with one row per
    /// retained draw. Floats use the shortest round-trip representation.
    pub fn to_csv(&self, w: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec![
            "chain".to_string(),
            "iteration".to_string(),
            "divergent".to_string(),
        ];
        header.extend(self.param_names.iter().cloned());
        wtr.write_record(&header)?;
        let mut row = Vec::with_capacity(header.len());
        for c in 0..self.n_chains {
            for d in 0..self.n_draws {
                row.clear();
                row.push(c.to_string());
                row.push(d.to_string());
                row.push((self.divergent[c * self.n_draws + d] as u8).to_string());
                for k in 0..self.param_names.len() {
                    row.push(self.value(c, d, k).to_string());
                }
                wtr.write_record(&row)?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn from_csv(r: impl Read) -> Result<Draws> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.len() < 4
            || &headers[0] != "chain"
            || &headers[1] != "iteration"
            || &headers[2] != "divergent"
        {
            return Err(Error::Parse {
                row: 1,
                msg: "draws CSV must start with chain,iteration,divergent".into(),
            });
        }
        let param_names: Vec<String> = headers.iter().skip(3).map(|s| s.to_string()).collect();
        let mut values = Vec::new();
        let mut divergent = Vec::new();
        let mut max_chain = 0usize;
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::Parse {
                    row: i + 2,
                    msg: format!("cannot parse `{s}`"),
                })
            };
            let chain: usize = rec[0].parse().map_err(|_| Error::Parse {
                row: i + 2,
                msg: "bad chain index".into(),
            })?;
            max_chain = max_chain.max(chain);
            divergent.push(&rec[2] == "1");
            for k in 0..param_names.len() {
                values.push(parse(&rec[3 + k])?);
            }
        }
        let n_chains = max_chain + 1;
        let total = divergent.len();
        if n_chains == 0 || total % n_chains != 0 {
            return Err(Error::Parse {
                row: 1,
                msg: "draws CSV has ragged chains".into(),
            });
        }
        Ok(Draws {
            param_names,
            n_chains,
            n_draws: total / n_chains,
            values,
            divergent,
        })
    }

    /// Joint draws of the per-study effects `theta[1..=J]`, one row per draw.
    pub fn theta_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let mut indices = Vec::new();
        for j in 1.. {
            match self.param_index(&format!("theta[{j}]")) {
                Some(k) => indices.push(k),
                None => break,
            }
        }
        if indices.is_empty() {
            return Err(Error::Incompatible(
                "draws contain no theta[j] parameters".into(),
            ));
        }
        let mut rows = Vec::with_capacity(self.n_total());
        for c in 0..self.n_chains {
            for d in 0..self.n_draws {
                rows.push(indices.iter().map(|&k| self.value(c, d, k)).collect());
            }
        }
        Ok(rows)
    }
}

/// Fit a model with multi-chain HMC. Chains run concurrently; each derives
/// its RNG stream from (seed, chain index) and results are merged by chain
/// index, so the outcome is independent of scheduling. Deterministic given
/// the seed.
pub fn fit(
    spec: &ModelSpec,
    dataset: &Dataset,
    cfg: &SamplerConfig,
) -> Result<(Draws, FitSummary)> {
    cfg.validate()?;
    let model = Model::new(spec.clone(), dataset)?;
    fit_model(&model, cfg)
}

pub(crate) fn fit_model(model: &Model, cfg: &SamplerConfig) -> Result<(Draws, FitSummary)> {
    cfg.validate()?;
    let outputs: Vec<Result<hmc::ChainOutput>> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| hmc::run_chain(model, cfg, c))
        .collect();

    let n_params = model.n_constrained();
    let mut values = Vec::with_capacity(cfg.chains * cfg.draws * n_params);
    let mut divergent = Vec::with_capacity(cfg.chains * cfg.draws);
    for out in outputs {
        let out = out?;
        values.extend_from_slice(&out.draws);
        divergent.extend_from_slice(&out.divergent);
    }
    let draws = Draws {
        param_names: model.constrained_names().to_vec(),
        n_chains: cfg.chains,
        n_draws: cfg.draws,
        values,
        divergent,
    };
    let summary = summarize(&draws, &[])?;
    Ok((draws, summary))
}
