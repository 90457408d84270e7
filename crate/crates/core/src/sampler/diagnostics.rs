//! Convergence diagnostics: split-chain rank-normalized R-hat and bulk
//! effective sample size, following Vehtari et al. (2021).

use crate::math::{inv_normal_cdf, mean};

use super::Draws;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDiag {
    pub name: String,
    pub rhat: f64,
    pub ess_bulk: f64,
}

/// Per-parameter split R-hat and bulk ESS. Requires at least 4 draws per
/// chain; a single chain is split into halves. Constant chains are reported
/// with the R-hat = +inf sentinel and zero ESS.
pub fn diagnostics(draws: &Draws) -> crate::Result<Vec<ParamDiag>> {
    if draws.n_draws < 4 {
        return Err(crate::Error::Sampler(
            "diagnostics need at least 4 draws per chain".into(),
        ));
    }
    Ok((0..draws.param_names.len())
        .map(|k| {
            let chains: Vec<Vec<f64>> = (0..draws.n_chains)
                .map(|c| draws.chain_column(c, k))
                .collect();
            let (rhat, ess_bulk) = rhat_ess(&chains);
            ParamDiag {
                name: draws.param_names[k].clone(),
                rhat,
                ess_bulk,
            }
        })
        .collect())
}

/// Split R-hat and bulk ESS from per-chain draws of one parameter.
pub fn rhat_ess(chains: &[Vec<f64>]) -> (f64, f64) {
    let total: usize = chains.iter().map(|c| c.len()).sum();
    let grand = {
        let s: f64 = chains.iter().flatten().sum();
        s / total as f64
    };
    let constant = chains
        .iter()
        .flatten()
        .all(|v| (v - grand).abs() <= 1e-300 + 1e-15 * grand.abs());
    if constant {
        return (f64::INFINITY, 0.0);
    }

    let split = split_chains(chains);
    let z = rank_normalize(&split);
    (rhat_of(&z), ess_of(&z))
}

fn split_chains(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let half = chains.iter().map(|c| c.len()).min().unwrap() / 2;
    let mut out = Vec::with_capacity(chains.len() * 2);
    for c in chains {
        out.push(c[..half].to_vec());
        out.push(c[c.len() - half..].to_vec());
    }
    out
}

/// Pooled average ranks (ties averaged) mapped through the normal quantile
/// function: z = Phi^-1((rank - 3/8) / (S + 1/4)).
fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = chains.len();
    let n = chains[0].len();
    let total = m * n;
    let mut indexed: Vec<(f64, usize)> = Vec::with_capacity(total);
    for (c, chain) in chains.iter().enumerate() {
        for (i, &v) in chain.iter().enumerate() {
            indexed.push((v, c * n + i));
        }
    }
    indexed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut ranks = vec![0.0; total];
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j < total && indexed[j].0 == indexed[i].0 {
            j += 1;
        }
        let avg = (i + j - 1) as f64 / 2.0 + 1.0;
        for k in i..j {
            ranks[indexed[k].1] = avg;
        }
        i = j;
    }

    let denom = total as f64 + 0.25;
    (0..m)
        .map(|c| {
            (0..n)
                .map(|i| inv_normal_cdf((ranks[c * n + i] - 0.375) / denom))
                .collect()
        })
        .collect()
}

fn rhat_of(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len() as f64;
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let grand = mean(&means);
    let b_over_n: f64 = means.iter().map(|x| (x - grand) * (x - grand)).sum::<f64>() / (m - 1.0);
    let w: f64 = chains
        .iter()
        .zip(&means)
        .map(|(c, &mu)| c.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    if w <= 0.0 {
        return f64::INFINITY;
    }
    let var_plus = (n - 1.0) / n * w + b_over_n;
    (var_plus / w).sqrt()
}

/// Bulk ESS via Geyer's initial monotone sequence on the combined
/// autocorrelation, evaluated lazily lag by lag.
fn ess_of(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains[0].len();
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let vars: Vec<f64> = chains
        .iter()
        .zip(&means)
        .map(|(c, &mu)| c.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n as f64 - 1.0))
        .collect();
    let mean_var = mean(&vars);
    if mean_var <= 0.0 {
        return 0.0;
    }
    let var_plus = mean_var * (n as f64 - 1.0) / n as f64
        + if m > 1 {
            let gm = mean(&means);
            means.iter().map(|x| (x - gm) * (x - gm)).sum::<f64>() / (m as f64 - 1.0)
        } else {
            0.0
        };

    let acov = |t: usize| -> f64 {
        let mut s = 0.0;
        for (c, chain) in chains.iter().enumerate() {
            let mu = means[c];
            for i in 0..n - t {
                s += (chain[i] - mu) * (chain[i + t] - mu);
            }
        }
        s / (m * n) as f64
    };

    let rho = |t: usize| 1.0 - (mean_var * (n as f64 - 1.0) / n as f64 - acov(t)) / var_plus;

    let mut tau = 1.0; // rho(0) contribution
    let mut prev_pair = f64::INFINITY;
    let mut t = 1;
    while t + 1 < n {
        let pair = rho(t) + rho(t + 1);
        if pair < 0.0 {
            break;
        }
        let pair = pair.min(prev_pair); // enforce monotone decrease
        tau += 2.0 * pair;
        prev_pair = pair;
        t += 2;
    }

    let total = (m * n) as f64;
    (total / tau).min(total)
}
