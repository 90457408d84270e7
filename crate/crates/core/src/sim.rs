//! Simulation harness: generate synthetic paired datasets over a grid of
//! bias scales, score each estimator with the four frequency metrics, and
//! aggregate over replicates.
//!
//! Replicates are independent work items executed concurrently; each derives
//! its RNG stream from (seed, grid index, replicate index) and the grid is
//! reduced in index order, so results do not depend on worker count or
//! scheduling.

use std::io::Write;
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, StudyRecord};
use crate::error::{Error, Result};
use crate::math::mean;
use crate::model::{ModelSpec, PriorKind, Variant};
use crate::sampler::{fit, SamplerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    ExposedOnly,
    Difference,
    Bayes,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::ExposedOnly => "exposed-only",
            EstimatorKind::Difference => "difference",
            EstimatorKind::Bayes => "bayes",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exposed-only" | "exposed" => Ok(EstimatorKind::ExposedOnly),
            "difference" => Ok(EstimatorKind::Difference),
            "bayes" => Ok(EstimatorKind::Bayes),
            _ => Err(Error::invalid(
                "estimator",
                format!("unknown estimator `{s}`"),
            )),
        }
    }
}

/// Where each replicate's true effect vector comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ThetaSource {
    /// A stored draws CSV; one joint posterior row is selected uniformly per
    /// replicate.
    PosteriorDrawsFile { path: PathBuf },
    /// In-memory joint draws, one row per draw, one column per base study.
    PosteriorDraws { rows: Vec<Vec<f64>> },
    /// A fixed vector, one entry per base study.
    Fixed { values: Vec<f64> },
    /// The observed active-arm estimates of the base dataset.
    RawObserved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Normal,
    /// Scaled t with per-arm degrees of freedom n - 1.
    TScaled,
}

/// Settings for the Bayes estimator's per-replicate refits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesConfig {
    /// None selects weak priors below 15 studies and uniform otherwise.
    pub prior: Option<PriorKind>,
    pub sampler: SamplerConfig,
}

impl Default for BayesConfig {
    fn default() -> Self {
        BayesConfig {
            prior: None,
            sampler: SamplerConfig::reduced(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub sigma_b_grid: Vec<f64>,
    pub replicates: usize,
    pub sigma_y: f64,
    pub mu_b: f64,
    /// Studies per replicate; None uses the full base dataset.
    pub size: Option<usize>,
    pub theta_source: ThetaSource,
    pub noise: NoiseKind,
    pub estimators: Vec<EstimatorKind>,
    pub bayes: BayesConfig,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(theta_source: ThetaSource) -> Self {
        SimConfig {
            sigma_b_grid: vec![0.0, 0.02, 0.04, 0.06, 0.08, 0.10],
            replicates: 200,
            sigma_y: 0.04,
            mu_b: 0.0,
            size: None,
            theta_source,
            noise: NoiseKind::Normal,
            estimators: vec![
                EstimatorKind::ExposedOnly,
                EstimatorKind::Difference,
                EstimatorKind::Bayes,
            ],
            bayes: BayesConfig::default(),
            seed: 0,
        }
    }
}

/// The four frequency metrics of one replicate. `type_s_rate` is NaN when no
/// estimate was significant; `rank_corr` is NaN for degenerate rankings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub prop_significant: f64,
    pub type_s_rate: f64,
    pub rmse: f64,
    pub rank_corr: f64,
}

/// Point estimates with their 95% bounds, the shared shape for classical and
/// Bayes estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalEstimates {
    pub estimate: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl IntervalEstimates {
    pub fn from_normal(estimate: Vec<f64>, se: &[f64]) -> Self {
        let lo = estimate.iter().zip(se).map(|(e, s)| e - 1.96 * s).collect();
        let hi = estimate.iter().zip(se).map(|(e, s)| e + 1.96 * s).collect();
        IntervalEstimates { estimate, lo, hi }
    }
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        xs[a]
            .partial_cmp(&xs[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j - 1) as f64 / 2.0 + 1.0;
        for k in i..j {
            ranks[order[k]] = avg;
        }
        i = j;
    }
    ranks
}

/// Spearman rank correlation (Pearson on average ranks); NaN when either
/// ranking is constant.
pub fn rank_correlation(a: &[f64], b: &[f64]) -> f64 {
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let (ma, mb) = (mean(&ra), mean(&rb));
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for i in 0..ra.len() {
        let dx = ra[i] - ma;
        let dy = rb[i] - mb;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}

/// Score interval estimates against the known truths: significance rate,
/// type S error rate among significant estimates, root mean squared error,
/// and rank correlation.
pub fn evaluate_metrics(estimates: &IntervalEstimates, truths: &[f64]) -> Metrics {
    let n = truths.len();
    assert_eq!(estimates.estimate.len(), n, "length mismatch");
    let mut significant = 0usize;
    let mut wrong_sign = 0usize;
    let mut sq = 0.0;
    for (j, &truth) in truths.iter().enumerate() {
        let sig = estimates.lo[j] > 0.0 || estimates.hi[j] < 0.0;
        if sig {
            significant += 1;
            if estimates.estimate[j] * truth < 0.0 {
                wrong_sign += 1;
            }
        }
        let e = estimates.estimate[j] - truth;
        sq += e * e;
    }
    Metrics {
        prop_significant: significant as f64 / n as f64,
        type_s_rate: if significant == 0 {
            f64::NAN
        } else {
            wrong_sign as f64 / significant as f64
        },
        rmse: (sq / n as f64).sqrt(),
        rank_corr: rank_correlation(&estimates.estimate, truths),
    }
}

/// Theta source resolved against a base dataset.
#[derive(Debug, Clone)]
pub enum ResolvedTheta {
    Matrix(Vec<Vec<f64>>),
    Fixed(Vec<f64>),
    RawObserved,
}

pub fn resolve_theta_source(source: &ThetaSource, base: &Dataset) -> Result<ResolvedTheta> {
    let j = base.len();
    let check_rows = |rows: &[Vec<f64>]| -> Result<()> {
        if rows.is_empty() {
            return Err(Error::invalid("theta_source", "no posterior draws"));
        }
        if rows.iter().any(|r| r.len() != j) {
            return Err(Error::invalid(
                "theta_source",
                format!("draw rows must have {j} entries matching the base dataset"),
            ));
        }
        Ok(())
    };
    match source {
        ThetaSource::PosteriorDrawsFile { path } => {
            let file = std::fs::File::open(path)?;
            let draws = crate::sampler::Draws::from_csv(file)?;
            let rows = draws.theta_matrix()?;
            check_rows(&rows)?;
            Ok(ResolvedTheta::Matrix(rows))
        }
        ThetaSource::PosteriorDraws { rows } => {
            check_rows(rows)?;
            Ok(ResolvedTheta::Matrix(rows.clone()))
        }
        ThetaSource::Fixed { values } => {
            if values.len() != j {
                return Err(Error::invalid(
                    "theta_source",
                    format!("fixed theta vector must have {j} entries"),
                ));
            }
            Ok(ResolvedTheta::Fixed(values.clone()))
        }
        ThetaSource::RawObserved => Ok(ResolvedTheta::RawObserved),
    }
}

fn replicate_rng(seed: u64, grid_idx: usize, rep_idx: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((grid_idx as u64 + 1) << 32) | rep_idx as u64);
    rng
}

/// One simulated dataset: selects M studies (uniformly without replacement
/// when M < J), draws biases b_j ~ normal(mu_b, sigma_b), picks the truth
/// vector from the configured source, and emits noisy paired measurements
/// with scale sigma_y.
pub fn simulate_replicate(
    cfg: &SimConfig,
    theta: &ResolvedTheta,
    base: &Dataset,
    sigma_b: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, Dataset)> {
    let records = base.summary_records()?;
    let j = records.len();
    let m = cfg.size.unwrap_or(j);

    let mut indices: Vec<usize> = if m < j {
        let mut picked = rand::seq::index::sample(rng, j, m).into_vec();
        picked.sort_unstable();
        picked
    } else {
        (0..j).collect()
    };
    if m > j {
        return Err(Error::invalid("size", "M exceeds the base dataset size"));
    }
    indices.truncate(m);

    let truths: Vec<f64> = match theta {
        ResolvedTheta::Matrix(rows) => {
            let row = &rows[rng.random_range(0..rows.len())];
            indices.iter().map(|&i| row[i]).collect()
        }
        ResolvedTheta::Fixed(values) => indices.iter().map(|&i| values[i]).collect(),
        ResolvedTheta::RawObserved => indices.iter().map(|&i| records[i].y1).collect(),
    };

    let mut sim_records = Vec::with_capacity(m);
    for (k, &i) in indices.iter().enumerate() {
        let r = &records[i];
        let z: f64 = StandardNormal.sample(rng);
        let b = cfg.mu_b + sigma_b * z;
        let mut noise = |n_arm: Option<u32>| -> Result<f64> {
            match cfg.noise {
                NoiseKind::Normal => Ok(StandardNormal.sample(rng)),
                NoiseKind::TScaled => {
                    let n = n_arm.ok_or_else(|| {
                        Error::invalid(
                            "noise",
                            format!("t noise requires sample sizes (study `{}`)", r.id),
                        )
                    })?;
                    Ok(StudentT::new((n - 1) as f64)
                        .map_err(|e| Error::Sampler(e.to_string()))?
                        .sample(rng))
                }
            }
        };
        let e0 = noise(r.n0)?;
        let e1 = noise(r.n1)?;
        sim_records.push(StudyRecord {
            id: r.id.clone(),
            x: r.x,
            y1: truths[k] + b + cfg.sigma_y * e1,
            s1: cfg.sigma_y,
            y0: b + cfg.sigma_y * e0,
            s0: cfg.sigma_y,
            n1: r.n1,
            n0: r.n0,
        });
    }
    Ok((truths, Dataset::summary(sim_records)?))
}

fn bayes_seed(seed: u64, grid_idx: usize, rep_idx: usize) -> u64 {
    // splitmix64 over a distinct composition of the indices
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(1 + grid_idx as u64))
        .wrapping_add(0x6A09_E667_F3BC_C909u64.wrapping_mul(1 + rep_idx as u64));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug)]
struct RepResult {
    grid_idx: usize,
    per_estimator: Vec<(EstimatorKind, Result<(Metrics, bool)>)>,
}

/// Aggregated cell of the metrics grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridCell {
    pub sigma_b: f64,
    pub estimator: EstimatorKind,
    pub prop_significant: f64,
    pub type_s_rate: f64,
    pub rmse: f64,
    pub rank_corr: f64,
    pub n_replicates: usize,
    /// Replicates that errored outright (excluded from the averages).
    pub n_failed: usize,
    /// Replicates whose Bayes fit was flagged non-converged (still included).
    pub n_nonconverged: usize,
    /// Replicates with at least one significant estimate (the type S
    /// denominator).
    pub n_type_s_defined: usize,
    /// Per-replicate metrics in replicate order (failed ones absent).
    #[serde(skip)]
    pub per_replicate: Vec<Option<Metrics>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsGrid {
    pub schema_version: u32,
    pub cells: Vec<GridCell>,
}

impl MetricsGrid {
    pub fn cell(&self, sigma_b: f64, estimator: EstimatorKind) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|c| c.sigma_b == sigma_b && c.estimator == estimator)
    }

    /// Tidy CSV: sigma_b, estimator, metric, value, n_replicates, n_failed.
    pub fn to_tidy_csv(&self, w: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "sigma_b",
            "estimator",
            "metric",
            "value",
            "n_replicates",
            "n_failed",
        ])?;
        for c in &self.cells {
            for (metric, value) in [
                ("prop_significant", c.prop_significant),
                ("type_s_rate", c.type_s_rate),
                ("rmse", c.rmse),
                ("rank_corr", c.rank_corr),
            ] {
                wtr.write_record([
                    c.sigma_b.to_string(),
                    c.estimator.name().to_string(),
                    metric.to_string(),
                    value.to_string(),
                    c.n_replicates.to_string(),
                    c.n_failed.to_string(),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

fn validate_config(cfg: &SimConfig, base: &Dataset) -> Result<()> {
    if cfg.sigma_b_grid.is_empty() {
        return Err(Error::invalid("sigma_b_grid", "grid must be nonempty"));
    }
    if cfg.sigma_b_grid.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::invalid(
            "sigma_b_grid",
            "entries must be finite and >= 0",
        ));
    }
    if cfg.replicates == 0 {
        return Err(Error::invalid("replicates", "must be positive"));
    }
    if cfg.sigma_y <= 0.0 || !cfg.sigma_y.is_finite() {
        return Err(Error::invalid("sigma_y", "must be positive and finite"));
    }
    if let Some(m) = cfg.size {
        if m == 0 || m > base.len() {
            return Err(Error::invalid(
                "size",
                format!("M must be in 1..={}", base.len()),
            ));
        }
    }
    if cfg.estimators.is_empty() {
        return Err(Error::invalid("estimators", "at least one estimator"));
    }
    Ok(())
}

/// Run the full grid: for each sigma_b, `replicates` simulated datasets, each
/// scored by every enabled estimator. Deterministic given the seed.
pub fn run_grid(cfg: &SimConfig, base: &Dataset) -> Result<MetricsGrid> {
    validate_config(cfg, base)?;
    let theta = resolve_theta_source(&cfg.theta_source, base)?;
    let m = cfg.size.unwrap_or(base.len());
    let bayes_prior = cfg.bayes.prior.unwrap_or_else(|| PriorKind::auto_for(m));

    let work: Vec<(usize, usize)> = (0..cfg.sigma_b_grid.len())
        .flat_map(|g| (0..cfg.replicates).map(move |r| (g, r)))
        .collect();

    let results: Vec<RepResult> = work
        .par_iter()
        .map(|&(g, rep)| {
            let sigma_b = cfg.sigma_b_grid[g];
            let mut rng = replicate_rng(cfg.seed, g, rep);
            let simulated = simulate_replicate(cfg, &theta, base, sigma_b, &mut rng);
            let per_estimator =
                cfg.estimators
                    .iter()
                    .map(|&est| {
                        let outcome = simulated.as_ref().map_err(clone_error).and_then(
                            |(truths, dataset)| {
                                score_estimator(est, dataset, truths, cfg, bayes_prior, g, rep)
                            },
                        );
                        (est, outcome)
                    })
                    .collect();
            RepResult {
                grid_idx: g,
                per_estimator,
            }
        })
        .collect();

    let mut cells = Vec::new();
    for (g, &sigma_b) in cfg.sigma_b_grid.iter().enumerate() {
        for &est in &cfg.estimators {
            let mut per_replicate: Vec<Option<Metrics>> = Vec::with_capacity(cfg.replicates);
            let mut n_failed = 0;
            let mut n_nonconverged = 0;
            for r in results.iter().filter(|r| r.grid_idx == g) {
                let (_, outcome) = r
                    .per_estimator
                    .iter()
                    .find(|(e, _)| *e == est)
                    .expect("estimator present");
                match outcome {
                    Ok((metrics, nonconv)) => {
                        per_replicate.push(Some(*metrics));
                        n_nonconverged += *nonconv as usize;
                    }
                    Err(_) => {
                        per_replicate.push(None);
                        n_failed += 1;
                    }
                }
            }
            let valid: Vec<&Metrics> = per_replicate.iter().flatten().collect();
            let avg = |f: &dyn Fn(&Metrics) -> f64| -> f64 {
                let vals: Vec<f64> = valid
                    .iter()
                    .map(|m| f(m))
                    .filter(|v| v.is_finite())
                    .collect();
                if vals.is_empty() {
                    f64::NAN
                } else {
                    mean(&vals)
                }
            };
            let n_type_s_defined = valid.iter().filter(|m| m.type_s_rate.is_finite()).count();
            cells.push(GridCell {
                sigma_b,
                estimator: est,
                prop_significant: avg(&|m| m.prop_significant),
                type_s_rate: avg(&|m| m.type_s_rate),
                rmse: avg(&|m| m.rmse),
                rank_corr: avg(&|m| m.rank_corr),
                n_replicates: cfg.replicates,
                n_failed,
                n_nonconverged,
                n_type_s_defined,
                per_replicate,
            });
        }
    }
    Ok(MetricsGrid {
        schema_version: 1,
        cells,
    })
}

fn clone_error(e: &Error) -> Error {
    Error::Sampler(e.to_string())
}

fn score_estimator(
    est: EstimatorKind,
    dataset: &Dataset,
    truths: &[f64],
    cfg: &SimConfig,
    bayes_prior: PriorKind,
    grid_idx: usize,
    rep_idx: usize,
) -> Result<(Metrics, bool)> {
    match est {
        EstimatorKind::ExposedOnly => {
            let e = crate::estimators::exposed_only(dataset)?;
            let se: Vec<f64> = e.entries.iter().map(|x| x.se).collect();
            let estimates = IntervalEstimates::from_normal(
                e.entries.into_iter().map(|x| x.estimate).collect(),
                &se,
            );
            Ok((evaluate_metrics(&estimates, truths), false))
        }
        EstimatorKind::Difference => {
            let e = crate::estimators::difference(dataset)?;
            let se: Vec<f64> = e.entries.iter().map(|x| x.se).collect();
            let estimates = IntervalEstimates::from_normal(
                e.entries.into_iter().map(|x| x.estimate).collect(),
                &se,
            );
            Ok((evaluate_metrics(&estimates, truths), false))
        }
        EstimatorKind::Bayes => {
            let spec = ModelSpec::new(Variant::NormalDefault, bayes_prior);
            let sampler_cfg = cfg
                .bayes
                .sampler
                .with_seed(bayes_seed(cfg.seed, grid_idx, rep_idx));
            let (_, summary) = fit(&spec, dataset, &sampler_cfg)?;
            let j = dataset.len();
            let mut estimate = Vec::with_capacity(j);
            let mut lo = Vec::with_capacity(j);
            let mut hi = Vec::with_capacity(j);
            for k in 1..=j {
                let p = summary
                    .param(&format!("theta[{k}]"))
                    .ok_or_else(|| Error::Sampler("missing theta parameter".into()))?;
                estimate.push(p.mean);
                lo.push(p.q2_5);
                hi.push(p.q97_5);
            }
            Ok((
                evaluate_metrics(&IntervalEstimates { estimate, lo, hi }, truths),
                !summary.converged,
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_dataset(j: usize) -> Dataset {
        let records = (0..j)
            .map(|i| StudyRecord {
                id: format!("s{}", i + 1),
                x: Some(1.0 + 15.0 * i as f64),
                y1: 0.08 + 0.01 * i as f64,
                s1: 0.04,
                y0: 0.0,
                s0: 0.04,
                n1: Some(32),
                n0: Some(32),
            })
            .collect();
        Dataset::summary(records).unwrap()
    }

    #[test]
    fn metrics_worked_example() {
        let estimates = IntervalEstimates::from_normal(vec![1.0, -1.0], &[0.1, 0.1]);
        let m = evaluate_metrics(&estimates, &[1.0, 1.0]);
        assert_eq!(m.prop_significant, 1.0);
        assert_eq!(m.type_s_rate, 0.5);
        assert!((m.rmse - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn metrics_perfect_estimates() {
        let estimates = IntervalEstimates::from_normal(vec![0.5, 1.0, 2.0], &[1e-6, 1e-6, 1e-6]);
        let m = evaluate_metrics(&estimates, &[0.5, 1.0, 2.0]);
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.rank_corr, 1.0);
        assert_eq!(m.type_s_rate, 0.0);
    }

    #[test]
    fn metrics_reversed_ranking() {
        let estimates = IntervalEstimates::from_normal(vec![3.0, 2.0, 1.0], &[10.0, 10.0, 10.0]);
        let m = evaluate_metrics(&estimates, &[1.0, 2.0, 3.0]);
        assert_eq!(m.rank_corr, -1.0);
        assert!(m.type_s_rate.is_nan(), "no significant estimates");
        assert_eq!(m.prop_significant, 0.0);
    }

    #[test]
    #[allow(clippy::field_reassign_with_default)]
    fn replicate_zero_sigma_b_has_zero_bias() {
        let base = base_dataset(5);
        let cfg = SimConfig::new(ThetaSource::Fixed {
            values: vec![0.1; 5],
        });
        let theta = resolve_theta_source(&cfg.theta_source, &base).unwrap();
        let mut rng = replicate_rng(3, 0, 0);
        let (truths, d) = simulate_replicate(&cfg, &theta, &base, 0.0, &mut rng).unwrap();
        assert_eq!(truths, vec![0.1; 5]);
        // With sigma_b = 0 and mu_b = 0 the sham measurements are pure noise
        // around zero at scale sigma_y.
        for r in d.summary_records().unwrap() {
            assert!(r.y0.abs() < 5.0 * cfg.sigma_y);
            assert_eq!(r.s0, cfg.sigma_y);
        }
    }

    #[test]
    fn replicate_is_deterministic() {
        let base = base_dataset(6);
        let cfg = SimConfig::new(ThetaSource::RawObserved);
        let theta = resolve_theta_source(&cfg.theta_source, &base).unwrap();
        let (t1, d1) =
            simulate_replicate(&cfg, &theta, &base, 0.05, &mut replicate_rng(9, 2, 7)).unwrap();
        let (t2, d2) =
            simulate_replicate(&cfg, &theta, &base, 0.05, &mut replicate_rng(9, 2, 7)).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(d1, d2);
        // Raw-observed truths are fixed, but the noise stream differs.
        let (t3, d3) =
            simulate_replicate(&cfg, &theta, &base, 0.05, &mut replicate_rng(9, 2, 8)).unwrap();
        assert_eq!(t1, t3);
        assert_ne!(d1, d3);
    }

    #[test]
    fn raw_observed_noiseless_limit_recovers_y1() {
        let base = base_dataset(4);
        let mut cfg = SimConfig::new(ThetaSource::RawObserved);
        cfg.sigma_y = 1e-12;
        let theta = resolve_theta_source(&cfg.theta_source, &base).unwrap();
        let (truths, d) =
            simulate_replicate(&cfg, &theta, &base, 0.0, &mut replicate_rng(1, 0, 0)).unwrap();
        for (r, (base_r, t)) in d
            .summary_records()
            .unwrap()
            .iter()
            .zip(base.summary_records().unwrap().iter().zip(&truths))
        {
            assert_eq!(*t, base_r.y1);
            assert!((r.y1 - base_r.y1).abs() < 1e-9);
        }
    }

    #[test]
    fn t_noise_requires_sample_sizes() {
        let mut records = base_dataset(3).summary_records().unwrap().to_vec();
        records[1].n0 = None;
        let base = Dataset::summary(records).unwrap();
        let mut cfg = SimConfig::new(ThetaSource::RawObserved);
        cfg.noise = NoiseKind::TScaled;
        let theta = resolve_theta_source(&cfg.theta_source, &base).unwrap();
        let err = simulate_replicate(&cfg, &theta, &base, 0.0, &mut replicate_rng(1, 0, 0));
        assert!(err.is_err());
    }

    #[test]
    fn subset_selection_without_replacement() {
        let base = base_dataset(10);
        let mut cfg = SimConfig::new(ThetaSource::RawObserved);
        cfg.size = Some(4);
        let theta = resolve_theta_source(&cfg.theta_source, &base).unwrap();
        let (truths, d) =
            simulate_replicate(&cfg, &theta, &base, 0.0, &mut replicate_rng(5, 0, 0)).unwrap();
        assert_eq!(truths.len(), 4);
        assert_eq!(d.len(), 4);
        let ids = d.ids();
        let unique: std::collections::HashSet<_> = ids.iter().collect();
        assert_eq!(unique.len(), 4);
    }

    #[test]
    fn fixed_theta_length_must_match() {
        let base = base_dataset(4);
        let cfg = SimConfig::new(ThetaSource::Fixed {
            values: vec![0.1; 3],
        });
        assert!(resolve_theta_source(&cfg.theta_source, &base).is_err());
    }

    #[test]
    fn small_grid_shape_and_determinism() {
        let base = base_dataset(6);
        let mut cfg = SimConfig::new(ThetaSource::RawObserved);
        cfg.sigma_b_grid = vec![0.0, 0.05];
        cfg.replicates = 4;
        cfg.estimators = vec![EstimatorKind::ExposedOnly, EstimatorKind::Difference];
        let g1 = run_grid(&cfg, &base).unwrap();
        assert_eq!(g1.cells.len(), 4);
        for c in &g1.cells {
            assert!(c.prop_significant.is_finite());
            assert!(c.rmse.is_finite());
            assert_eq!(c.n_failed, 0);
            assert_eq!(c.n_replicates, 4);
        }
        let g2 = run_grid(&cfg, &base).unwrap();
        for (a, b) in g1.cells.iter().zip(&g2.cells) {
            assert_eq!(a.rmse, b.rmse);
            assert_eq!(a.prop_significant, b.prop_significant);
        }
    }

    #[test]
    fn tidy_csv_has_expected_shape() {
        let base = base_dataset(5);
        let mut cfg = SimConfig::new(ThetaSource::RawObserved);
        cfg.sigma_b_grid = vec![0.0];
        cfg.replicates = 2;
        cfg.estimators = vec![EstimatorKind::Difference];
        let grid = run_grid(&cfg, &base).unwrap();
        let mut buf = Vec::new();
        grid.to_tidy_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.trim().lines().collect();
        assert_eq!(
            lines[0],
            "sigma_b,estimator,metric,value,n_replicates,n_failed"
        );
        assert_eq!(lines.len(), 1 + 4);
        assert!(lines[1].starts_with("0,difference,prop_significant,"));
    }
}
