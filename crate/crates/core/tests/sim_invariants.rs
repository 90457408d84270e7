//! Statistical invariants of the simulation harness over the sigma_b grid.

mod common;

use common::{rng, std_normal};
use shamstat::data::{Dataset, StudyRecord};
use shamstat::math::{mean, sample_sd};
use shamstat::sim::{
    run_grid, BayesConfig, EstimatorKind, GridCell, MetricsGrid, SimConfig, ThetaSource,
};

fn base_dataset(j: usize) -> Dataset {
    let mut r = rng(880);
    let records = (0..j)
        .map(|i| {
            let theta = 0.097 + 0.069 * std_normal(&mut r);
            StudyRecord {
                id: format!("s{i}"),
                x: Some(15.0 * (i + 1) as f64),
                y1: theta,
                s1: 0.04,
                y0: 0.0,
                s0: 0.04,
                n1: Some(32),
                n0: Some(32),
            }
        })
        .collect();
    Dataset::summary(records).unwrap()
}

fn metric_se(cell: &GridCell, f: impl Fn(&shamstat::sim::Metrics) -> f64) -> f64 {
    let vals: Vec<f64> = cell
        .per_replicate
        .iter()
        .flatten()
        .map(f)
        .filter(|v| v.is_finite())
        .collect();
    sample_sd(&vals) / (vals.len() as f64).sqrt()
}

#[test]
fn classical_estimator_grid_patterns() {
    // Classical estimators only: cheap enough for a full grid at R = 200.
    let base = base_dataset(38);
    let mut cfg = SimConfig::new(ThetaSource::RawObserved);
    cfg.replicates = 200;
    cfg.estimators = vec![EstimatorKind::ExposedOnly, EstimatorKind::Difference];
    cfg.seed = 4242;
    let grid = run_grid(&cfg, &base).unwrap();

    // The difference estimator's significance rate is sigma_b-invariant by
    // construction; the empirical slope over the grid stays within noise.
    let sig: Vec<(f64, f64, f64)> = cfg
        .sigma_b_grid
        .iter()
        .map(|&sb| {
            let c = grid.cell(sb, EstimatorKind::Difference).unwrap();
            (sb, c.prop_significant, metric_se(c, |m| m.prop_significant))
        })
        .collect();
    let xbar = mean(&sig.iter().map(|(x, ..)| *x).collect::<Vec<_>>());
    let ybar = mean(&sig.iter().map(|(_, y, _)| *y).collect::<Vec<_>>());
    let sxx: f64 = sig.iter().map(|(x, ..)| (x - xbar) * (x - xbar)).sum();
    let slope: f64 = sig
        .iter()
        .map(|(x, y, _)| (x - xbar) * (y - ybar))
        .sum::<f64>()
        / sxx;
    let slope_se = {
        // Conservative: propagate the largest per-point MC se.
        let max_se = sig.iter().map(|(.., se)| *se).fold(0.0, f64::max);
        max_se / sxx.sqrt()
    };
    assert!(
        slope.abs() <= 2.0 * slope_se,
        "difference significance slope {slope} (2 se = {})",
        2.0 * slope_se
    );

    // Exposed-only RMSE grows with sigma_b.
    let rmse0 = grid.cell(0.0, EstimatorKind::ExposedOnly).unwrap().rmse;
    let rmse10 = grid.cell(0.10, EstimatorKind::ExposedOnly).unwrap().rmse;
    assert!(
        rmse10 > rmse0,
        "exposed-only rmse {rmse0} at 0 vs {rmse10} at 0.10"
    );

    // Difference RMSE stays flat in comparison.
    let d0 = grid.cell(0.0, EstimatorKind::Difference).unwrap().rmse;
    let d10 = grid.cell(0.10, EstimatorKind::Difference).unwrap().rmse;
    assert!((d10 - d0).abs() < 0.25 * (rmse10 - rmse0));
}

fn rank_se(cell: &GridCell) -> f64 {
    metric_se(cell, |m| m.rank_corr)
}

#[test]
fn bayes_rank_correlation_straddles_the_better_classical() {
    let base = base_dataset(38);
    let mut cfg = SimConfig::new(ThetaSource::RawObserved);
    cfg.sigma_b_grid = vec![0.0, 0.05, 0.10];
    cfg.replicates = 40;
    cfg.bayes = BayesConfig::default();
    cfg.seed = 777;
    let grid: MetricsGrid = run_grid(&cfg, &base).unwrap();

    for &sb in &cfg.sigma_b_grid {
        let bayes = grid.cell(sb, EstimatorKind::Bayes).unwrap();
        let exposed = grid.cell(sb, EstimatorKind::ExposedOnly).unwrap();
        let diff = grid.cell(sb, EstimatorKind::Difference).unwrap();
        let floor = exposed.rank_corr.min(diff.rank_corr);
        let se = rank_se(bayes).max(rank_se(exposed)).max(rank_se(diff));
        assert!(
            bayes.rank_corr >= floor - 2.0 * se,
            "sigma_b {sb}: bayes rank {} vs floor {floor} (2 se {})",
            bayes.rank_corr,
            2.0 * se
        );
    }
}
