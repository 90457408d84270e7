//! Property tests for the data layer and estimators, plus a Monte Carlo
//! calibration check of the sham chi-square statistic under its null.

mod common;

use proptest::prelude::*;
use shamstat::data::{
    ingest_reader, rescale_sham_ses, sham_chi_square, write_csv, write_json, Dataset, IngestFormat,
    StudyRecord,
};
use shamstat::estimators::{classify_significance, EstimateSet, Method, Reference};

fn study_record_strategy(idx: usize) -> impl Strategy<Value = StudyRecord> {
    (
        proptest::option::of(-1e3..1e3f64),
        -1e3..1e3f64,
        1e-6..1e3f64,
        -1e3..1e3f64,
        1e-6..1e3f64,
        proptest::option::of(2u32..500),
        proptest::option::of(2u32..500),
    )
        .prop_map(move |(x, y1, s1, y0, s0, n1, n0)| StudyRecord {
            id: format!("study-{idx}"),
            x,
            y1,
            s1,
            y0,
            s0,
            n1,
            n0,
        })
}

fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    (1usize..8)
        .prop_flat_map(|n| (0..n).map(study_record_strategy).collect::<Vec<_>>())
        .prop_map(|records| Dataset::summary(records).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_exact(d in dataset_strategy()) {
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let back = ingest_reader(buf.as_slice(), IngestFormat::SummaryCsv).unwrap();
        prop_assert_eq!(&d, &back);
    }

    #[test]
    fn json_round_trip_is_exact(d in dataset_strategy()) {
        let mut buf = Vec::new();
        write_json(&d, &mut buf).unwrap();
        let back = ingest_reader(buf.as_slice(), IngestFormat::Json).unwrap();
        prop_assert_eq!(&d, &back);
    }

    #[test]
    fn rescale_composes((d, a, b) in (dataset_strategy(), 0.1..4.0f64, 0.1..4.0f64)) {
        let two_step = rescale_sham_ses(&rescale_sham_ses(&d, a).unwrap(), b).unwrap();
        let one_step = rescale_sham_ses(&d, a * b).unwrap();
        for (r2, r1) in two_step
            .summary_records()
            .unwrap()
            .iter()
            .zip(one_step.summary_records().unwrap())
        {
            // equal to within one unit in the last place
            let ulp = (r1.s0 * f64::EPSILON).abs();
            prop_assert!((r2.s0 - r1.s0).abs() <= 2.0 * ulp);
            prop_assert_eq!(r2.s1, r1.s1);
            prop_assert_eq!(r2.y0, r1.y0);
        }
    }

    #[test]
    fn p_values_invariant_under_positive_rescaling(
        estimate in -10.0..10.0f64,
        se in 1e-3..10.0f64,
        scale in 1e-3..1e3f64,
    ) {
        let make = |e: f64, s: f64| EstimateSet {
            method: Method::ExposedOnly,
            entries: vec![shamstat::estimators::Estimate {
                id: "a".into(),
                estimate: e,
                se: s,
                df: None,
            }],
        };
        let t1 = classify_significance(&make(estimate, se), Reference::Normal).unwrap();
        let t2 = classify_significance(&make(estimate * scale, se * scale), Reference::Normal).unwrap();
        prop_assert!((t1.rows[0].p - t2.rows[0].p).abs() <= 1e-12 * t1.rows[0].p.max(1e-300));
        prop_assert_eq!(t1.rows[0].band, t2.rows[0].band);
    }
}

#[test]
fn sham_chi_square_null_calibration() {
    // Simulate y0_j ~ normal(0, s0_j): stat/df should average 1 over
    // replications, within 3 * sqrt(2 / (J * R)).
    let mut rng = common::rng(2024);
    let j = 38;
    let reps = 200;
    let mut sum_ratio = 0.0;
    for _ in 0..reps {
        let records: Vec<StudyRecord> = (0..j)
            .map(|i| {
                let s0 = 0.02 + 0.002 * (i % 10) as f64;
                StudyRecord {
                    id: format!("s{i}"),
                    x: None,
                    y1: 0.0,
                    s1: 0.04,
                    y0: s0 * common::std_normal(&mut rng),
                    s0,
                    n1: None,
                    n0: None,
                }
            })
            .collect();
        let d = Dataset::summary(records).unwrap();
        let c = sham_chi_square(&d).unwrap();
        assert_eq!(c.df, j);
        sum_ratio += c.stat / j as f64;
    }
    let mean_ratio = sum_ratio / reps as f64;
    let tol = 3.0 * (2.0 / (j as f64 * reps as f64)).sqrt();
    assert!(
        (mean_ratio - 1.0).abs() < tol,
        "mean stat/df = {mean_ratio}, tol {tol}"
    );
}
