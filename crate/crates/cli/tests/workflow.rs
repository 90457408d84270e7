//! One full analysis pass through the CLI on a 38-study dataset: classical
//! estimates, sham diagnostics, a hierarchical fit, the closed-form
//! adjustment driven by that fit, and a simulation grid seeded from the
//! fit's posterior draws.

use std::path::PathBuf;
use std::process::Command;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_shamstat")
}

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(bin()).args(args).output().expect("runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_dataset(path: &std::path::Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut csv = String::from("id,x,y1,s1,y0,s0,n1,n0\n");
    for i in 0..38 {
        let x = 15.0 * (i + 1) as f64;
        let theta = 0.097 + 0.069 * z();
        let b = 0.004 + 0.008 * z();
        let y1 = theta + b + 0.04 * z();
        let y0 = b + 0.04 * z();
        csv.push_str(&format!("hz{x},{x},{y1},0.04,{y0},0.04,32,32\n"));
    }
    std::fs::write(path, csv).unwrap();
}

#[test]
fn full_analysis_workflow() {
    let base = std::env::temp_dir().join(format!("shamstat-workflow-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&base);
    std::fs::create_dir_all(&base).unwrap();
    let input = base.join("chick_like.csv");
    write_dataset(&input);
    let input = input.to_str().unwrap();

    let dir = |name: &str| -> PathBuf { base.join(name) };

    // Classical estimates and sham diagnostics.
    let (code, err) = run(&[
        "--out-dir",
        dir("est").to_str().unwrap(),
        "estimate",
        "--input",
        input,
        "--reference",
        "t",
    ]);
    assert_eq!(code, 0, "{err}");
    let (code, err) = run(&[
        "--out-dir",
        dir("diag").to_str().unwrap(),
        "diagnose",
        "--input",
        input,
    ]);
    assert_eq!(code, 0, "{err}");
    let diag: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir("diag").join("sham_diagnostics.json")).unwrap(),
    )
    .unwrap();
    // Simulated sham data really are pure noise: the chi-square CDF should
    // be unremarkable.
    let cdf = diag["cdf"].as_f64().unwrap();
    assert!((0.001..0.999).contains(&cdf), "cdf {cdf}");

    // Hierarchical fit.
    let (code, err) = run(&[
        "--out-dir",
        dir("fit").to_str().unwrap(),
        "--seed",
        "41",
        "fit",
        "--input",
        input,
        "--chains",
        "2",
        "--warmup",
        "500",
        "--draws",
        "500",
    ]);
    assert!(code == 0 || code == 4, "exit {code}: {err}");
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir("fit").join("fit_summary.json")).unwrap(),
    )
    .unwrap();
    let param = |name: &str| -> f64 {
        summary["params"]
            .as_array()
            .unwrap()
            .iter()
            .find(|p| p["name"] == name)
            .unwrap()["mean"]
            .as_f64()
            .unwrap()
    };
    // The generating values: mu_theta 0.097, sigma_theta 0.069.
    assert!((param("mu_theta") - 0.097).abs() < 0.05);
    assert!((param("sigma_theta") - 0.069).abs() < 0.05);
    assert!(param("sigma_b") < 0.05);

    // Closed-form adjustment from the fitted bias distribution: with the
    // tiny fitted sigma_b the sham measurements barely matter.
    let (code, err) = run(&[
        "--out-dir",
        dir("adj").to_str().unwrap(),
        "adjust",
        "--input",
        input,
        "--from-fit",
        dir("fit").join("fit_summary.json").to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let adj: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir("adj").join("adjustment.json")).unwrap())
            .unwrap();
    for row in adj["rows"].as_array().unwrap() {
        let lambda = row["lambda"].as_f64().unwrap();
        assert!((0.0..0.6).contains(&lambda), "lambda {lambda}");
    }

    // Simulation grid drawing truths from the stored posterior.
    let (code, err) = run(&[
        "--out-dir",
        dir("sim").to_str().unwrap(),
        "--seed",
        "42",
        "simulate",
        "--input",
        input,
        "--grid",
        "0,0.05",
        "--replicates",
        "4",
        "--theta-source",
        "draws",
        "--draws-file",
        dir("fit").join("draws.csv").to_str().unwrap(),
        "--bayes-warmup",
        "200",
        "--bayes-draws",
        "200",
    ]);
    assert_eq!(code, 0, "{err}");
    let metrics = std::fs::read_to_string(dir("sim").join("metrics_M38.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 2 * 3 * 4);
    assert!(dir("sim").join("fig_metrics_M38.svg").exists());
}
