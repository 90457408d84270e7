//! Command-line workflows over paired active/sham experiment data:
//! classical estimates, hierarchical model fits, the closed-form linear
//! adjustment, simulation grids, and sham diagnostics.

mod output;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use shamstat::data::{self, Dataset, IngestFormat, LogOddsConvention};
use shamstat::estimators::{classify_significance, difference, exposed_only, Reference};
use shamstat::model::{ModelSpec, PriorKind, Variant};
use shamstat::sampler::{fit, SamplerConfig, Transform};
use shamstat::sim::{self, EstimatorKind, NoiseKind, SimConfig, ThetaSource};

use output::{Emitter, Formats};

/// Fixed default seed so runs are reproducible out of the box.
const DEFAULT_SEED: u64 = 1729;

#[derive(Parser)]
#[command(
    name = "shamstat",
    about = "Estimation and hierarchical Bayesian modeling for repeated sham-controlled experiments",
    version
)]
struct Cli {
    /// Master seed feeding every stochastic component.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Cap on worker threads (default: all cores). Results do not depend on
    /// this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "shamstat-out")]
    out_dir: PathBuf,

    /// Comma-separated output kinds: csv, json, svg, or all.
    #[arg(long, global = true, default_value = "all")]
    format: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Input dataset path.
    #[arg(long)]
    input: PathBuf,

    /// Input format; inferred from the extension and header when omitted.
    #[arg(long, value_parser = parse_format)]
    format_in: Option<IngestFormat>,

    /// Convert count data to normal-scale estimates first. Optional value
    /// picks the formula: `corrected` (default) or `haldane-anscombe`.
    #[arg(long, num_args = 0..=1, default_missing_value = "corrected")]
    log_odds: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Exposed-only and difference estimates with significance tables.
    Estimate {
        #[command(flatten)]
        input: InputArgs,
        /// Multiply sham standard errors by this factor before estimation.
        #[arg(long)]
        rescale_sham_se: Option<f64>,
        /// Reference distribution for p-values: normal or t.
        #[arg(long, default_value = "normal")]
        reference: String,
    },
    /// Fit a hierarchical model with Hamiltonian Monte Carlo.
    Fit {
        #[command(flatten)]
        input: InputArgs,
        /// Model variant name (e.g. normal-default, binomial, gp-se).
        #[arg(long, default_value = "normal-default")]
        variant: String,
        /// Hyperprior: uniform, weak, or auto (weak below 15 studies).
        #[arg(long, default_value = "auto")]
        prior: String,
        /// Full model spec as a JSON file; overrides --variant/--prior.
        #[arg(long)]
        model_config: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        chains: usize,
        #[arg(long, default_value_t = 1000)]
        warmup: usize,
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        #[arg(long, default_value_t = 0.8)]
        target_accept: f64,
        #[arg(long, default_value_t = 1024)]
        max_leapfrog: usize,
        /// Draw-wise transformed summary, e.g. `mu_theta=exp` or
        /// `mu_b=inv-logit`; repeatable.
        #[arg(long)]
        transform: Vec<String>,
    },
    /// Closed-form partial adjustment for the sham measurement.
    Adjust {
        #[command(flatten)]
        input: InputArgs,
        /// Population bias mean.
        #[arg(long, allow_hyphen_values = true)]
        mu_b: Option<f64>,
        /// Population bias scale; accepts `inf` for the difference limit.
        #[arg(long, value_parser = parse_sigma_b)]
        sigma_b: Option<f64>,
        /// Take posterior means of mu_b and sigma_b from a fit summary JSON.
        #[arg(long)]
        from_fit: Option<PathBuf>,
    },
    /// Simulation study over a grid of sham-effect scales.
    Simulate {
        #[command(flatten)]
        input: InputArgs,
        /// Comma-separated sigma_b grid.
        #[arg(long, default_value = "0,0.02,0.04,0.06,0.08,0.10")]
        grid: String,
        #[arg(long, default_value_t = 200)]
        replicates: usize,
        #[arg(long, default_value_t = 0.04)]
        sigma_y: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu_b: f64,
        /// Comma-separated dataset sizes M; default uses all studies.
        #[arg(long)]
        sizes: Option<String>,
        /// Truth source: draws (stored posterior), fixed, or raw.
        #[arg(long, default_value = "raw")]
        theta_source: String,
        /// Draws CSV for --theta-source draws.
        #[arg(long)]
        draws_file: Option<PathBuf>,
        /// Comma-separated truth vector for --theta-source fixed.
        #[arg(long, allow_hyphen_values = true)]
        fixed_theta: Option<String>,
        /// Measurement noise: normal or t (scaled, df = n-1).
        #[arg(long, default_value = "normal")]
        noise: String,
        /// Comma-separated estimators to score.
        #[arg(long, default_value = "exposed-only,difference,bayes")]
        estimators: String,
        /// Prior for the per-replicate Bayes fits: uniform, weak, or auto.
        #[arg(long, default_value = "auto")]
        bayes_prior: String,
        #[arg(long, default_value_t = 2)]
        bayes_chains: usize,
        #[arg(long, default_value_t = 500)]
        bayes_warmup: usize,
        #[arg(long, default_value_t = 500)]
        bayes_draws: usize,
    },
    /// Sham-data chi-square diagnostic and scatter data.
    Diagnose {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        rescale_sham_se: Option<f64>,
    },
}

fn parse_format(s: &str) -> Result<IngestFormat, String> {
    match s {
        "summary-csv" => Ok(IngestFormat::SummaryCsv),
        "count-csv" => Ok(IngestFormat::CountCsv),
        "json" => Ok(IngestFormat::Json),
        _ => Err(format!(
            "unknown input format `{s}` (summary-csv, count-csv, json)"
        )),
    }
}

fn parse_sigma_b(s: &str) -> Result<f64, String> {
    match s {
        "inf" | "infinity" | "Inf" => Ok(f64::INFINITY),
        _ => s.parse().map_err(|_| format!("cannot parse `{s}`")),
    }
}

/// A failed run with its process exit code: 2 for input/validation errors,
/// 3 for runtime errors.
struct Failure {
    code: u8,
    msg: String,
}

fn invalid(msg: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        msg: msg.to_string(),
    }
}

fn runtime(msg: impl std::fmt::Display) -> Failure {
    Failure {
        code: 3,
        msg: msg.to_string(),
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // Determinism does not depend on the worker count; this only caps
        // parallelism.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    let formats = match Formats::parse(&cli.format) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let emitter = match Emitter::new(&cli.out_dir, formats) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    match run(&cli, emitter) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli, mut emitter: Emitter) -> CmdResult {
    let code = match &cli.command {
        Command::Estimate {
            input,
            rescale_sham_se,
            reference,
        } => cmd_estimate(input, *rescale_sham_se, reference, &mut emitter)?,
        Command::Fit {
            input,
            variant,
            prior,
            model_config,
            chains,
            warmup,
            draws,
            target_accept,
            max_leapfrog,
            transform,
        } => {
            let sampler = SamplerConfig {
                chains: *chains,
                warmup: *warmup,
                draws: *draws,
                target_accept: *target_accept,
                max_leapfrog: *max_leapfrog,
                seed: cli.seed,
            };
            cmd_fit(
                input,
                variant,
                prior,
                model_config.as_deref(),
                &sampler,
                transform,
                &mut emitter,
            )?
        }
        Command::Adjust {
            input,
            mu_b,
            sigma_b,
            from_fit,
        } => cmd_adjust(input, *mu_b, *sigma_b, from_fit.as_deref(), &mut emitter)?,
        Command::Simulate {
            input,
            grid,
            replicates,
            sigma_y,
            mu_b,
            sizes,
            theta_source,
            draws_file,
            fixed_theta,
            noise,
            estimators,
            bayes_prior,
            bayes_chains,
            bayes_warmup,
            bayes_draws,
        } => {
            let bayes_sampler = SamplerConfig {
                chains: *bayes_chains,
                warmup: *bayes_warmup,
                draws: *bayes_draws,
                seed: 0, // per-replicate seeds are derived inside the harness
                ..Default::default()
            };
            cmd_simulate(SimulateArgs {
                input,
                grid,
                replicates: *replicates,
                sigma_y: *sigma_y,
                mu_b: *mu_b,
                sizes: sizes.as_deref(),
                theta_source,
                draws_file: draws_file.as_deref(),
                fixed_theta: fixed_theta.as_deref(),
                noise,
                estimators,
                bayes_prior,
                bayes_sampler,
                seed: cli.seed,
                emitter: &mut emitter,
            })?
        }
        Command::Diagnose {
            input,
            rescale_sham_se,
        } => cmd_diagnose(input, *rescale_sham_se, &mut emitter)?,
    };
    use std::io::Write as _;
    let stdout = std::io::stdout();
    for path in &emitter.written {
        // Ignore EPIPE so `shamstat ... | head` exits cleanly.
        let _ = writeln!(stdout.lock(), "wrote {}", path.display());
    }
    Ok(code)
}

fn sniff_format(path: &Path) -> Result<IngestFormat, Failure> {
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        return Ok(IngestFormat::Json);
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let header = text.lines().next().unwrap_or("");
    if header.split(',').any(|h| h.trim() == "N1") {
        Ok(IngestFormat::CountCsv)
    } else {
        Ok(IngestFormat::SummaryCsv)
    }
}

fn parse_log_odds(spec: &str) -> Result<LogOddsConvention, Failure> {
    match spec {
        "corrected" => Ok(LogOddsConvention::Corrected),
        "haldane-anscombe" | "conventional" => Ok(LogOddsConvention::HaldaneAnscombe),
        other => Err(invalid(format!(
            "unknown log-odds convention `{other}` (corrected, haldane-anscombe)"
        ))),
    }
}

/// Load the dataset; count data are transformed to summary scale when
/// requested (or required by the caller).
fn load_dataset(input: &InputArgs, need_summary: bool) -> Result<Dataset, Failure> {
    let format = match input.format_in {
        Some(f) => f,
        None => sniff_format(&input.input)?,
    };
    let dataset = data::ingest(&input.input, format).map_err(invalid)?;
    let dataset = match (&dataset, &input.log_odds) {
        (Dataset::Count { .. }, Some(conv)) => {
            data::log_odds_dataset(&dataset, parse_log_odds(conv)?).map_err(invalid)?
        }
        (Dataset::Count { .. }, None) if need_summary => {
            return Err(invalid(
                "this command needs summary data; pass --log-odds to convert counts",
            ));
        }
        _ => dataset,
    };
    Ok(dataset)
}

fn covariates_or_index(dataset: &Dataset) -> (Vec<f64>, &'static str) {
    match dataset.covariates() {
        Some(x) => (x, "x"),
        None => (
            (1..=dataset.len()).map(|i| i as f64).collect(),
            "study index",
        ),
    }
}

fn cmd_estimate(
    input: &InputArgs,
    rescale: Option<f64>,
    reference: &str,
    emitter: &mut Emitter,
) -> CmdResult {
    let reference = match reference {
        "normal" => Reference::Normal,
        "t" => Reference::TDist,
        other => return Err(invalid(format!("unknown reference `{other}` (normal, t)"))),
    };
    let mut dataset = load_dataset(input, true)?;
    if let Some(f) = rescale {
        dataset = data::rescale_sham_ses(&dataset, f).map_err(invalid)?;
    }

    let (xs, x_label) = covariates_or_index(&dataset);
    for (stem, set) in [
        ("exposed_only", exposed_only(&dataset).map_err(invalid)?),
        ("difference", difference(&dataset).map_err(invalid)?),
    ] {
        let table = classify_significance(&set, reference).map_err(invalid)?;
        emitter
            .estimate_set(&format!("estimates_{stem}"), &set)
            .map_err(runtime)?;
        emitter
            .significance(&format!("significance_{stem}"), &table)
            .map_err(runtime)?;
        if emitter.formats.svg {
            let estimates: Vec<f64> = set.entries.iter().map(|e| e.estimate).collect();
            let bands: Vec<_> = table.rows.iter().map(|r| r.band).collect();
            let ps: Vec<f64> = table.rows.iter().map(|r| r.p).collect();
            let svg = plot::estimates_figure(stem, &xs, &estimates, &bands, &ps, x_label);
            emitter
                .svg(&format!("fig_estimates_{stem}.svg"), &svg)
                .map_err(runtime)?;
        }
    }
    Ok(0)
}

fn parse_prior(spec: &str, n_studies: usize) -> Result<PriorKind, Failure> {
    match spec {
        "auto" => Ok(PriorKind::auto_for(n_studies)),
        other => PriorKind::from_str(other).map_err(invalid),
    }
}

fn cmd_fit(
    input: &InputArgs,
    variant: &str,
    prior: &str,
    model_config: Option<&Path>,
    sampler: &SamplerConfig,
    transforms: &[String],
    emitter: &mut Emitter,
) -> CmdResult {
    let variant = Variant::from_str(variant).map_err(invalid)?;
    let dataset = load_dataset(input, variant != Variant::Binomial)?;

    let spec = match model_config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ModelSpec>(&text).map_err(invalid)?
        }
        None => ModelSpec::new(variant, parse_prior(prior, dataset.len())?),
    };

    let parsed_transforms = transforms
        .iter()
        .map(|t| -> Result<(String, Transform), Failure> {
            let (name, kind) = t
                .split_once('=')
                .ok_or_else(|| invalid(format!("transform `{t}` is not name=kind")))?;
            let kind = match kind {
                "exp" => Transform::Exp,
                "inv-logit" => Transform::InvLogit,
                other => return Err(invalid(format!("unknown transform `{other}`"))),
            };
            Ok((name.to_string(), kind))
        })
        .collect::<Result<Vec<_>, _>>()?;

    // Validate model/dataset compatibility up front for a clean validation
    // exit code.
    shamstat::model::Model::new(spec.clone(), &dataset).map_err(invalid)?;

    let (draws, _) = fit(&spec, &dataset, sampler).map_err(runtime)?;
    let summary = shamstat::sampler::summarize(&draws, &parsed_transforms).map_err(runtime)?;

    emitter
        .csv_with("draws.csv", |buf| {
            draws.to_csv(buf)?;
            Ok(())
        })
        .map_err(runtime)?;
    emitter
        .json("fit_summary.json", &summary)
        .map_err(runtime)?;

    if emitter.formats.svg {
        if let Ok(records) = dataset.summary_records() {
            let (xs, x_label) = covariates_or_index(&dataset);
            let post_mean: Vec<f64> = (1..=dataset.len())
                .map(|k| {
                    summary
                        .param(&format!("theta[{k}]"))
                        .map_or(f64::NAN, |p| p.mean)
                })
                .collect();
            let post_sd: Vec<f64> = (1..=dataset.len())
                .map(|k| {
                    summary
                        .param(&format!("theta[{k}]"))
                        .map_or(f64::NAN, |p| p.sd)
                })
                .collect();
            let raw: Vec<f64> = records.iter().map(|r| r.y1).collect();
            let raw_se: Vec<f64> = records.iter().map(|r| r.s1).collect();
            let svg = plot::interval_figure(
                &[
                    ("posterior theta (mean +/- sd)", &xs, &post_mean, &post_sd),
                    ("raw exposed estimates (+/- se)", &xs, &raw, &raw_se),
                ],
                x_label,
                "treatment effect",
            );
            emitter.svg("fig_shrinkage.svg", &svg).map_err(runtime)?;
        }
    }

    if summary.converged {
        Ok(0)
    } else {
        eprintln!(
            "fit completed with convergence warnings: {}",
            summary.warnings.join("; ")
        );
        Ok(4)
    }
}

fn cmd_adjust(
    input: &InputArgs,
    mu_b: Option<f64>,
    sigma_b: Option<f64>,
    from_fit: Option<&Path>,
    emitter: &mut Emitter,
) -> CmdResult {
    let dataset = load_dataset(input, true)?;
    let (mu_b, sigma_b) = match (mu_b, sigma_b, from_fit) {
        (Some(m), Some(s), None) => (m, s),
        (None, None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
            let summary: shamstat::sampler::FitSummary =
                serde_json::from_str(&text).map_err(invalid)?;
            let get = |name: &str| -> Result<f64, Failure> {
                summary
                    .param(name)
                    .map(|p| p.mean)
                    .ok_or_else(|| invalid(format!("fit summary has no parameter `{name}`")))
            };
            (get("mu_b")?, get("sigma_b")?)
        }
        _ => {
            return Err(invalid(
                "pass either --mu-b and --sigma-b, or --from-fit alone",
            ))
        }
    };
    let adj = shamstat::adjust::linear_adjust(&dataset, mu_b, sigma_b).map_err(invalid)?;
    emitter.adjustment("adjustment", &adj).map_err(runtime)?;
    Ok(0)
}

struct SimulateArgs<'a> {
    input: &'a InputArgs,
    grid: &'a str,
    replicates: usize,
    sigma_y: f64,
    mu_b: f64,
    sizes: Option<&'a str>,
    theta_source: &'a str,
    draws_file: Option<&'a Path>,
    fixed_theta: Option<&'a str>,
    noise: &'a str,
    estimators: &'a str,
    bayes_prior: &'a str,
    bayes_sampler: SamplerConfig,
    seed: u64,
    emitter: &'a mut Emitter,
}

fn parse_f64_list(spec: &str, what: &str) -> Result<Vec<f64>, Failure> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("bad {what} entry `{s}`")))
        })
        .collect()
}

fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    let dataset = load_dataset(args.input, true)?;

    let theta_source = match args.theta_source {
        "raw" | "raw-observed" => ThetaSource::RawObserved,
        "fixed" => {
            let values = parse_f64_list(
                args.fixed_theta
                    .ok_or_else(|| invalid("--theta-source fixed needs --fixed-theta"))?,
                "fixed-theta",
            )?;
            ThetaSource::Fixed { values }
        }
        "draws" | "posterior-draws" => {
            let path = args
                .draws_file
                .ok_or_else(|| invalid("--theta-source draws needs --draws-file"))?;
            ThetaSource::PosteriorDrawsFile {
                path: path.to_path_buf(),
            }
        }
        other => {
            return Err(invalid(format!(
                "unknown theta source `{other}` (draws, fixed, raw)"
            )))
        }
    };

    let noise = match args.noise {
        "normal" => NoiseKind::Normal,
        "t" | "t-scaled" => NoiseKind::TScaled,
        other => return Err(invalid(format!("unknown noise `{other}` (normal, t)"))),
    };

    let estimators = args
        .estimators
        .split(',')
        .map(|s| EstimatorKind::from_str(s.trim()).map_err(invalid))
        .collect::<Result<Vec<_>, _>>()?;

    let sizes: Vec<Option<usize>> = match args.sizes {
        None => vec![None],
        Some(spec) => spec
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map(Some)
                    .map_err(|_| invalid(format!("bad size `{s}`")))
            })
            .collect::<Result<Vec<_>, _>>()?,
    };

    let grid_values = parse_f64_list(args.grid, "grid")?;
    let bayes_prior = match args.bayes_prior {
        "auto" => None,
        other => Some(PriorKind::from_str(other).map_err(invalid)?),
    };

    for size in sizes {
        let m = size.unwrap_or(dataset.len());
        let mut cfg = SimConfig::new(theta_source.clone());
        cfg.sigma_b_grid = grid_values.clone();
        cfg.replicates = args.replicates;
        cfg.sigma_y = args.sigma_y;
        cfg.mu_b = args.mu_b;
        cfg.size = size;
        cfg.noise = noise;
        cfg.estimators = estimators.clone();
        cfg.bayes = sim::BayesConfig {
            prior: bayes_prior,
            sampler: args.bayes_sampler,
        };
        cfg.seed = args.seed;

        let grid = sim::run_grid(&cfg, &dataset).map_err(runtime)?;
        let nonconverged: usize = grid.cells.iter().map(|c| c.n_nonconverged).sum();
        if nonconverged > 0 {
            eprintln!(
                "note: {nonconverged} Bayes refits were flagged non-converged (size M = {m})"
            );
        }
        args.emitter
            .csv_with(&format!("metrics_M{m}.csv"), |buf| {
                grid.to_tidy_csv(buf)?;
                Ok(())
            })
            .map_err(runtime)?;
        args.emitter
            .json(&format!("metrics_M{m}.json"), &grid)
            .map_err(runtime)?;
        if args.emitter.formats.svg {
            args.emitter
                .svg(
                    &format!("fig_metrics_M{m}.svg"),
                    &plot::metrics_figure(&grid),
                )
                .map_err(runtime)?;
        }
    }
    Ok(0)
}

#[derive(serde::Serialize)]
struct DiagnoseDoc {
    schema_version: u32,
    stat: f64,
    df: usize,
    cdf: f64,
    mean_sham: f64,
}

fn cmd_diagnose(input: &InputArgs, rescale: Option<f64>, emitter: &mut Emitter) -> CmdResult {
    let mut dataset = load_dataset(input, true)?;
    if let Some(f) = rescale {
        dataset = data::rescale_sham_ses(&dataset, f).map_err(invalid)?;
    }
    let chi = data::sham_chi_square(&dataset).map_err(invalid)?;
    let records = dataset.summary_records().map_err(invalid)?;
    let mean_sham = records.iter().map(|r| r.y0).sum::<f64>() / records.len() as f64;
    {
        use std::io::Write as _;
        let _ = writeln!(
            std::io::stdout().lock(),
            "sham chi-square: stat = {:.4}, df = {}, cdf = {:.5}, mean sham = {:.5}",
            chi.stat,
            chi.df,
            chi.cdf,
            mean_sham
        );
    }
    emitter
        .json(
            "sham_diagnostics.json",
            &DiagnoseDoc {
                schema_version: 1,
                stat: chi.stat,
                df: chi.df,
                cdf: chi.cdf,
                mean_sham,
            },
        )
        .map_err(runtime)?;
    emitter
        .csv_with("sham_scatter.csv", |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["id", "x", "y1", "y0", "s0"])?;
            for r in records {
                w.write_record([
                    r.id.as_str(),
                    &r.x.map(|v| v.to_string()).unwrap_or_default(),
                    &r.y1.to_string(),
                    &r.y0.to_string(),
                    &r.s0.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })
        .map_err(runtime)?;
    if emitter.formats.svg {
        let (xs, x_label) = covariates_or_index(&dataset);
        let y0: Vec<f64> = records.iter().map(|r| r.y0).collect();
        let s0: Vec<f64> = records.iter().map(|r| r.s0).collect();
        let y1: Vec<f64> = records.iter().map(|r| r.y1).collect();
        let svg = plot::sham_figure(&xs, &y0, &s0, &y1, x_label);
        emitter.svg("fig_sham.svg", &svg).map_err(runtime)?;
    }
    Ok(0)
}
