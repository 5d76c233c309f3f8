//! Command-line front end: simulate point patterns, estimate intensities,
//! check kernel validity, run Monte Carlo experiments and emit plot-ready
//! data.
//!
//! Exit codes: 0 success, 1 usage error, 2 numeric/config invalidity or I/O
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dppstat::contamination::{ContaminationKind, ContaminationSpec};
use dppstat::countdist::{approx_constants, check_condition_amed};
use dppstat::estimators::{
    conservative_ci, default_bandwidth, ladder_estimates, lambda_std, sample_quantile, sigma2_hat,
    EstimatorKind, IntensityEstimate, Taper,
};
use dppstat::harness::{run_suite, RunSpec, Sigma2Config, SuiteConfig};
use dppstat::kernel::{KernelConfig, KernelSpec};
use dppstat::pattern::{digest, PatternRecord, PointPattern, Window};
use dppstat::rng::replication_rng;
use dppstat::sampler::{sample_dpp, SpectralModel};

#[derive(Parser)]
#[command(
    name = "dppstat",
    version,
    about = "Stationary DPP simulation and robust intensity estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one DPP realisation and write it as CSV plus a JSON sidecar.
    Simulate(SimulateArgs),
    /// Estimate the intensity of a pattern file.
    Estimate(EstimateArgs),
    /// Kernel validity, derived constants and the median condition.
    Check(CheckArgs),
    /// Run a Monte Carlo experiment suite (config file or inline flags).
    Experiment(ExperimentArgs),
    /// Emit plot-ready data: pair-correlation curve or pattern passthrough.
    Plotdata(PlotdataArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Model preset: dpp1 (R = M/4), dpp2 (R = 3M/4) or custom.
    #[arg(long, default_value = "dpp1")]
    model: String,
    /// Intensity (points per unit volume).
    #[arg(long, default_value_t = 50.0)]
    lambda: f64,
    /// Range fraction R/M; required for --model custom.
    #[arg(long = "R-fraction", alias = "r-fraction")]
    r_fraction: Option<f64>,
}

impl ModelArgs {
    fn kernel_config(&self) -> Result<KernelConfig, String> {
        match self.model.as_str() {
            "dpp1" => Ok(KernelConfig {
                r_fraction: self.r_fraction.unwrap_or(0.25),
                ..KernelConfig::dpp1(self.lambda)
            }),
            "dpp2" => Ok(KernelConfig {
                r_fraction: self.r_fraction.unwrap_or(0.75),
                ..KernelConfig::dpp2(self.lambda)
            }),
            "custom" => {
                let fr = self
                    .r_fraction
                    .ok_or("--model custom requires --R-fraction")?;
                Ok(KernelConfig {
                    family: "bessel".into(),
                    d: 2,
                    lambda: self.lambda,
                    r_fraction: fr,
                })
            }
            other => Err(format!("unknown model {other:?}; use dpp1, dpp2 or custom")),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Window scale: the pattern lives on [-n, n]^2.
    #[arg(long, default_value_t = 1.0)]
    n: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Frequency truncation override.
    #[arg(long)]
    truncation: Option<u32>,
    /// Output CSV path; a .json sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// Pattern CSV (header x,y).
    #[arg(long)]
    pattern: PathBuf,
    /// Window scale of the pattern: [-n, n]^2.
    #[arg(long, default_value_t = 1.0)]
    n: f64,
    /// Grid ladder for the median estimators.
    #[arg(long = "kn-ladder", value_delimiter = ',', default_values_t = vec![9u32, 16, 25, 36, 49])]
    kn_ladder: Vec<u32>,
    /// Jitter seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also estimate the asymptotic variance.
    #[arg(long, default_value_t = false)]
    sigma2: bool,
    /// Confidence level for the conservative intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Output JSON path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Radial grid resolution for the Fourier sup.
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    /// Optional JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Suite config (TOML). When omitted, a single run is built from flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    n: f64,
    /// Contamination kind: none, add-subsquare, delete-subsquare,
    /// add-uniform, delete-uniform.
    #[arg(long, default_value = "none")]
    contamination: String,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value_t = 1)]
    squares: u32,
    #[arg(long = "side-fraction", default_value_t = 0.1)]
    side_fraction: f64,
    #[arg(long, default_value_t = 500)]
    reps: u64,
    #[arg(long = "kn-ladder", value_delimiter = ',', default_values_t = vec![9u32, 16, 25, 36, 49])]
    kn_ladder: Vec<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Also run the variance estimator per replication.
    #[arg(long, default_value_t = false)]
    sigma2: bool,
    /// Output CSV path; a .json sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotdataArgs {
    /// Pattern CSV to re-emit (mutually exclusive with kernel flags).
    #[arg(long)]
    pattern: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    n: f64,
    #[command(flatten)]
    model: ModelArgs,
    /// Largest r for the pair-correlation curve.
    #[arg(long = "r-max", default_value_t = 0.3)]
    r_max: f64,
    /// Number of curve points.
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Provenance block embedded in every JSON output.
#[derive(Serialize)]
struct RunManifest {
    subcommand: String,
    config: serde_json::Value,
    master_seed: Option<u64>,
    outputs: Vec<String>,
    tool_version: String,
}

impl RunManifest {
    fn new(
        subcommand: &str,
        config: serde_json::Value,
        master_seed: Option<u64>,
        outputs: &[&Path],
    ) -> Self {
        RunManifest {
            subcommand: subcommand.into(),
            config,
            master_seed,
            outputs: outputs
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not usage errors.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Estimate(args) => estimate(args),
        Command::Check(args) => check(args),
        Command::Experiment(args) => experiment(args),
        Command::Plotdata(args) => plotdata(args),
    }
}

fn build_spec(cfg: &KernelConfig) -> Result<KernelSpec, String> {
    cfg.build().map_err(|e| e.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("writing {}: {e}", path.display()))
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

fn simulate(args: SimulateArgs) -> Result<ExitCode, String> {
    let kernel = args.model.kernel_config()?;
    let spec = build_spec(&kernel)?;
    let window = Window::centred_square(args.n).map_err(|e| e.to_string())?;
    let truncation = args
        .truncation
        .unwrap_or_else(|| SpectralModel::default_truncation(&spec, &window));
    let model = SpectralModel::build(&spec, &window, truncation).map_err(|e| e.to_string())?;
    let mut rng = replication_rng(args.seed, 0);
    let pattern = sample_dpp(&model, &mut rng).map_err(|e| e.to_string())?;

    write_file(&args.out, &pattern.to_csv())?;
    let sidecar = sidecar_path(&args.out);
    let manifest = RunManifest::new(
        "simulate",
        serde_json::json!({
            "kernel": kernel,
            "n": args.n,
            "truncation": truncation,
        }),
        Some(args.seed),
        &[&args.out, &sidecar],
    );
    let record = PatternRecord {
        window: pattern.window.clone(),
        points: pattern.points.clone(),
        seed: args.seed,
        model_digest: model.digest().to_string(),
    };
    let doc = serde_json::json!({ "manifest": manifest, "pattern": record });
    write_file(&sidecar, &serde_json::to_string_pretty(&doc).unwrap())?;
    eprintln!(
        "wrote {} points to {} (sidecar {})",
        pattern.len(),
        args.out.display(),
        sidecar.display()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct EstimateRecord {
    estimator: String,
    value: f64,
    k_n: Option<u32>,
    seed: u64,
    ci_low: f64,
    ci_high: f64,
}

fn estimate(args: EstimateArgs) -> Result<ExitCode, String> {
    let window = Window::centred_square(args.n).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(&args.pattern)
        .map_err(|e| format!("reading {}: {e}", args.pattern.display()))?;
    let pattern = PointPattern::from_csv(&text, window.clone()).map_err(|e| e.to_string())?;

    let mut rng = replication_rng(args.seed, 0);
    let mut estimates: Vec<IntensityEstimate> = Vec::new();
    estimates.push(lambda_std(&pattern).map_err(|e| e.to_string())?);
    let ladder =
        ladder_estimates(&pattern, &args.kn_ladder, &mut rng).map_err(|e| e.to_string())?;
    let ladder_values: Vec<f64> = ladder.iter().map(|e| e.value).collect();
    estimates.extend(ladder);
    estimates.push(IntensityEstimate {
        value: sample_quantile(&ladder_values, 0.5).map_err(|e| e.to_string())?,
        kind: EstimatorKind::MedDd,
        k_n: None,
    });

    let volume = window.volume();
    let records: Vec<EstimateRecord> = estimates
        .iter()
        .map(|e| {
            let (lo, hi) = conservative_ci(e, volume, args.level);
            EstimateRecord {
                estimator: e.kind.tag(e.k_n),
                value: e.value,
                k_n: e.k_n,
                seed: args.seed,
                ci_low: lo,
                ci_high: hi,
            }
        })
        .collect();
    let sigma2 = if args.sigma2 {
        let b_n = default_bandwidth(&window, 1.0);
        Some(sigma2_hat(&pattern, &Taper::default(), b_n).map_err(|e| e.to_string())?)
    } else {
        None
    };

    let manifest = RunManifest::new(
        "estimate",
        serde_json::json!({
            "pattern": args.pattern.display().to_string(),
            "n": args.n,
            "kn_ladder": args.kn_ladder,
            "level": args.level,
        }),
        Some(args.seed),
        &[],
    );
    let doc = serde_json::json!({
        "manifest": manifest,
        "estimates": records,
        "sigma2": sigma2,
    });
    let text = serde_json::to_string_pretty(&doc).unwrap();
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => println!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn check(args: CheckArgs) -> Result<ExitCode, String> {
    let kernel = args.model.kernel_config()?;
    let spec = build_spec(&kernel)?;
    let report = spec.check_existence(args.grid);
    let constants =
        approx_constants(spec.lambda(), spec.c_check()).map_err(|e| e.to_string())?;
    let (condition_value, condition_holds) =
        check_condition_amed(spec.lambda(), spec.c_check()).map_err(|e| e.to_string())?;

    println!("kernel family      : {} (d = {})", kernel.family, kernel.d);
    println!("lambda             : {}", spec.lambda());
    println!("R                  : {} (= {} M)", spec.range(), spec.r_fraction());
    println!("M (max range)      : {}", spec.max_range());
    println!("C-check (∫C²)      : {}", spec.c_check());
    println!("sup F(C) on grid   : {}", report.sup_fourier);
    println!("existence          : valid = {}, strict = {}", report.valid, report.strict);
    println!("kappa0             : {}", constants.kappa0);
    println!("kappa1             : {}", constants.kappa1);
    println!("median condition   : value = {condition_value}, holds = {condition_holds}");

    if let Some(path) = &args.out {
        let manifest = RunManifest::new(
            "check",
            serde_json::json!({ "kernel": kernel, "grid": args.grid }),
            None,
            &[path],
        );
        let doc = serde_json::json!({
            "manifest": manifest,
            "existence": report,
            "constants": constants,
            "condition_value": condition_value,
            "condition_holds": condition_holds,
        });
        write_file(path, &serde_json::to_string_pretty(&doc).unwrap())?;
    }
    if !report.valid {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_contamination(args: &ExperimentArgs) -> Result<ContaminationSpec, String> {
    let kind = match args.contamination.as_str() {
        "none" => ContaminationKind::None,
        "add-subsquare" => ContaminationKind::AddSubsquare,
        "delete-subsquare" => ContaminationKind::DeleteSubsquare,
        "add-uniform" => ContaminationKind::AddUniform,
        "delete-uniform" => ContaminationKind::DeleteUniform,
        other => return Err(format!("unknown contamination kind {other:?}")),
    };
    Ok(ContaminationSpec {
        kind,
        rho: args.rho,
        squares: args.squares,
        side_fraction: args.side_fraction,
    })
}

fn experiment(args: ExperimentArgs) -> Result<ExitCode, String> {
    let suite = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("reading {}: {e}", path.display()))?;
            SuiteConfig::from_toml(&text).map_err(|e| e.to_string())?
        }
        None => {
            let kernel = args.model.kernel_config()?;
            SuiteConfig {
                master_seed: args.seed,
                replications: args.reps,
                kn_ladder: args.kn_ladder.clone(),
                truncation: None,
                sigma2: args.sigma2.then(Sigma2Config::default),
                keep_replications: false,
                runs: vec![RunSpec {
                    label: None,
                    model: None,
                    kernel: Some(kernel),
                    n: args.n,
                    lambda: None,
                    contamination: Some(parse_contamination(&args)?),
                    replications: None,
                }],
            }
        }
    };
    let report = run_suite(&suite, args.workers).map_err(|e| e.to_string())?;
    write_file(&args.out, &report.to_csv())?;
    let sidecar = sidecar_path(&args.out);
    let manifest = RunManifest::new(
        "experiment",
        serde_json::to_value(&suite).unwrap(),
        Some(suite.master_seed),
        &[&args.out, &sidecar],
    );
    let doc = serde_json::json!({ "manifest": manifest, "report": report });
    write_file(&sidecar, &serde_json::to_string_pretty(&doc).unwrap())?;
    eprintln!(
        "wrote {} run(s) to {} (sidecar {})",
        report.rows.len(),
        args.out.display(),
        sidecar.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn plotdata(args: PlotdataArgs) -> Result<ExitCode, String> {
    match &args.pattern {
        Some(path) => {
            let window = Window::centred_square(args.n).map_err(|e| e.to_string())?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("reading {}: {e}", path.display()))?;
            let pattern =
                PointPattern::from_csv(&text, window).map_err(|e| e.to_string())?;
            write_file(&args.out, &pattern.to_csv())?;
        }
        None => {
            let kernel = args.model.kernel_config()?;
            let spec = build_spec(&kernel)?;
            if args.points < 2 {
                return Err("--points must be at least 2".into());
            }
            let mut csv = String::from("r,g\n");
            for i in 0..args.points {
                let r = args.r_max * i as f64 / (args.points - 1) as f64;
                let g = spec.pair_correlation(r);
                csv.push_str(&format!("{r},{g}\n"));
            }
            write_file(&args.out, &csv)?;
            let sidecar = sidecar_path(&args.out);
            let manifest = RunManifest::new(
                "plotdata",
                serde_json::json!({
                    "kernel": kernel,
                    "r_max": args.r_max,
                    "points": args.points,
                    "digest": digest(&csv),
                }),
                None,
                &[&args.out, &sidecar],
            );
            let doc = serde_json::json!({ "manifest": manifest });
            write_file(&sidecar, &serde_json::to_string_pretty(&doc).unwrap())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
