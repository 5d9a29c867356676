use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use homsim::catalog::{match_pairs, SourceCatalog};
use homsim::config::RunConfig;
use homsim::fit::{fit_delay_visibility, fit_lifetime, fit_reflectivity, FitResult, LifetimeModel};
use homsim::io::{read_delay_series, read_lifetime_trace, read_reflectivity, write_columns, write_json};
use homsim::overlap::{FilterParams, FilterShape};
use homsim::parallel::Execution;
use homsim::pipeline::{run_pipeline, AnalyticReport};
use homsim::spectral::{intrinsic_visibility, visibility_vs_delay};
use homsim::units::{lifetime_to_rate, Rate, Wavelength};
use homsim::Error;

#[derive(Debug, Parser)]
#[command(
    name = "homsim",
    version,
    about = "Remote-source Hong-Ou-Mandel simulator and estimation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form overlaps and bound of a configured pair.
    Overlap(RunArgs),
    /// Monte-Carlo histograms, visibility estimate and report files.
    Simulate(RunArgs),
    /// Fit a `time_ps, counts` decay trace.
    FitLifetime(FitLifetimeArgs),
    /// Fit a `wavelength_nm, reflectivity` cavity spectrum.
    FitReflectivity(FitReflectivityArgs),
    /// Joint fit of filtered and unfiltered `delay_ns, visibility, sigma_v` series.
    FitDelay(FitDelayArgs),
    /// List cross-sample pairs with overlapping tuning ranges.
    MatchPairs(MatchPairsArgs),
    /// Emit the visibility-versus-delay curve as CSV.
    PredictDelay(PredictDelayArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured number of pulses.
    #[arg(long)]
    pulses: Option<u64>,
    /// Places a Lorentzian filter of this FWHM in front of the interferometer.
    #[arg(long)]
    filter_fwhm_pm: Option<f64>,
    /// Filter center used when the configuration has no filter.
    #[arg(long, default_value_t = 924.847)]
    filter_center_nm: f64,
    /// Worker threads; 1 runs sequentially, 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Mono,
    Fss,
}

#[derive(Debug, Args)]
struct FitLifetimeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelArg::Mono)]
    model: ModelArg,
    /// Known background subtracted by the mono-exponential model.
    #[arg(long, default_value_t = 0.0)]
    background: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitReflectivityArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitDelayArgs {
    #[arg(long)]
    filtered: PathBuf,
    #[arg(long)]
    unfiltered: PathBuf,
    /// Lifetime of the source, fixing γ.
    #[arg(long)]
    t1_ps: f64,
    /// Delay (ns) of an unfiltered point to treat as a possible outlier.
    #[arg(long)]
    outlier: Option<f64>,
    #[arg(long, default_value = "source")]
    label: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MatchPairsArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictDelayArgs {
    #[arg(long)]
    t1_ps: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma_star_ns_inv: f64,
    #[arg(long)]
    delta_omega_ns_inv: f64,
    #[arg(long, default_value_t = 1400.0)]
    tau_c_ns: f64,
    #[arg(long, default_value_t = 5000.0)]
    max_delay_ns: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit status for a library error: 3 for numerical failures, 2 for
/// invalid input.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Truncation { .. } | Error::GridMismatch(_) | Error::RankDeficient { .. } | Error::Estimation(_) => 3,
        _ => 2,
    }
}

fn load_config(args: &RunArgs) -> homsim::Result<RunConfig> {
    let mut cfg = RunConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.outputs = out.clone();
    }
    if let Some(n) = args.pulses {
        cfg.experiment.n_pulses = n;
    }
    if let Some(fwhm_pm) = args.filter_fwhm_pm {
        let center = match &cfg.filter {
            Some(f) => f.center,
            None => Wavelength::new(args.filter_center_nm)?,
        };
        cfg.filter = Some(FilterParams {
            center,
            fwhm_pm,
            shape: FilterShape::Lorentzian,
        });
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>, file: &str) -> homsim::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        write_json(&dir.join(file), value)?;
    }
    Ok(())
}

/// Prints a fit and fails with a numerical error if it did not converge.
fn emit_fit(fit: &FitResult, out: Option<&Path>, file: &str) -> homsim::Result<()> {
    emit_json(fit, out, file)?;
    if fit.converged {
        Ok(())
    } else {
        Err(Error::Estimation(format!("fit did not converge: {}", fit.message)))
    }
}

fn run(cli: Cli) -> homsim::Result<()> {
    match cli.command {
        Command::Overlap(args) => {
            let cfg = load_config(&args)?;
            let pair = cfg.source_pair()?;
            let report = AnalyticReport::new(&pair, cfg.pair.individual_m)?;
            let value = serde_json::json!({ "config_hash": cfg.hash(), "overlap": report });
            emit_json(&value, args.out.as_deref(), "overlap.json")
        }
        Command::Simulate(args) => {
            let cfg = load_config(&args)?;
            let report = run_pipeline(&cfg, Execution::with_workers(args.workers))?;
            log::info!("wrote {} files to {}", report.files.len(), cfg.outputs.display());
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::FitLifetime(args) => {
            let trace = read_lifetime_trace(&args.input, args.background)?;
            let model = match args.model {
                ModelArg::Mono => LifetimeModel::MonoExp,
                ModelArg::Fss => LifetimeModel::FssBeating,
            };
            emit_fit(&fit_lifetime(&trace, model)?, args.out.as_deref(), "fit_lifetime.json")
        }
        Command::FitReflectivity(args) => {
            let spectrum = read_reflectivity(&args.input)?;
            emit_fit(
                &fit_reflectivity(&spectrum)?,
                args.out.as_deref(),
                "fit_reflectivity.json",
            )
        }
        Command::FitDelay(args) => {
            let filtered = read_delay_series(&args.filtered, &args.label, true)?;
            let mut unfiltered = read_delay_series(&args.unfiltered, &args.label, false)?;
            if let Some(d) = args.outlier {
                unfiltered.flag_outlier(d)?;
            }
            let fit = fit_delay_visibility(&filtered, &unfiltered, lifetime_to_rate(args.t1_ps)?)?;
            emit_fit(&fit, args.out.as_deref(), "fit_delay.json")
        }
        Command::MatchPairs(args) => {
            let text = std::fs::read_to_string(&args.config).map_err(|e| Error::Io {
                path: args.config.clone(),
                source: e,
            })?;
            let catalog: SourceCatalog = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            emit_json(&match_pairs(&catalog)?, args.out.as_deref(), "pairs.json")
        }
        Command::PredictDelay(args) => {
            if args.points < 2 || args.max_delay_ns.is_nan() || args.max_delay_ns <= 0.0 {
                return Err(Error::Config(
                    "need at least 2 points and a positive maximum delay".into(),
                ));
            }
            let gamma = lifetime_to_rate(args.t1_ps)?;
            let gamma_star = Rate::new(args.gamma_star_ns_inv)?;
            let v0 = intrinsic_visibility(gamma, gamma_star)?;
            let ratio = args.delta_omega_ns_inv / (gamma.value() + gamma_star.value());
            let delays: Vec<f64> = (0..args.points)
                .map(|i| args.max_delay_ns * i as f64 / (args.points - 1) as f64)
                .collect();
            let vis = delays
                .iter()
                .map(|&d| visibility_vs_delay(v0, ratio, args.tau_c_ns, d))
                .collect::<homsim::Result<Vec<f64>>>()?;
            match &args.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
                        path: dir.clone(),
                        source: e,
                    })?;
                    write_columns(
                        &dir.join("delay_curve.csv"),
                        &[("delay_ns", &delays), ("visibility", &vis)],
                        None,
                    )
                }
                None => {
                    println!("delay_ns,visibility");
                    for (d, v) in delays.iter().zip(&vis) {
                        println!("{d},{v}");
                    }
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
