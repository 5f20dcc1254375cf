//! `hpl` — command-line runner for the hybrid precoding simulator.
//!
//! Subcommands:
//! * `run`      — execute an experiment config, write the CSV;
//! * `sweep`    — like `run` with the SNR grid overridden by `a:step:b`;
//! * `validate` — check a config and run a one-trial smoke test with
//!   RF-precoder diagnostics and the WMMSE convergence trace;
//! * `version`  — print the version.
//!
//! Exit codes: 0 success, 1 configuration/usage error, 2 runtime or
//! numerical error. `HPL_LOG` (`quiet`, `info`, `debug`) controls
//! diagnostics on stderr.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use hpl_core::channel::{channel_with_angles, generate_angle_sets, sample_covariance, ArrayGeometry};
use hpl_core::digital_design::{effective_channel, r_wmmse, zf_combiner_init};
use hpl_core::harness::{emit_csv, run_experiment, strategy_build, SystemConfig};
use hpl_core::precoding::{sum_se, validate_rf, SnrPoint};
use hpl_core::rng::{stream_rng, StreamKind};
use hpl_core::Error;

const EXIT_OK: i32 = 0;
const EXIT_CONFIG: i32 = 1;
const EXIT_RUNTIME: i32 = 2;

#[derive(Parser)]
#[command(
    name = "hpl",
    version,
    about = "Hybrid precoding link-level simulator",
    disable_version_flag = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment described by a config file and write a CSV.
    Run {
        /// Path to the `key = value` config file.
        #[arg(long)]
        config: PathBuf,
        /// Destination CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for trial-level parallelism.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Override the config's root_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run with the config's SNR grid replaced by `a:step:b` (dB, inclusive).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// SNR grid override, e.g. `-10:5:20`.
        #[arg(long = "snr-db", allow_hyphen_values = true)]
        snr_db: String,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Validate a config and run a one-trial smoke check with diagnostics.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the version.
    Version,
}

fn init_logging() {
    let level = match std::env::var("HPL_LOG").ok().as_deref() {
        None => log::LevelFilter::Info,
        Some("quiet") => log::LevelFilter::Off,
        Some("info") => log::LevelFilter::Info,
        Some("debug") => log::LevelFilter::Debug,
        Some(other) => {
            eprintln!("hpl: unknown HPL_LOG value '{other}', expected quiet|info|debug; using info");
            log::LevelFilter::Info
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

/// Entry point shared by the binary and the integration tests.
pub fn cli_main(args: Vec<String>) -> i32 {
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    EXIT_OK
                }
                _ => {
                    eprint!("{e}");
                    EXIT_CONFIG
                }
            };
        }
    };

    let outcome = match cli.command {
        Command::Version => {
            println!("hpl {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
        Command::Run {
            config,
            out,
            threads,
            seed,
        } => cmd_run(&config, &out, threads, seed, None),
        Command::Sweep {
            config,
            out,
            snr_db,
            threads,
            seed,
        } => cmd_run(&config, &out, threads, seed, Some(&snr_db)),
        Command::Validate { config, seed } => cmd_validate(&config, seed),
    };

    match outcome {
        Ok(()) => EXIT_OK,
        Err(CliError { code, message }) => {
            eprintln!("hpl: {message}");
            code
        }
    }
}

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

fn load_config(
    path: &std::path::Path,
    seed: Option<u64>,
    snr_override: Option<&str>,
) -> Result<SystemConfig, CliError> {
    let mut config =
        SystemConfig::parse_file(path).map_err(|e| CliError::config(e.to_string()))?;
    if let Some(seed) = seed {
        config.root_seed = seed;
    }
    if let Some(spec) = snr_override {
        config.snr_grid_db = parse_snr_range(spec)?;
    }
    config
        .validate()
        .map_err(|e| CliError::config(e.to_string()))?;
    Ok(config)
}

/// Parse `a:step:b` into an inclusive dB grid.
fn parse_snr_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::config(format!(
            "--snr-db expects 'a:step:b', got '{spec}'"
        )));
    }
    let parse = |s: &str| -> Result<f64, CliError> {
        s.trim()
            .parse()
            .map_err(|e| CliError::config(format!("--snr-db: bad number '{s}' ({e})")))
    };
    let (a, step, b) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
    if !(step > 0.0) {
        return Err(CliError::config(format!(
            "--snr-db: step must be positive, got {step}"
        )));
    }
    if b < a {
        return Err(CliError::config(format!(
            "--snr-db: end {b} is below start {a}"
        )));
    }
    let mut grid = Vec::new();
    let mut i = 0u32;
    loop {
        let v = a + step * f64::from(i);
        if v > b + 1e-9 {
            break;
        }
        grid.push(v);
        i += 1;
    }
    Ok(grid)
}

fn cmd_run(
    config_path: &std::path::Path,
    out: &std::path::Path,
    threads: usize,
    seed: Option<u64>,
    snr_override: Option<&str>,
) -> Result<(), CliError> {
    let config = load_config(config_path, seed, snr_override)?;
    let threads = threads.max(1);
    let result =
        run_experiment(&config, threads).map_err(|e| CliError::runtime(e.to_string()))?;
    emit_csv(&result, out).map_err(|e| CliError::runtime(e.to_string()))?;
    println!(
        "wrote {} ({} strategies x {} SNR points, {} trials)",
        out.display(),
        config.strategies.len(),
        result.config.snr_grid_db.len(),
        config.num_trials
    );
    Ok(())
}

fn cmd_validate(config_path: &std::path::Path, seed: Option<u64>) -> Result<(), CliError> {
    let config = load_config(config_path, seed, None)?;
    println!("config ok: {}", config_path.display());
    print!("{}", config.serialize());

    // One smoke trial on the first configured SNR point.
    let geometry = ArrayGeometry::new(config.num_antennas, config.spacing_ratio)
        .map_err(|e| CliError::config(e.to_string()))?;
    let mut angle_rng = stream_rng(config.root_seed, StreamKind::TrialAngles, &[0]);
    let angles = generate_angle_sets(config.num_users, config.num_paths, &mut angle_rng);
    let mut gain_rng = stream_rng(config.root_seed, StreamKind::TrialGains, &[0]);
    let channel = channel_with_angles(geometry, &angles, &mut gain_rng)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    let cov = if config.strategies.iter().any(|s| s.is_covariance_based()) {
        let t_s = config.covariance_samples.unwrap_or(1);
        let samples: Result<Vec<_>, Error> = (0..t_s)
            .map(|i| {
                let mut rng =
                    stream_rng(config.root_seed, StreamKind::CovarianceGains, &[0, i as u64]);
                channel_with_angles(geometry, &angles, &mut rng)
            })
            .collect();
        let samples = samples.map_err(|e| CliError::runtime(e.to_string()))?;
        Some(sample_covariance(&samples).map_err(|e| CliError::runtime(e.to_string()))?)
    } else {
        None
    };

    let snr_db = config.snr_grid_db.first().copied().unwrap_or(10.0);
    let snr = SnrPoint::from_snr_db(snr_db);
    println!("smoke trial: seed {}, SNR {snr_db} dB", config.root_seed);
    for &strategy in &config.strategies {
        let precoder = strategy_build(strategy, &channel, cov.as_ref(), &config, &snr)
            .map_err(|e| CliError::runtime(format!("{strategy}: {e}")))?;
        let report = validate_rf(precoder.rf());
        let se = sum_se(&channel, &precoder, &snr)
            .map_err(|e| CliError::runtime(format!("{strategy}: {e}")))?;
        println!(
            "  {strategy}: sum SE {se:.4} b/s/Hz | unit-modulus dev {:.2e} | \
             off-support {:.2e} | partition issues {} | semi-unitarity dev {}",
            report.max_unit_modulus_deviation,
            report.max_off_support_magnitude,
            report.uncovered_antennas + report.overlapping_antennas + report.missized_subsets,
            report
                .semi_unitarity_deviation
                .map(|d| format!("{d:.3e}"))
                .unwrap_or_else(|| "-".into()),
        );
    }

    // WMMSE convergence trace on the fully-digital effective channel.
    let rf = hpl_core::precoding::RfPrecoder::identity(config.num_antennas);
    let eff = effective_channel(&rf, &channel).map_err(|e| CliError::runtime(e.to_string()))?;
    let init = zf_combiner_init(&eff).map_err(|e| CliError::runtime(e.to_string()))?;
    let (_, state) = r_wmmse(&eff, &snr, &init, config.t_max, config.epsilon)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    println!(
        "WMMSE convergence: {} iteration(s), converged = {}, last relative change {:.3e}",
        state.iterations, state.converged, state.last_relative_change
    );
    let trace: Vec<String> = state
        .objective_trace
        .iter()
        .map(|v| format!("{v:.4}"))
        .collect();
    println!("  sum-SE trace: {}", trace.join(" -> "));
    Ok(())
}
