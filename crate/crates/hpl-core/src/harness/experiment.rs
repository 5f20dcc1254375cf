//! Seeded Monte Carlo execution over SNR sweeps and precoding strategies.
//!
//! Every strategy is evaluated on the same channel realization within a
//! trial (paired comparison), and each trial draws its randomness from
//! streams derived from the root seed and the trial index, so output is
//! bit-identical across runs and worker counts.

use std::sync::Mutex;

use crate::channel::{
    channel_with_angles, generate_angle_sets, sample_covariance, ArrayGeometry,
    ChannelRealization, CovarianceEstimate,
};
use crate::digital_design::{
    effective_channel, fully_digital_wmmse, r_wmmse, zf_combiner_init, zf_precoder,
};
use crate::precoding::{sum_se, HybridPrecoder, RfPrecoder, SnrPoint};
use crate::rf_design::{
    covariance_basis, dynamic_subarray_rf, fixed_subarray_rf, left_singular_basis,
    rf_from_channel_phases, rf_from_covariance, rf_from_left_singular,
};
use crate::rng::{stream_rng, StreamKind};
use crate::{Error, Result};

use super::config::{Strategy, SystemConfig};

/// Aggregated statistics for one (strategy, SNR) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub strategy: Strategy,
    pub snr_db: f64,
    pub mean_sum_se: f64,
    pub std_sum_se: f64,
    pub trials: usize,
    pub mean_build_seconds: f64,
}

/// Full result of one experiment run: per-cell statistics in deterministic
/// order (strategy list order, then ascending SNR), plus the config echo.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: SystemConfig,
    pub software_version: String,
    pub cells: Vec<CellStats>,
}

impl ExperimentResult {
    pub fn cell(&self, strategy: Strategy, snr_db: f64) -> Option<&CellStats> {
        self.cells
            .iter()
            .find(|c| c.strategy == strategy && c.snr_db == snr_db)
    }
}

/// Build the power-normalized hybrid precoder for one strategy at one SNR
/// operating point. Covariance-based strategies read `cov`; the rest use
/// the instantaneous channel.
pub fn strategy_build(
    strategy: Strategy,
    channel: &ChannelRealization,
    cov: Option<&CovarianceEstimate>,
    config: &SystemConfig,
    snr: &SnrPoint,
) -> Result<HybridPrecoder> {
    let n_rf = config.num_rf_chains;
    let need_cov = || {
        cov.ok_or_else(|| {
            Error::Config(format!(
                "strategy {strategy} needs a covariance estimate but none was provided"
            ))
        })
    };
    match strategy {
        Strategy::FullyDigitalWmmse => {
            fully_digital_wmmse(channel, snr, config.t_max, config.epsilon)
        }
        Strategy::ZfFullyDigital => {
            let rf = RfPrecoder::identity(channel.num_antennas());
            let eff = effective_channel(&rf, channel)?;
            let digital = zf_precoder(&eff)?;
            HybridPrecoder::normalized(rf, digital)
        }
        Strategy::ProposedFc => {
            let basis = left_singular_basis(channel, n_rf)?;
            let rf = rf_from_left_singular(&basis);
            wmmse_digital_stage(rf, channel, config, snr)
        }
        Strategy::ProposedFixed => {
            let basis = left_singular_basis(channel, n_rf)?;
            let rf = fixed_subarray_rf(&basis, n_rf)?;
            wmmse_digital_stage(rf, channel, config, snr)
        }
        Strategy::ProposedDynamic => {
            let basis = left_singular_basis(channel, n_rf)?;
            let rf = dynamic_subarray_rf(&basis, n_rf)?;
            wmmse_digital_stage(rf, channel, config, snr)
        }
        Strategy::ProposedCovFc => {
            let rf = rf_from_covariance(need_cov()?, n_rf)?;
            wmmse_digital_stage(rf, channel, config, snr)
        }
        Strategy::ProposedCovFixed => {
            let basis = covariance_basis(need_cov()?, n_rf)?;
            let rf = fixed_subarray_rf(&basis, n_rf)?;
            wmmse_digital_stage(rf, channel, config, snr)
        }
        Strategy::ProposedCovDynamic => {
            let basis = covariance_basis(need_cov()?, n_rf)?;
            let rf = dynamic_subarray_rf(&basis, n_rf)?;
            wmmse_digital_stage(rf, channel, config, snr)
        }
        Strategy::ArgHRfBaseline => {
            // Channel-phase baseline: keep the fully-digital combiner W as
            // the baseband stage behind F_RF = exp(j arg(H)), leaning on
            // exp(j arg(H)) * W approximating H * W. The combiner is not
            // re-optimized for the effective channel.
            let rf = rf_from_channel_phases(channel, n_rf)?;
            let eff_fd = EffectiveChannel::from_matrix(channel.matrix().clone());
            let init = zf_combiner_init(&eff_fd)?;
            let (_, state) = r_wmmse(&eff_fd, snr, &init, config.t_max, config.epsilon)?;
            HybridPrecoder::normalized(rf, DigitalPrecoder::new(state.combiner))
        }
    }
}

/// Shared digital stage of the hybrid pipeline: effective channel, ZF-seeded
/// R-WMMSE, joint power normalization.
fn wmmse_digital_stage(
    rf: RfPrecoder,
    channel: &ChannelRealization,
    config: &SystemConfig,
    snr: &SnrPoint,
) -> Result<HybridPrecoder> {
    let eff = effective_channel(&rf, channel)?;
    let init = zf_combiner_init(&eff)?;
    let (digital, _) = r_wmmse(&eff, snr, &init, config.t_max, config.epsilon)?;
    HybridPrecoder::normalized(rf, digital)
}

// `std::time::Instant` traps on wasm32-unknown-unknown; the browser demo
// does not need timings, so the stopwatch degrades to zero there.
#[cfg(not(target_arch = "wasm32"))]
mod clock {
    pub struct Stopwatch(std::time::Instant);

    impl Stopwatch {
        pub fn start() -> Self {
            Self(std::time::Instant::now())
        }

        pub fn elapsed_seconds(&self) -> f64 {
            self.0.elapsed().as_secs_f64()
        }
    }
}

#[cfg(target_arch = "wasm32")]
mod clock {
    pub struct Stopwatch;

    impl Stopwatch {
        pub fn start() -> Self {
            Stopwatch
        }

        pub fn elapsed_seconds(&self) -> f64 {
            0.0
        }
    }
}

use clock::Stopwatch;

struct TrialOutcome {
    /// `[strategy][snr]` sum SE on this trial's channel.
    sum_se: Vec<Vec<f64>>,
    /// `[strategy][snr]` wall-clock seconds to build the precoder.
    build_seconds: Vec<Vec<f64>>,
}

fn run_trial(config: &SystemConfig, snr_points: &[SnrPoint], trial: usize) -> Result<TrialOutcome> {
    let geometry = ArrayGeometry::new(config.num_antennas, config.spacing_ratio)?;
    let t = trial as u64;

    let mut angle_rng = stream_rng(config.root_seed, StreamKind::TrialAngles, &[t]);
    let angles = generate_angle_sets(config.num_users, config.num_paths, &mut angle_rng);

    let mut gain_rng = stream_rng(config.root_seed, StreamKind::TrialGains, &[t]);
    let channel = channel_with_angles(geometry, &angles, &mut gain_rng)?;

    // Covariance samples share the trial's angles (slow timescale) but
    // redraw gains per sample.
    let cov = if config.strategies.iter().any(|s| s.is_covariance_based()) {
        let t_s = config.covariance_samples.ok_or_else(|| {
            Error::Config("covariance strategies need covariance_samples".into())
        })?;
        let samples = (0..t_s)
            .map(|i| {
                let mut rng =
                    stream_rng(config.root_seed, StreamKind::CovarianceGains, &[t, i as u64]);
                channel_with_angles(geometry, &angles, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Some(sample_covariance(&samples)?)
    } else {
        None
    };

    let mut sum_se_grid = Vec::with_capacity(config.strategies.len());
    let mut build_grid = Vec::with_capacity(config.strategies.len());
    for &strategy in &config.strategies {
        let mut se_row = Vec::with_capacity(snr_points.len());
        let mut build_row = Vec::with_capacity(snr_points.len());
        for snr in snr_points {
            let watch = Stopwatch::start();
            let precoder = strategy_build(strategy, &channel, cov.as_ref(), config, snr)?;
            build_row.push(watch.elapsed_seconds());
            se_row.push(sum_se(&channel, &precoder, snr)?);
        }
        sum_se_grid.push(se_row);
        build_grid.push(build_row);
    }
    log::debug!("trial {trial} complete");
    Ok(TrialOutcome {
        sum_se: sum_se_grid,
        build_seconds: build_grid,
    })
}

/// Run the configured experiment with `threads` workers.
///
/// Trials are distributed across workers but aggregated strictly in trial
/// order, so the result (timing aside) is a pure function of the config.
pub fn run_experiment(config: &SystemConfig, threads: usize) -> Result<ExperimentResult> {
    config.validate()?;
    let mut snr_db_sorted = config.snr_grid_db.clone();
    snr_db_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let snr_points: Vec<SnrPoint> = snr_db_sorted
        .iter()
        .map(|&db| SnrPoint::from_snr_db(db))
        .collect();

    let trials = config.num_trials;
    log::info!(
        "running {} trials x {} strategies x {} SNR points on {} thread(s)",
        trials,
        config.strategies.len(),
        snr_points.len(),
        threads.max(1)
    );

    let outcomes: Vec<TrialOutcome> = if threads <= 1 {
        let mut v = Vec::with_capacity(trials);
        for t in 0..trials {
            v.push(run_trial(config, &snr_points, t)?);
        }
        v
    } else {
        let slots: Mutex<Vec<Option<Result<TrialOutcome>>>> =
            Mutex::new((0..trials).map(|_| None).collect());
        std::thread::scope(|scope| {
            for worker in 0..threads.min(trials) {
                let slots = &slots;
                let snr_points = &snr_points;
                scope.spawn(move || {
                    let mut t = worker;
                    while t < trials {
                        let outcome = run_trial(config, snr_points, t);
                        slots.lock().unwrap()[t] = Some(outcome);
                        t += threads;
                    }
                });
            }
        });
        let collected = slots.into_inner().unwrap();
        let mut v = Vec::with_capacity(trials);
        for (t, slot) in collected.into_iter().enumerate() {
            v.push(slot.unwrap_or_else(|| {
                Err(Error::Numerical(format!("trial {t} never completed")))
            })?);
        }
        v
    };

    // Aggregate in trial order: identical float summation order regardless
    // of the worker count.
    let mut cells = Vec::with_capacity(config.strategies.len() * snr_points.len());
    for (s, &strategy) in config.strategies.iter().enumerate() {
        for (p, &snr_db) in snr_db_sorted.iter().enumerate() {
            let values: Vec<f64> = outcomes.iter().map(|o| o.sum_se[s][p]).collect();
            let builds: Vec<f64> = outcomes.iter().map(|o| o.build_seconds[s][p]).collect();
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let std = if values.len() > 1 {
                (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let mean_build = builds.iter().sum::<f64>() / n;
            cells.push(CellStats {
                strategy,
                snr_db,
                mean_sum_se: mean,
                std_sum_se: std,
                trials: values.len(),
                mean_build_seconds: mean_build,
            });
        }
    }
    log::info!("experiment finished ({} cells)", cells.len());

    let mut config_echo = config.clone();
    config_echo.snr_grid_db = snr_db_sorted;
    Ok(ExperimentResult {
        config: config_echo,
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_channel;
    use crate::precoding::validate_rf;
    use crate::rf_design::left_singular_basis;

    fn small_config() -> SystemConfig {
        SystemConfig {
            num_antennas: 8,
            num_users: 2,
            num_rf_chains: 2,
            num_paths: 2,
            snr_grid_db: vec![0.0, 10.0],
            num_trials: 4,
            root_seed: 7,
            strategies: vec![
                Strategy::FullyDigitalWmmse,
                Strategy::ProposedFc,
                Strategy::ProposedDynamic,
                Strategy::ProposedFixed,
                Strategy::ArgHRfBaseline,
                Strategy::ZfFullyDigital,
            ],
            ..SystemConfig::default()
        }
    }

    #[test]
    fn single_user_single_trial_matches_mrt_oracle() {
        let config = SystemConfig {
            num_antennas: 8,
            num_users: 1,
            num_rf_chains: 1,
            num_paths: 3,
            snr_grid_db: vec![10.0],
            num_trials: 1,
            root_seed: 3,
            strategies: vec![Strategy::FullyDigitalWmmse],
            ..SystemConfig::default()
        };
        let result = run_experiment(&config, 1).unwrap();
        // Reconstruct the same channel and evaluate the closed form.
        let geometry = ArrayGeometry::new(8, 0.5).unwrap();
        let mut angle_rng = stream_rng(3, StreamKind::TrialAngles, &[0]);
        let angles = generate_angle_sets(1, 3, &mut angle_rng);
        let mut gain_rng = stream_rng(3, StreamKind::TrialGains, &[0]);
        let channel = channel_with_angles(geometry, &angles, &mut gain_rng).unwrap();
        let snr = SnrPoint::from_snr_db(10.0);
        let expected =
            (1.0 + channel.user_channel(0).norm_squared() / snr.noise_over_power()).log2();
        let got = result.cells[0].mean_sum_se;
        assert!((got - expected).abs() < 1e-6, "{got} vs {expected}");
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let config = small_config();
        let a = run_experiment(&config, 1).unwrap();
        let b = run_experiment(&config, 4).unwrap();
        assert_eq!(a.cells.len(), b.cells.len());
        for (ca, cb) in a.cells.iter().zip(&b.cells) {
            assert_eq!(ca.strategy, cb.strategy);
            assert_eq!(ca.snr_db, cb.snr_db);
            assert_eq!(ca.mean_sum_se.to_bits(), cb.mean_sum_se.to_bits());
            assert_eq!(ca.std_sum_se.to_bits(), cb.std_sum_se.to_bits());
            assert_eq!(ca.trials, cb.trials);
        }
    }

    #[test]
    fn cells_ordered_strategy_major_then_snr_ascending() {
        let mut config = small_config();
        config.snr_grid_db = vec![10.0, 0.0]; // unsorted on purpose
        let result = run_experiment(&config, 1).unwrap();
        assert_eq!(result.cells.len(), 12);
        for (i, cell) in result.cells.iter().enumerate() {
            assert_eq!(cell.strategy, config.strategies[i / 2]);
            assert_eq!(cell.snr_db, [0.0, 10.0][i % 2]);
            assert_eq!(cell.trials, 4);
            assert!(cell.mean_sum_se >= 0.0);
        }
    }

    #[test]
    fn invalid_config_fails_before_compute() {
        let mut config = small_config();
        config.strategies.push(Strategy::ProposedCovFc); // no covariance_samples
        assert!(matches!(run_experiment(&config, 1), Err(Error::Config(_))));
    }

    #[test]
    fn covariance_strategies_run_end_to_end() {
        let config = SystemConfig {
            num_antennas: 16,
            num_users: 2,
            num_rf_chains: 4,
            num_paths: 2,
            snr_grid_db: vec![10.0],
            num_trials: 2,
            root_seed: 11,
            covariance_samples: Some(20),
            strategies: vec![
                Strategy::ProposedCovFc,
                Strategy::ProposedCovFixed,
                Strategy::ProposedCovDynamic,
            ],
            ..SystemConfig::default()
        };
        let result = run_experiment(&config, 1).unwrap();
        for cell in &result.cells {
            assert!(cell.mean_sum_se > 0.0);
        }
    }

    #[test]
    fn strategy_build_contracts_hold() {
        let mut rng = stream_rng(13, StreamKind::Aux, &[50]);
        let geometry = ArrayGeometry::new(8, 0.5).unwrap();
        let channel = generate_channel(geometry, 2, 2, &mut rng).unwrap();
        let config = small_config();
        let snr = SnrPoint::from_snr_db(10.0);
        for strategy in [
            Strategy::ProposedFc,
            Strategy::ProposedFixed,
            Strategy::ProposedDynamic,
            Strategy::ArgHRfBaseline,
        ] {
            let precoder = strategy_build(strategy, &channel, None, &config, &snr).unwrap();
            let report = validate_rf(precoder.rf());
            assert!(
                report.is_structurally_valid(1e-12),
                "{strategy}: {report:?}"
            );
            assert!((precoder.composite_power() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dynamic_strategy_partition_matches_direct_greedy() {
        let mut rng = stream_rng(14, StreamKind::Aux, &[51]);
        let geometry = ArrayGeometry::new(8, 0.5).unwrap();
        let channel = generate_channel(geometry, 2, 2, &mut rng).unwrap();
        let config = small_config();
        let snr = SnrPoint::from_snr_db(5.0);
        let precoder =
            strategy_build(Strategy::ProposedDynamic, &channel, None, &config, &snr).unwrap();
        let basis = left_singular_basis(&channel, 2).unwrap();
        let direct = dynamic_subarray_rf(&basis, 2).unwrap();
        assert_eq!(precoder.rf().partition(), direct.partition());
    }

    #[test]
    fn zf_equals_wmmse_on_orthogonal_channels() {
        use crate::channel::{ChannelRealization, PathSet};
        use crate::C64;
        // DFT-direction single-path users: exactly orthogonal, equal norms.
        let n = 8;
        let geometry = ArrayGeometry::new(n, 0.5).unwrap();
        let paths: Vec<PathSet> = [0.0f64, 0.25, 0.5]
            .iter()
            .map(|&s| PathSet::new(vec![C64::new(1.0, 0.0)], vec![s.asin()]).unwrap())
            .collect();
        let channel = ChannelRealization::from_paths(geometry, paths).unwrap();
        let config = SystemConfig {
            num_antennas: n,
            num_users: 3,
            num_rf_chains: 3,
            num_paths: 1,
            t_max: 200,
            epsilon: 1e-9,
            ..SystemConfig::default()
        };
        for db in [-5.0, 10.0] {
            let snr = SnrPoint::from_snr_db(db);
            let zf =
                strategy_build(Strategy::ZfFullyDigital, &channel, None, &config, &snr).unwrap();
            let wmmse =
                strategy_build(Strategy::FullyDigitalWmmse, &channel, None, &config, &snr)
                    .unwrap();
            let zf_se = sum_se(&channel, &zf, &snr).unwrap();
            let wmmse_se = sum_se(&channel, &wmmse, &snr).unwrap();
            assert!(
                (zf_se - wmmse_se).abs() < 1e-6,
                "{db} dB: ZF {zf_se} vs WMMSE {wmmse_se}"
            );
        }
    }
}
