//! Temporary empirics probe; removed before delivery.

use hpl_core::channel::{channel_with_angles, generate_angle_sets, ArrayGeometry};
use hpl_core::harness::{strategy_build, Strategy, SystemConfig};
use hpl_core::precoding::{sum_se, SnrPoint};
use hpl_core::rng::{stream_rng, StreamKind};

#[test]
#[ignore]
fn probe_orderings() {
    let seed: u64 = std::env::var("PROBE_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(2024);
    let trials: usize = std::env::var("PROBE_TRIALS").ok().and_then(|s| s.parse().ok()).unwrap_or(150);
    let config = SystemConfig {
        num_antennas: 32,
        num_users: 4,
        num_rf_chains: 4,
        num_paths: 4,
        num_trials: trials,
        root_seed: seed,
        strategies: vec![],
        ..SystemConfig::default()
    };
    let geometry = ArrayGeometry::new(32, 0.5).unwrap();
    let snrs = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0];
    let strategies = [
        Strategy::FullyDigitalWmmse,
        Strategy::ProposedFc,
        Strategy::ProposedDynamic,
        Strategy::ProposedFixed,
        Strategy::ArgHRfBaseline,
    ];
    // per snr, per strategy, per trial
    let mut se = vec![vec![vec![0.0f64; trials]; strategies.len()]; snrs.len()];
    for t in 0..trials {
        let mut angle_rng = stream_rng(config.root_seed, StreamKind::TrialAngles, &[t as u64]);
        let angles = generate_angle_sets(4, 4, &mut angle_rng);
        let mut gain_rng = stream_rng(config.root_seed, StreamKind::TrialGains, &[t as u64]);
        let channel = channel_with_angles(geometry, &angles, &mut gain_rng).unwrap();
        for (p, &db) in snrs.iter().enumerate() {
            let snr = SnrPoint::from_snr_db(db);
            for (s, &strategy) in strategies.iter().enumerate() {
                let precoder = strategy_build(strategy, &channel, None, &config, &snr).unwrap();
                se[p][s][t] = sum_se(&channel, &precoder, &snr).unwrap();
            }
        }
    }
    for (p, &db) in snrs.iter().enumerate() {
        let mean = |s: usize| se[p][s].iter().sum::<f64>() / trials as f64;
        let wins = |a: usize, b: usize| {
            se[p][a]
                .iter()
                .zip(&se[p][b])
                .filter(|(x, y)| x > y)
                .count()
        };
        println!(
            "SNR {db:>5}: FD {:.3} FC {:.3} DYN {:.3} FIX {:.3} ARGH {:.3} | wins fd>fc {}/{} fc>dyn {}/{} dyn>fix {}/{} fc>argh {}/{} | fc/fd {:.4}",
            mean(0), mean(1), mean(2), mean(3), mean(4),
            wins(0, 1), trials, wins(1, 2), trials, wins(2, 3), trials, wins(1, 4), trials,
            mean(1) / mean(0)
        );
    }
}
