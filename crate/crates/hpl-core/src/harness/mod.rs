//! Monte Carlo experiment harness: configuration, seeded SNR-sweep
//! execution over precoding strategies, and CSV emission.

mod config;
mod csv;
mod experiment;

pub use config::{Strategy, SystemConfig};
pub use csv::{emit_csv, parse_csv, write_csv, CsvRow};
pub use experiment::{run_experiment, strategy_build, CellStats, ExperimentResult};
