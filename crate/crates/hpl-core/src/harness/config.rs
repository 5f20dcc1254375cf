//! Experiment configuration: a flat `key = value` text format with `#`
//! comments and comma-separated lists, parseable from any language.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Precoding strategies the harness can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// WMMSE with one RF chain per antenna; the SE upper bound.
    FullyDigitalWmmse,
    /// Left-singular-basis phase extraction, fully connected.
    ProposedFc,
    /// Left-singular-basis phases on the sequential antenna partition.
    ProposedFixed,
    /// Left-singular-basis phases on the greedy dynamic partition.
    ProposedDynamic,
    /// Covariance-eigenvector phase extraction, fully connected.
    ProposedCovFc,
    /// Covariance basis on the sequential antenna partition.
    ProposedCovFixed,
    /// Covariance basis on the greedy dynamic partition.
    ProposedCovDynamic,
    /// Channel-entry phase extraction baseline (needs `N_RF = K`).
    ArgHRfBaseline,
    /// Zero-forcing with one RF chain per antenna.
    ZfFullyDigital,
}

impl Strategy {
    pub const ALL: [Strategy; 9] = [
        Strategy::FullyDigitalWmmse,
        Strategy::ProposedFc,
        Strategy::ProposedFixed,
        Strategy::ProposedDynamic,
        Strategy::ProposedCovFc,
        Strategy::ProposedCovFixed,
        Strategy::ProposedCovDynamic,
        Strategy::ArgHRfBaseline,
        Strategy::ZfFullyDigital,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::FullyDigitalWmmse => "fully-digital-wmmse",
            Strategy::ProposedFc => "proposed-fc",
            Strategy::ProposedFixed => "proposed-fixed",
            Strategy::ProposedDynamic => "proposed-dynamic",
            Strategy::ProposedCovFc => "proposed-cov-fc",
            Strategy::ProposedCovFixed => "proposed-cov-fixed",
            Strategy::ProposedCovDynamic => "proposed-cov-dynamic",
            Strategy::ArgHRfBaseline => "argH-rf-baseline",
            Strategy::ZfFullyDigital => "zf-fully-digital",
        }
    }

    /// True for strategies whose RF stage is designed from the channel
    /// covariance rather than the instantaneous realization.
    pub fn is_covariance_based(self) -> bool {
        matches!(
            self,
            Strategy::ProposedCovFc | Strategy::ProposedCovFixed | Strategy::ProposedCovDynamic
        )
    }

    /// True for partially-connected (subarray) architectures.
    pub fn is_subarray(self) -> bool {
        matches!(
            self,
            Strategy::ProposedFixed
                | Strategy::ProposedDynamic
                | Strategy::ProposedCovFixed
                | Strategy::ProposedCovDynamic
        )
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .iter()
            .copied()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown strategy '{s}' (expected one of: {})",
                    Strategy::ALL.map(|st| st.name()).join(", ")
                ))
            })
    }
}

/// All scalar parameters of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Base-station antenna count `N`.
    pub num_antennas: usize,
    /// Single-antenna user count `K`.
    pub num_users: usize,
    /// RF chain count `N_RF`.
    pub num_rf_chains: usize,
    /// Propagation paths per user `L`.
    pub num_paths: usize,
    /// Antenna spacing over wavelength, `d / lambda`.
    pub spacing_ratio: f64,
    /// SNR sweep points in dB.
    pub snr_grid_db: Vec<f64>,
    /// Monte Carlo trials per cell.
    pub num_trials: usize,
    /// Root seed; all per-trial streams derive from it.
    pub root_seed: u64,
    /// WMMSE iteration cap.
    pub t_max: usize,
    /// WMMSE relative-change stopping threshold.
    pub epsilon: f64,
    /// Strategies to evaluate, in output order.
    pub strategies: Vec<Strategy>,
    /// Covariance sample count `T_s` (required by covariance strategies).
    pub covariance_samples: Option<usize>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            num_antennas: 32,
            num_users: 4,
            num_rf_chains: 4,
            num_paths: 4,
            spacing_ratio: 0.5,
            snr_grid_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            num_trials: 500,
            root_seed: 0,
            t_max: 30,
            epsilon: 0.01,
            strategies: vec![Strategy::FullyDigitalWmmse, Strategy::ProposedFc],
            covariance_samples: None,
        }
    }
}

impl SystemConfig {
    /// Check cross-field consistency. Called by the harness before any
    /// computation.
    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0 {
            return Err(Error::Config("num_users must be at least 1".into()));
        }
        if self.num_rf_chains == 0 {
            return Err(Error::Config("num_rf_chains must be at least 1".into()));
        }
        if self.num_antennas < self.num_rf_chains {
            return Err(Error::Config(format!(
                "num_antennas ({}) must be at least num_rf_chains ({})",
                self.num_antennas, self.num_rf_chains
            )));
        }
        if self.num_paths == 0 {
            return Err(Error::Config("num_paths must be at least 1".into()));
        }
        if !(self.spacing_ratio > 0.0) || !self.spacing_ratio.is_finite() {
            return Err(Error::Config(format!(
                "spacing_ratio must be positive and finite, got {}",
                self.spacing_ratio
            )));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::Config("snr_grid_db must contain at least one point".into()));
        }
        if let Some(bad) = self.snr_grid_db.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("snr_grid_db contains non-finite value {bad}")));
        }
        if self.num_trials == 0 {
            return Err(Error::Config("num_trials must be at least 1".into()));
        }
        if self.t_max == 0 {
            return Err(Error::Config("t_max must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        for &s in &self.strategies {
            if s.is_subarray() && self.num_antennas % self.num_rf_chains != 0 {
                return Err(Error::Config(format!(
                    "strategy {s} needs num_antennas divisible by num_rf_chains \
                     ({} % {} != 0)",
                    self.num_antennas, self.num_rf_chains
                )));
            }
            if s.is_covariance_based() {
                match self.covariance_samples {
                    Some(t_s) if t_s >= 1 => {}
                    Some(_) => {
                        return Err(Error::Config(
                            "covariance_samples must be at least 1".into(),
                        ));
                    }
                    None => {
                        return Err(Error::Config(format!(
                            "strategy {s} needs covariance_samples (T_s) to be set"
                        )));
                    }
                }
            }
            if s == Strategy::ArgHRfBaseline && self.num_rf_chains != self.num_users {
                return Err(Error::Config(format!(
                    "strategy {s} is defined only for num_rf_chains = num_users \
                     (got {} vs {})",
                    self.num_rf_chains, self.num_users
                )));
            }
        }
        Ok(())
    }

    /// Parse the flat `key = value` format. Unknown or duplicate keys are
    /// errors; `#` starts a comment; lists are comma-separated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SystemConfig::default();
        // Required keys must appear; defaults cover the rest.
        let mut seen: Vec<&str> = Vec::new();
        let mut saw = |key: &'static str, seen: &mut Vec<&str>| -> Result<()> {
            if seen.contains(&key) {
                return Err(Error::Config(format!("duplicate key '{key}'")));
            }
            seen.push(key);
            Ok(())
        };

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value', got '{raw}'", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "num_antennas" => {
                    saw("num_antennas", &mut seen)?;
                    cfg.num_antennas = parse_scalar(key, value)?;
                }
                "num_users" => {
                    saw("num_users", &mut seen)?;
                    cfg.num_users = parse_scalar(key, value)?;
                }
                "num_rf_chains" => {
                    saw("num_rf_chains", &mut seen)?;
                    cfg.num_rf_chains = parse_scalar(key, value)?;
                }
                "num_paths" => {
                    saw("num_paths", &mut seen)?;
                    cfg.num_paths = parse_scalar(key, value)?;
                }
                "spacing_ratio" => {
                    saw("spacing_ratio", &mut seen)?;
                    cfg.spacing_ratio = parse_scalar(key, value)?;
                }
                "snr_grid_db" => {
                    saw("snr_grid_db", &mut seen)?;
                    cfg.snr_grid_db = parse_list(key, value)?;
                }
                "num_trials" => {
                    saw("num_trials", &mut seen)?;
                    cfg.num_trials = parse_scalar(key, value)?;
                }
                "root_seed" => {
                    saw("root_seed", &mut seen)?;
                    cfg.root_seed = parse_scalar(key, value)?;
                }
                "t_max" => {
                    saw("t_max", &mut seen)?;
                    cfg.t_max = parse_scalar(key, value)?;
                }
                "epsilon" => {
                    saw("epsilon", &mut seen)?;
                    cfg.epsilon = parse_scalar(key, value)?;
                }
                "strategies" => {
                    saw("strategies", &mut seen)?;
                    cfg.strategies = if value.is_empty() {
                        Vec::new()
                    } else {
                        value
                            .split(',')
                            .map(|s| s.trim().parse())
                            .collect::<Result<Vec<_>>>()?
                    };
                }
                "covariance_samples" => {
                    saw("covariance_samples", &mut seen)?;
                    cfg.covariance_samples = Some(parse_scalar(key, value)?);
                }
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key '{other}'",
                        lineno + 1
                    )));
                }
            }
        }

        for required in ["num_antennas", "num_users", "num_rf_chains", "num_paths"] {
            if !seen.contains(&required) {
                return Err(Error::Config(format!("missing required key '{required}'")));
            }
        }
        Ok(cfg)
    }

    pub fn parse_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    /// Serialize in the same `key = value` format; parsing the output
    /// reproduces the config exactly.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("num_antennas = {}\n", self.num_antennas));
        out.push_str(&format!("num_users = {}\n", self.num_users));
        out.push_str(&format!("num_rf_chains = {}\n", self.num_rf_chains));
        out.push_str(&format!("num_paths = {}\n", self.num_paths));
        out.push_str(&format!("spacing_ratio = {}\n", self.spacing_ratio));
        out.push_str(&format!(
            "snr_grid_db = {}\n",
            self.snr_grid_db
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ));
        out.push_str(&format!("num_trials = {}\n", self.num_trials));
        out.push_str(&format!("root_seed = {}\n", self.root_seed));
        out.push_str(&format!("t_max = {}\n", self.t_max));
        out.push_str(&format!("epsilon = {}\n", self.epsilon));
        out.push_str(&format!(
            "strategies = {}\n",
            self.strategies
                .iter()
                .map(|s| s.name().to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ));
        if let Some(t_s) = self.covariance_samples {
            out.push_str(&format!("covariance_samples = {t_s}\n"));
        }
        out
    }
}

fn parse_scalar<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("invalid value for '{key}': '{value}' ({e})")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|s| parse_scalar(key, s.trim()))
        .collect()
}
