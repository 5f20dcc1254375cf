//! Precoder types, spectral efficiency, and power normalization.
//!
//! A hybrid precoder is the cascade `F = F_RF * F_D` of a phase-shifter RF
//! stage (`N x N_RF`, unit-modulus entries on its wiring support) and an
//! unconstrained baseband stage (`N_RF x K`). The transmit power constraint
//! is `tr(F_RF F_D F_D^H F_RF^H) = 1`; spectral efficiency is the sum over
//! users of `log2(1 + SINR_k)` with the noise term `sigma^2 / P`.

use crate::channel::ChannelRealization;
use crate::{C64, CMatrix, Error, Result};

/// Analog network architecture of an RF precoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfArchitecture {
    /// Every RF chain drives every antenna through a phase shifter.
    FullyConnected,
    /// Chain `r` drives the contiguous antenna block `r`.
    FixedSubarray,
    /// Chain `r` drives a channel-dependent antenna subset.
    DynamicSubarray,
    /// Identity pass-through used to express fully-digital precoders in the
    /// same pipeline (`N_RF = N`, `F_RF = I`); exempt from the unit-modulus
    /// constraint.
    Digital,
}

impl RfArchitecture {
    pub fn is_subarray(self) -> bool {
        matches!(self, RfArchitecture::FixedSubarray | RfArchitecture::DynamicSubarray)
    }
}

/// Analog (phase-shifter) precoder `F_RF`, optionally with the antenna
/// partition that generated its support.
#[derive(Debug, Clone)]
pub struct RfPrecoder {
    matrix: CMatrix,
    partition: Option<Vec<Vec<usize>>>,
    architecture: RfArchitecture,
}

impl RfPrecoder {
    pub fn fully_connected(matrix: CMatrix) -> Self {
        Self {
            matrix,
            partition: None,
            architecture: RfArchitecture::FullyConnected,
        }
    }

    /// Subarray precoder with its antenna partition; `partition[r]` lists the
    /// antennas wired to chain `r`.
    pub fn subarray(
        matrix: CMatrix,
        partition: Vec<Vec<usize>>,
        architecture: RfArchitecture,
    ) -> Result<Self> {
        if !architecture.is_subarray() {
            return Err(Error::InvalidInput(
                "partitioned RF precoder needs a subarray architecture".into(),
            ));
        }
        if partition.len() != matrix.ncols() {
            return Err(Error::InvalidInput(format!(
                "partition has {} subsets for {} RF chains",
                partition.len(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            matrix,
            partition: Some(partition),
            architecture,
        })
    }

    /// Identity pass-through for fully-digital precoding (`F_RF = I_N`).
    pub fn identity(num_antennas: usize) -> Self {
        Self {
            matrix: CMatrix::identity(num_antennas, num_antennas),
            partition: None,
            architecture: RfArchitecture::Digital,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn partition(&self) -> Option<&[Vec<usize>]> {
        self.partition.as_deref()
    }

    pub fn architecture(&self) -> RfArchitecture {
        self.architecture
    }

    pub fn num_antennas(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_rf_chains(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Baseband precoder `F_D` (`N_RF x K`).
#[derive(Debug, Clone)]
pub struct DigitalPrecoder {
    matrix: CMatrix,
}

impl DigitalPrecoder {
    pub fn new(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn num_rf_chains(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.matrix.ncols()
    }
}

/// RF + baseband cascade with the composite `F = F_RF * F_D` cached.
#[derive(Debug, Clone)]
pub struct HybridPrecoder {
    rf: RfPrecoder,
    digital: DigitalPrecoder,
    composite: CMatrix,
}

impl HybridPrecoder {
    pub fn new(rf: RfPrecoder, digital: DigitalPrecoder) -> Result<Self> {
        if rf.num_rf_chains() != digital.num_rf_chains() {
            return Err(Error::InvalidInput(format!(
                "RF stage has {} chains but digital stage expects {}",
                rf.num_rf_chains(),
                digital.num_rf_chains()
            )));
        }
        let composite = rf.matrix() * digital.matrix();
        Ok(Self {
            rf,
            digital,
            composite,
        })
    }

    /// Cascade with the digital stage rescaled so the composite satisfies
    /// the unit transmit-power constraint.
    pub fn normalized(rf: RfPrecoder, digital: DigitalPrecoder) -> Result<Self> {
        let digital = normalize_power(&rf, &digital)?;
        Self::new(rf, digital)
    }

    pub fn rf(&self) -> &RfPrecoder {
        &self.rf
    }

    pub fn digital(&self) -> &DigitalPrecoder {
        &self.digital
    }

    /// Cached composite precoder `F = F_RF * F_D` (`N x K`).
    pub fn composite(&self) -> &CMatrix {
        &self.composite
    }

    /// Transmit power `tr(F F^H)` of the composite.
    pub fn composite_power(&self) -> f64 {
        self.composite.norm_squared()
    }

    pub fn num_users(&self) -> usize {
        self.composite.ncols()
    }
}

/// Operating point of the SNR sweep: symbol power `P` and noise power
/// `sigma^2`, entering the rate expression only through `sigma^2 / P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    transmit_power: f64,
    noise_power: f64,
}

impl SnrPoint {
    pub fn new(transmit_power: f64, noise_power: f64) -> Result<Self> {
        if !(transmit_power > 0.0) || !(noise_power > 0.0) {
            return Err(Error::InvalidInput(format!(
                "powers must be strictly positive (P={transmit_power}, sigma^2={noise_power})"
            )));
        }
        Ok(Self {
            transmit_power,
            noise_power,
        })
    }

    /// Operating point for an SNR in dB with `P = 1` and
    /// `sigma^2 = 10^(-dB/10)`.
    pub fn from_snr_db(snr_db: f64) -> Self {
        Self {
            transmit_power: 1.0,
            noise_power: 10f64.powf(-snr_db / 10.0),
        }
    }

    pub fn transmit_power(&self) -> f64 {
        self.transmit_power
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    /// `sigma^2 / P`, the effective noise level under the unit power constraint.
    pub fn noise_over_power(&self) -> f64 {
        self.noise_power / self.transmit_power
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.transmit_power / self.noise_power).log10()
    }
}

#[cfg(debug_assertions)]
fn check_normalized(precoder: &HybridPrecoder) -> Result<()> {
    let power = precoder.composite_power();
    if (power - 1.0).abs() > 1e-6 {
        return Err(Error::Contract(format!(
            "spectral efficiency expects a power-normalized precoder (tr = {power:.6})"
        )));
    }
    Ok(())
}

/// Spectral efficiency of user `k` (0-indexed) in bits/s/Hz:
/// `log2(1 + |h_k^H f_k|^2 / (sum_{l != k} |h_k^H f_l|^2 + sigma^2/P))`.
pub fn user_se(
    channel: &ChannelRealization,
    precoder: &HybridPrecoder,
    snr: &SnrPoint,
    user: usize,
) -> Result<f64> {
    let k_total = precoder.num_users();
    if channel.num_users() != k_total {
        return Err(Error::InvalidInput(format!(
            "channel serves {} users but precoder has {} columns",
            channel.num_users(),
            k_total
        )));
    }
    if channel.num_antennas() != precoder.composite().nrows() {
        return Err(Error::InvalidInput(format!(
            "channel has {} antennas but precoder has {} rows",
            channel.num_antennas(),
            precoder.composite().nrows()
        )));
    }
    if user >= k_total {
        return Err(Error::InvalidInput(format!(
            "user index {user} out of range for K = {k_total}"
        )));
    }
    #[cfg(debug_assertions)]
    check_normalized(precoder)?;

    let h_k = channel.matrix().column(user);
    // Row vector h_k^H F of per-stream responses at user k.
    let mut signal = 0.0;
    let mut interference = 0.0;
    for l in 0..k_total {
        let gain = h_k.dotc(&precoder.composite().column(l)).norm_sqr();
        if l == user {
            signal = gain;
        } else {
            interference += gain;
        }
    }
    let sinr = signal / (interference + snr.noise_over_power());
    Ok((1.0 + sinr).log2())
}

/// Sum spectral efficiency over all users.
pub fn sum_se(
    channel: &ChannelRealization,
    precoder: &HybridPrecoder,
    snr: &SnrPoint,
) -> Result<f64> {
    (0..precoder.num_users())
        .map(|k| user_se(channel, precoder, snr, k))
        .sum()
}

/// Rescale the digital precoder so that the composite transmit power is one:
/// `F_D <- F_D / sqrt(tr(F_RF F_D F_D^H F_RF^H))`.
pub fn normalize_power(rf: &RfPrecoder, digital: &DigitalPrecoder) -> Result<DigitalPrecoder> {
    if rf.num_rf_chains() != digital.num_rf_chains() {
        return Err(Error::InvalidInput(format!(
            "RF stage has {} chains but digital stage expects {}",
            rf.num_rf_chains(),
            digital.num_rf_chains()
        )));
    }
    let composite = rf.matrix() * digital.matrix();
    let power = composite.norm_squared();
    if power <= 0.0 || !power.is_finite() {
        return Err(Error::Degenerate(format!(
            "cannot normalize a precoder with composite power {power}"
        )));
    }
    Ok(DigitalPrecoder::new(
        digital.matrix() / C64::new(power.sqrt(), 0.0),
    ))
}

/// Structural diagnostics for an RF precoder. Reported, never asserted:
/// phase extraction preserves unit modulus exactly, but semi-unitarity of a
/// phase-extracted basis holds only approximately.
#[derive(Debug, Clone)]
pub struct RfValidationReport {
    /// `max | |F_RF(i,j)| - 1 |` over the wiring support.
    pub max_unit_modulus_deviation: f64,
    /// Largest magnitude found off the wiring support (subarrays only).
    pub max_off_support_magnitude: f64,
    /// Antennas missing from every subset (subarrays only).
    pub uncovered_antennas: usize,
    /// Antennas claimed by more than one subset (subarrays only).
    pub overlapping_antennas: usize,
    /// Subsets whose size differs from `N / N_RF` (subarrays only).
    pub missized_subsets: usize,
    /// `||F_RF^H F_RF - N I||_F` for fully-connected precoders.
    pub semi_unitarity_deviation: Option<f64>,
}

impl RfValidationReport {
    /// True when every structural constraint holds within `tol` and the
    /// partition (if any) is a valid equal-size cover.
    pub fn is_structurally_valid(&self, tol: f64) -> bool {
        self.max_unit_modulus_deviation <= tol
            && self.max_off_support_magnitude <= tol
            && self.uncovered_antennas == 0
            && self.overlapping_antennas == 0
            && self.missized_subsets == 0
    }
}

/// Inspect an RF precoder against the unit-modulus and partition
/// constraints. The identity pass-through used for fully-digital precoders
/// reports zeros (it is exempt by construction).
pub fn validate_rf(rf: &RfPrecoder) -> RfValidationReport {
    let n = rf.num_antennas();
    let n_rf = rf.num_rf_chains();
    let mut report = RfValidationReport {
        max_unit_modulus_deviation: 0.0,
        max_off_support_magnitude: 0.0,
        uncovered_antennas: 0,
        overlapping_antennas: 0,
        missized_subsets: 0,
        semi_unitarity_deviation: None,
    };
    match rf.architecture() {
        RfArchitecture::Digital => report,
        RfArchitecture::FullyConnected => {
            for z in rf.matrix().iter() {
                report.max_unit_modulus_deviation =
                    report.max_unit_modulus_deviation.max((z.norm() - 1.0).abs());
            }
            let gram = rf.matrix().adjoint() * rf.matrix();
            let scaled_eye = CMatrix::identity(n_rf, n_rf) * C64::new(n as f64, 0.0);
            report.semi_unitarity_deviation = Some((gram - scaled_eye).norm());
            report
        }
        RfArchitecture::FixedSubarray | RfArchitecture::DynamicSubarray => {
            let empty: Vec<Vec<usize>> = Vec::new();
            let partition = rf.partition().unwrap_or(&empty);
            let mut owners = vec![0usize; n];
            let expected = if n_rf > 0 { n / n_rf } else { 0 };
            for (r, subset) in partition.iter().enumerate() {
                if subset.len() != expected {
                    report.missized_subsets += 1;
                }
                for &antenna in subset {
                    if antenna < n {
                        owners[antenna] += 1;
                    }
                    let z = rf.matrix()[(antenna, r)];
                    report.max_unit_modulus_deviation =
                        report.max_unit_modulus_deviation.max((z.norm() - 1.0).abs());
                }
            }
            report.uncovered_antennas = owners.iter().filter(|&&c| c == 0).count();
            report.overlapping_antennas = owners.iter().filter(|&&c| c > 1).count();
            for r in 0..n_rf {
                let in_subset: std::collections::HashSet<usize> = partition
                    .get(r)
                    .map(|s| s.iter().copied().collect())
                    .unwrap_or_default();
                for i in 0..n {
                    if !in_subset.contains(&i) {
                        report.max_off_support_magnitude = report
                            .max_off_support_magnitude
                            .max(rf.matrix()[(i, r)].norm());
                    }
                }
            }
            report
        }
    }
}
