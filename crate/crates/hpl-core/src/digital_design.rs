//! Baseband precoder optimization on the effective channel.
//!
//! With the RF stage fixed, the digital precoder only needs to act inside
//! the channel's column space: any stationary optimal precoder factors as
//! `F = H W` with a `K x K` combiner `W`. The reduced-complexity WMMSE
//! iteration (R-WMMSE) therefore optimizes the `K x K` combiner `W` with
//! `F_D = H_eff * W`, alternating closed-form updates of per-user receive
//! scalars `u`, MSE weights `lambda`, and the combiner columns. Every update
//! minimizes the weighted sum-MSE surrogate exactly in its block, so the
//! implied sum rate never decreases.
//!
//! All updates involve only the `K x K` Gram matrix `G = H_eff^H H_eff`:
//! cost per iteration is `O(K^3)` independent of the antenna count.

use crate::channel::ChannelRealization;
use crate::linalg::solve_hermitian;
use crate::precoding::{DigitalPrecoder, HybridPrecoder, RfPrecoder, SnrPoint};
use crate::{C64, CMatrix, Error, Result};

/// Channel seen by the digital stage, `H_eff = F_RF^H H` (`N_RF x K`), with
/// two cached Gram matrices: `G = H_eff^H H_eff`, whose column `k` is the
/// cross-correlation vector `g_k = H_eff^H h_eff_k` used by every WMMSE
/// update, and the power Gram `Q = (F_RF H_eff)^H (F_RF H_eff)` through
/// which the transmit power of a combiner `W` is `tr(W^H Q W)`.
///
/// In fully-digital mode (`F_RF = I`) the two coincide. For phase-shifter
/// RF stages they differ by roughly the antenna count; using `Q` in the
/// noise-trace terms keeps the WMMSE operating at the true SNR of the
/// power-normalized cascade.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    matrix: CMatrix,
    gram: CMatrix,
    power_gram: CMatrix,
}

impl EffectiveChannel {
    /// Wrap an explicit effective-channel matrix (fully-digital mode passes
    /// `H` itself); the power Gram coincides with the Gram matrix.
    pub fn from_matrix(matrix: CMatrix) -> Self {
        let gram = matrix.adjoint() * &matrix;
        let power_gram = gram.clone();
        Self {
            matrix,
            gram,
            power_gram,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Cached Gram matrix `H_eff^H H_eff`.
    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    /// Cached power Gram `(F_RF H_eff)^H (F_RF H_eff)`.
    pub fn power_gram(&self) -> &CMatrix {
        &self.power_gram
    }

    pub fn num_rf_chains(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Effective channel for a given RF precoder: `H_eff = F_RF^H H`.
pub fn effective_channel(rf: &RfPrecoder, channel: &ChannelRealization) -> Result<EffectiveChannel> {
    if rf.num_antennas() != channel.num_antennas() {
        return Err(Error::InvalidInput(format!(
            "RF precoder spans {} antennas, channel has {}",
            rf.num_antennas(),
            channel.num_antennas()
        )));
    }
    let matrix = rf.matrix().adjoint() * channel.matrix();
    let gram = matrix.adjoint() * &matrix;
    let propagated = rf.matrix() * &matrix;
    let mut power_gram = propagated.adjoint() * &propagated;
    // Symmetrize away roundoff so Cholesky sees an exactly Hermitian matrix.
    let adj = power_gram.adjoint();
    power_gram = (power_gram + adj) * crate::C64::new(0.5, 0.0);
    Ok(EffectiveChannel {
        matrix,
        gram,
        power_gram,
    })
}

/// Condition-number guard for the zero-forcing Gram inversion.
const ZF_MAX_CONDITION: f64 = 1e12;

fn gram_inverse(eff: &EffectiveChannel) -> Result<CMatrix> {
    let k = eff.num_users();
    let gram = eff.gram();
    let (vals, _) = crate::linalg::hermitian_eigen_desc(gram)?;
    let largest = vals.first().copied().unwrap_or(0.0);
    let smallest = vals.last().copied().unwrap_or(0.0);
    if !(smallest > 0.0) || largest / smallest > ZF_MAX_CONDITION {
        return Err(Error::Degenerate(format!(
            "effective-channel Gram matrix is near-singular \
             (condition {:.3e})",
            if smallest > 0.0 { largest / smallest } else { f64::INFINITY }
        )));
    }
    solve_hermitian(gram, &CMatrix::identity(k, k))
}

/// Zero-forcing digital precoder `F_D = H_eff (H_eff^H H_eff)^{-1}` with
/// columns rescaled to equal power. Interference-free by construction:
/// `H_eff^H F_D` is diagonal with positive entries.
pub fn zf_precoder(eff: &EffectiveChannel) -> Result<DigitalPrecoder> {
    let inv = gram_inverse(eff)?;
    let mut f_d = eff.matrix() * inv;
    for mut col in f_d.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= C64::new(norm, 0.0);
        }
    }
    Ok(DigitalPrecoder::new(f_d))
}

/// Zero-forcing-induced combiner initialization `W0 = (H_eff^H H_eff)^{-1}`,
/// scaled to unit composite power `tr(W^H Q W) = 1`. The iteration is
/// scale-equivariant, so the scaling only guards the dynamic range.
pub fn zf_combiner_init(eff: &EffectiveChannel) -> Result<CMatrix> {
    let mut w = gram_inverse(eff)?;
    let power = transmit_power(eff.power_gram(), &w);
    if !(power > 0.0) {
        return Err(Error::Degenerate("zero-forcing initialization has zero power".into()));
    }
    w /= C64::new(power.sqrt(), 0.0);
    Ok(w)
}

/// Per-iteration record of the R-WMMSE run.
#[derive(Debug, Clone)]
pub struct WmmseState {
    /// Final per-user receive scalars `u`.
    pub receive_scalars: Vec<C64>,
    /// Final per-user MSE weights `lambda` (strictly positive).
    pub weights: Vec<f64>,
    /// Final combiner `W` with `F_D = H_eff * W`.
    pub combiner: CMatrix,
    /// Number of combiner updates performed.
    pub iterations: usize,
    /// Sum spectral efficiency implied by the combiner after each update
    /// round (index 0 is the initialization).
    pub objective_trace: Vec<f64>,
    /// Whether the relative-change stopping rule fired within `t_max`.
    pub converged: bool,
    /// Relative combiner change at the last performed iteration.
    pub last_relative_change: f64,
}

fn transmit_power(power_gram: &CMatrix, w: &CMatrix) -> f64 {
    // tr(W^H Q W), real for Hermitian PSD Q.
    (w.adjoint() * power_gram * w).diagonal().iter().map(|z| z.re).sum()
}

/// Sum rate implied by a combiner once the cascade is power-normalized:
/// `SINR_k = |c_kk|^2 / (sum_{j != k} |c_kj|^2 + (sigma^2/P) tr(W^H Q W))`
/// with `C = G W`.
fn combiner_sum_se(eff: &EffectiveChannel, w: &CMatrix, noise_over_power: f64) -> f64 {
    let k = w.ncols();
    let c = eff.gram() * w;
    let power = transmit_power(eff.power_gram(), w);
    let mut se = 0.0;
    for user in 0..k {
        let mut interference = 0.0;
        for j in 0..k {
            if j != user {
                interference += c[(user, j)].norm_sqr();
            }
        }
        let signal = c[(user, user)].norm_sqr();
        se += (1.0 + signal / (interference + noise_over_power * power)).log2();
    }
    se
}

/// Reduced-complexity WMMSE digital precoding.
///
/// Starting from the combiner `init`, alternate the closed-form updates of
/// the receive scalars, MSE weights, and combiner until the relative
/// combiner change drops to `epsilon` or `t_max` iterations elapse. Returns
/// the un-normalized digital precoder `F_D = H_eff * W` (callers apply the
/// joint power normalization) together with the iteration record.
pub fn r_wmmse(
    eff: &EffectiveChannel,
    snr: &SnrPoint,
    init: &CMatrix,
    t_max: usize,
    epsilon: f64,
) -> Result<(DigitalPrecoder, WmmseState)> {
    let k = eff.num_users();
    if init.nrows() != k || init.ncols() != k {
        return Err(Error::InvalidInput(format!(
            "combiner init must be {k}x{k}, got {}x{}",
            init.nrows(),
            init.ncols()
        )));
    }
    if init.norm() == 0.0 {
        return Err(Error::InvalidInput("combiner init must be nonzero".into()));
    }
    if t_max == 0 {
        return Err(Error::InvalidInput("t_max must be at least 1".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }

    let gram = eff.gram();
    let power_gram = eff.power_gram();
    let inv_rho = snr.noise_over_power();
    let mut w = init.clone();
    let mut u = vec![C64::new(0.0, 0.0); k];
    let mut lambda = vec![1.0_f64; k];
    let mut trace = vec![combiner_sum_se(eff, &w, inv_rho)];
    let mut iterations = 0;
    let mut converged = false;
    let mut last_change = f64::INFINITY;

    for _ in 0..t_max {
        let c = gram * &w;
        let power = transmit_power(power_gram, &w);

        // Receive scalars: u_k = c_kk / ((sigma^2/P) tr(W^H Q W) + sum_j |c_kj|^2).
        for user in 0..k {
            let mut denom = inv_rho * power;
            for j in 0..k {
                denom += c[(user, j)].norm_sqr();
            }
            u[user] = c[(user, user)] / denom;
        }

        // MSE weights: lambda_k = 1 / (1 - u_k^* c_kk), real and > 1 at the
        // MMSE point since the residual MSE lies in (0, 1).
        for user in 0..k {
            let mse = (1.0 - (u[user].conj() * c[(user, user)]).re).max(f64::MIN_POSITIVE);
            lambda[user] = 1.0 / mse;
        }

        // Combiner: all columns share the system matrix
        //   M = (sigma^2/P) (sum_i |u_i|^2 lambda_i) Q + G D G,  D = diag(|u|^2 lambda),
        // with right-hand side G diag(u lambda).
        let mut d = CMatrix::zeros(k, k);
        let mut ul = CMatrix::zeros(k, k);
        let mut loading = 0.0;
        for user in 0..k {
            let mag = u[user].norm_sqr() * lambda[user];
            d[(user, user)] = C64::new(mag, 0.0);
            ul[(user, user)] = u[user] * lambda[user];
            loading += mag;
        }
        let m = power_gram * C64::new(inv_rho * loading, 0.0) + gram * d * gram;
        let rhs = gram * ul;
        let w_next = solve_hermitian(&m, &rhs)?;

        let denom = w.norm();
        last_change = if denom > 0.0 {
            (&w_next - &w).norm() / denom
        } else {
            f64::INFINITY
        };
        w = w_next;
        iterations += 1;
        trace.push(combiner_sum_se(eff, &w, inv_rho));

        if last_change <= epsilon {
            converged = true;
            break;
        }
    }

    let f_d = DigitalPrecoder::new(eff.matrix() * &w);
    Ok((
        f_d,
        WmmseState {
            receive_scalars: u,
            weights: lambda,
            combiner: w,
            iterations,
            objective_trace: trace,
            converged,
            last_relative_change: last_change,
        },
    ))
}

/// Fully-digital WMMSE benchmark: run R-WMMSE with `F_RF = I_N` (so the
/// effective channel is `H` itself) from the zero-forcing initialization,
/// and return the power-normalized precoder. Serves as the spectral
/// efficiency upper-bound reference for every hybrid architecture.
pub fn fully_digital_wmmse(
    channel: &ChannelRealization,
    snr: &SnrPoint,
    t_max: usize,
    epsilon: f64,
) -> Result<HybridPrecoder> {
    let (precoder, _) = fully_digital_wmmse_with_state(channel, snr, t_max, epsilon)?;
    Ok(precoder)
}

/// As [`fully_digital_wmmse`], also returning the iteration record.
pub fn fully_digital_wmmse_with_state(
    channel: &ChannelRealization,
    snr: &SnrPoint,
    t_max: usize,
    epsilon: f64,
) -> Result<(HybridPrecoder, WmmseState)> {
    let rf = RfPrecoder::identity(channel.num_antennas());
    let eff = effective_channel(&rf, channel)?;
    let init = zf_combiner_init(&eff)?;
    let (digital, state) = r_wmmse(&eff, snr, &init, t_max, epsilon)?;
    Ok((HybridPrecoder::normalized(rf, digital)?, state))
}
