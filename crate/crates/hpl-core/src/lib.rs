//! Hybrid precoding for multiuser MIMO downlinks.
//!
//! The library covers the full simulation chain for a narrowband downlink
//! with `N` base-station antennas, `N_RF` RF chains, and `K` single-antenna
//! users:
//!
//! * [`channel`] — geometric multipath channel generation, ULA steering
//!   vectors, and sample covariance estimation;
//! * [`precoding`] — precoder types, spectral-efficiency evaluation, and
//!   joint power normalization;
//! * [`rf_design`] — phase-shifter (unit-modulus) RF precoder construction
//!   for fully-connected, fixed-subarray, and dynamic-subarray networks,
//!   from either instantaneous or covariance-based subspaces;
//! * [`digital_design`] — baseband optimization: zero-forcing and the
//!   reduced-complexity WMMSE iteration on the low-dimensional combiner;
//! * [`harness`] — seeded Monte Carlo experiments over SNR sweeps with CSV
//!   output.
//!
//! All numerics are `f64`/`Complex<f64>`. Everything is deterministic given
//! a root seed: per-trial random streams are derived by counter-based
//! splitting, so results do not depend on execution order or thread count.

pub mod channel;
pub mod digital_design;
mod error;
pub mod harness;
pub mod linalg;
pub mod precoding;
pub mod rf_design;
pub mod rng;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex<f64>;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Dense complex column vector used throughout the crate.
pub type CVector = nalgebra::DVector<C64>;
