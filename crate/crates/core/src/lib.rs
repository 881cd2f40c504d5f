//! Link-level simulator and analytical toolkit for a massive-MIMO NOMA downlink.
//!
//! A base station with a large uniform circular array serves spatially
//! clustered users. Per-cluster null-space precoders remove inter-cluster
//! interference, which decomposes the system into independent per-group
//! SISO-NOMA channels after zero-forcing detection at the users. The crate
//! provides
//!
//! * [`geometry`] — one-ring spatial correlation matrices and their
//!   truncated eigenstructure,
//! * [`precoding`] — null-space precoders and the deterministic effective
//!   gain constants they induce,
//! * [`channel`] — per-trial fading, zero-forcing reception and SIC
//!   decoding,
//! * [`analysis`] — closed-form outage probabilities, ordered-gain
//!   distributions and high-SNR asymptotes for perfect user ordering and
//!   for one-bit feedback,
//! * [`simulator`] — a deterministic, trial-parallel Monte Carlo engine
//!   that cross-validates the simulation against the closed forms.

pub mod analysis;
pub mod channel;
pub mod geometry;
pub mod precoding;
pub mod simulator;

mod error;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex<f64>;

/// Complex dynamic matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Complex dynamic vector.
pub type CVector = nalgebra::DVector<C64>;
