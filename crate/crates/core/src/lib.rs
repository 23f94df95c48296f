//! Aliased time-modulated array (ATMA) OFDM analysis.
//!
//! An N-state RF switch driven by a periodic phase sequence replicates the
//! baseband signal at every harmonic of the pulse frequency. Stretching each
//! state over `A` samples makes the replicas overlap with the `A` repeated,
//! alternately precoded frequency blocks of the transmit signal, so the
//! sideband replicas cancel while the switch runs `A` times slower.
//!
//! Modules:
//! - [`modwave`]: switching waveform and its exact harmonic coefficients.
//! - [`alias`]: block precoders and the aliased coefficient `alpha_A(i, d)`.
//! - [`metrics`]: ACLR, ripple, EVM, capacity, rates and design constraints.
//! - [`beam`]: uniform linear array factor and steering directions.
//! - [`link`]: sample-level OFDM transmitter/receiver and the DFT oracle.

pub mod alias;
pub mod beam;
mod dsp;
mod error;
pub mod link;
pub mod metrics;
pub mod modwave;

pub use alias::{AliasedSpectrum, Precoder};
pub use beam::{ArrayConfig, BeamDirection};
pub use error::{Error, Result};
pub use link::{LinkResult, OfdmFrame};
pub use metrics::{SystemReport, Violation};
pub use modwave::{HarmonicSpectrum, ModConfig};
pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
