//! Affine frequency division multiplexing (AFDM) physical-layer laboratory.
//!
//! The crate is organised bottom-up:
//!
//! * [`modem`] holds the waveform parameters, the DAFT/IDAFT transform pair
//!   and chirp-periodic prefix (CPP) framing.
//! * [`channel`] draws and applies doubly dispersive channels, AWGN and the
//!   receiver-side time/frequency offsets.
//! * [`sync`] implements the joint and stepwise maximum-likelihood estimators
//!   of symbol time offset and fractional carrier frequency offset.
//! * [`ici`] analyses intercarrier interference under a residual frequency
//!   offset and implements mirror-mapping modulation.
//! * [`equalizer`] builds the DAFT-domain effective channel and runs linear
//!   MMSE detection.
//! * [`harness`] runs seeded Monte Carlo experiments and emits CSV.

pub mod channel;
pub mod equalizer;
mod error;
pub mod harness;
pub mod ici;
pub mod modem;
pub mod selftest;
pub mod sync;

pub use channel::{ChannelProfile, ChannelRealization, NoiseModel, OffsetTruth, Path};
pub use equalizer::{EffectiveChannel, MmseDetector};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, ExperimentKind, ResultSet};
pub use ici::IciCoefficients;
pub use modem::{AfdmModem, AfdmParams, DaftVector, TimeSamples};
pub use num_complex::Complex64;
pub use sync::{OffsetEstimate, SyncMetrics};
