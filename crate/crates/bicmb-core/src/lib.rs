//! Link-level building blocks for bit-interleaved coded multiple beamforming
//! (BICMB) over distributed mm-Wave massive MIMO channels.
//!
//! The crate is organized around the stages of a link:
//!
//! * [`channel`] — Saleh-Valenzuela channel synthesis for distributed RAU
//!   geometries (path draws, subchannel matrices, block assembly).
//! * [`beamforming`] — single-user SVD beamforming and multi-user hybrid
//!   block-diagonalization, with interference diagnostics.
//! * [`codec`] — the (133,171) convolutional code: encoder, exact distance
//!   spectrum, and Viterbi decoder.
//! * [`interleaver`] / [`modulation`] — criteria-compliant spatial
//!   interleaving, Gray mapping, and per-subchannel ML bit metrics.
//! * [`analysis`] — Gamma moment-matching of the channel energy, diversity
//!   gains, PEP/BER union bounds, and the BER-slope estimator.
//! * [`sim`] — the per-frame Monte Carlo transmit/receive chain.
//!
//! Everything is deterministic given explicit seeds: random draws go through
//! [`rng::SeedStream`]-derived generators, so results cannot depend on
//! scheduling. The crate is `no_std` (with `alloc`); IO, configuration files,
//! and the parallel sweep engine live in the companion `bicmb` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod analysis;
pub mod beamforming;
pub mod channel;
pub mod codec;
pub mod error;
pub mod interleaver;
pub mod linalg;
mod math;
pub mod modulation;
pub mod rng;
pub mod sim;

pub use analysis::{BerCurve, BerPoint, GammaApprox, SlopeFit};
pub use beamforming::{BeamformerSet, EffectiveChannelReport, MuBeamformerSet};
pub use channel::{ChannelRealization, FadingProfile, Mode, PathSet, SystemGeometry};
pub use codec::CodeSpec;
pub use error::Error;
pub use interleaver::InterleaverPlan;
pub use modulation::ModulationSpec;
pub use sim::{CodingMode, FrameResult, SimConfig};

/// Complex sample type used throughout.
pub type C64 = num_complex::Complex<f64>;

/// Dense complex matrix type used for channels and beamformers.
pub type CMat = nalgebra::DMatrix<C64>;

/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
