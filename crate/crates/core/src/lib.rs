//! Coherent WDM optical transmission simulator and receiver DSP.
//!
//! The crate models dual-polarization propagation over a multi-span
//! amplified fiber link and implements the receiver chain used to compare
//! nonlinearity compensation strategies:
//!
//! * [`signal`]: waveform containers, RRC pulse shaping, WDM multiplexing.
//! * [`fec`]: DVB-S2 LDPC codes, interleaving, Gray QAM mapping and LLR demapping.
//! * [`fiber`]: split-step Manakov propagation and EDFA noise.
//! * [`rx`]: dispersion compensation, pilot-trained MMSE equalizer, carrier recovery.
//! * [`pert`]: first-order perturbation (additive-multiplicative) NLI model.
//! * [`rls`]: 2x2 decision-directed RLS equalizer for time-varying ISI.
//! * [`dbp`]: single-channel digital backpropagation baseline.
//! * [`turbo`]: conventional, FEC-assisted and genie-assisted receiver schemes.
//! * [`metrics`]: SNR estimators, BER counting, Q-factor.
//! * [`harness`]: experiment configuration, Monte Carlo sweeps and result files.

pub mod dbp;
pub mod error;
pub mod fec;
pub mod fiber;
pub mod harness;
pub mod metrics;
pub mod pert;
pub mod rls;
pub mod rng;
pub mod rx;
pub mod signal;
pub mod turbo;

pub(crate) mod fft;

pub use error::{Error, Result};
pub use num_complex::Complex64;
