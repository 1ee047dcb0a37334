//! First-order perturbation model of intra-channel nonlinear interference.
//!
//! A symbol `A(k)` in the additive-multiplicative model is received as
//! `(A(k) + dA(k)) exp(j phi(k))`, where `dA` and `phi` are triple and double
//! sums of neighbouring symbols weighted by a coupling matrix `C(m, n)`.
//! Symbols are unit-energy constellation points; the pulse peak power `P0`
//! carries the launch power.

mod coupling;
mod nli;
mod quad;

pub use coupling::{
    generate_coupling_matrix, read_coupling_matrix, write_coupling_matrix, CouplingEntry,
    CouplingMatrix, GaussianPulse,
};
pub use nli::{
    calibrate_scale, compensate, estimate_nli, estimate_nli_with, hard_decide, CalibrationReport,
    CalibrationStatus, CrossPolForm, EdgeMode, NliEstimate, NliOptions,
};
