//! Dual-polarization fiber propagation.
//!
//! The field obeys the Manakov equation
//! `dA/dz = -(alpha/2) A - j (beta2/2) d2A/dt2 + j (8/9) gamma |A|^2 A`
//! and is integrated with a symmetric split-step Fourier method. Spans are
//! followed by EDFAs whose gain exactly offsets the span loss.

mod edfa;
mod params;
mod ssfm;

pub use edfa::{ase_psd_per_pol, edfa, PLANCK, SPEED_OF_LIGHT};
pub use params::{FiberParams, LinkConfig};
pub use ssfm::{propagate_link, ssfm_propagate_span, MANAKOV_FACTOR};

pub(crate) use ssfm::{split_step, StepModel};
