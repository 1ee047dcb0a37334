//! Linear receiver DSP: dispersion compensation, pilot-trained MMSE
//! equalization and decision-directed carrier recovery.

mod cdc;
mod ddpll;
mod mmse;

pub use cdc::{cdc_compensate, CdcSpec};
pub use ddpll::{ddpll_carrier_recovery, PllGains};
pub use mmse::{mmse_apply, mmse_train, MmseEqualizer};
