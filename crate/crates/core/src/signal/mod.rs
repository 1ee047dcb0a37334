//! Complex baseband signal primitives.
//!
//! Waveforms are stored in absolute field units (square root of watts), so
//! `|x|^2 + |y|^2` is the instantaneous optical power. All filtering in this
//! module is circular: simulated frames are periodic, which removes filter
//! edge transients from every downstream metric.

mod io;
mod resample;
mod rrc;
mod wdm;

pub use io::{read_waveform, write_waveform, WAVEFORM_MAGIC, WAVEFORM_VERSION};
pub use resample::{frequency_shift, resample};
pub use rrc::{matched_filter, rrc_taps, sample_symbols, shape_pulses, FilterRealization, RrcFilterSpec};
pub use wdm::{wdm_extract, wdm_multiplex, WdmGrid};

use num_complex::Complex64;

use crate::error::{param, Result};

/// Sampled dual-polarization complex baseband field.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPolWaveform {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    /// Samples per second.
    pub sample_rate: f64,
    /// Carrier offset of this waveform relative to the WDM grid center, Hz.
    pub center_freq_offset: f64,
    /// Nominal per-channel launch power this waveform was generated for, dBm.
    pub power_ref_dbm: f64,
}

impl DualPolWaveform {
    pub fn new(x: Vec<Complex64>, y: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        let w = Self {
            x,
            y,
            sample_rate,
            center_freq_offset: 0.0,
            power_ref_dbm: 0.0,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Self {
        Self {
            x: vec![Complex64::new(0.0, 0.0); len],
            y: vec![Complex64::new(0.0, 0.0); len],
            sample_rate,
            center_freq_offset: 0.0,
            power_ref_dbm: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.y.len() {
            return param(format!(
                "polarization lengths differ: {} vs {}",
                self.x.len(),
                self.y.len()
            ));
        }
        if self.x.is_empty() {
            return param("waveform is empty");
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return param(format!("sample rate must be positive, got {}", self.sample_rate));
        }
        if self
            .x
            .iter()
            .chain(self.y.iter())
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return param("waveform contains non-finite samples");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Mean total (both polarizations) power per sample.
    pub fn mean_power(&self) -> f64 {
        self.energy() / self.len() as f64
    }

    /// Sum of `|x|^2 + |y|^2` over all samples.
    pub fn energy(&self) -> f64 {
        self.x
            .iter()
            .chain(self.y.iter())
            .map(|v| v.norm_sqr())
            .sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.x.iter_mut().chain(self.y.iter_mut()) {
            *v *= factor;
        }
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }
}

/// Dual-polarization symbols at one sample per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    /// Baud.
    pub symbol_rate: f64,
    /// Bits carried by each polarization, `bits_per_symbol` per symbol.
    pub source_bits: Option<[Vec<u8>; 2]>,
}

impl SymbolFrame {
    pub fn new(x: Vec<Complex64>, y: Vec<Complex64>, symbol_rate: f64) -> Result<Self> {
        if x.len() != y.len() {
            return param(format!("polarization lengths differ: {} vs {}", x.len(), y.len()));
        }
        Ok(Self {
            x,
            y,
            symbol_rate,
            source_bits: None,
        })
    }

    pub fn with_source_bits(mut self, bits: [Vec<u8>; 2], bits_per_symbol: usize) -> Result<Self> {
        let expect = bits_per_symbol * self.len();
        if bits.iter().any(|b| b.len() != expect) {
            return param(format!(
                "source bit record must hold {expect} bits per polarization"
            ));
        }
        self.source_bits = Some(bits);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn pol(&self, p: usize) -> &[Complex64] {
        if p == 0 {
            &self.x
        } else {
            &self.y
        }
    }

    pub fn pol_mut(&mut self, p: usize) -> &mut Vec<Complex64> {
        if p == 0 {
            &mut self.x
        } else {
            &mut self.y
        }
    }

    /// Mean symbol energy averaged over both polarizations.
    pub fn mean_power(&self) -> f64 {
        let e: f64 = self.x.iter().chain(self.y.iter()).map(|v| v.norm_sqr()).sum();
        e / (2 * self.len()).max(1) as f64
    }

    /// Circularly rotate both polarizations left by `shift` symbols.
    pub fn rotate_left(&mut self, shift: usize) {
        if self.is_empty() {
            return;
        }
        let s = shift % self.len();
        self.x.rotate_left(s);
        self.y.rotate_left(s);
    }

    /// Copy of symbols `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> SymbolFrame {
        SymbolFrame {
            x: self.x[start..start + len].to_vec(),
            y: self.y[start..start + len].to_vec(),
            symbol_rate: self.symbol_rate,
            source_bits: None,
        }
    }
}
