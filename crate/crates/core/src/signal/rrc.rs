use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use super::{DualPolWaveform, SymbolFrame};
use crate::error::{param, Result};
use crate::fft::{bin_freq, FftPair};

/// How an RRC filter is realized on a sampled waveform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterRealization {
    /// Truncated closed-form impulse response of `num_taps` coefficients.
    #[default]
    Taps,
    /// Exact periodic frequency response applied over the whole frame.
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RrcFilterSpec {
    pub rolloff: f64,
    pub num_taps: usize,
    pub samples_per_symbol: usize,
    #[serde(default)]
    pub realization: FilterRealization,
}

impl RrcFilterSpec {
    pub fn new(rolloff: f64, num_taps: usize, samples_per_symbol: usize) -> Self {
        Self {
            rolloff,
            num_taps,
            samples_per_symbol,
            realization: FilterRealization::Taps,
        }
    }

    pub fn spectral(rolloff: f64, samples_per_symbol: usize) -> Self {
        Self {
            rolloff,
            num_taps: 1,
            samples_per_symbol,
            realization: FilterRealization::Spectral,
        }
    }

    /// Same pulse, different oversampling.
    pub fn at_sps(self, samples_per_symbol: usize) -> Self {
        Self {
            samples_per_symbol,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return param(format!("rolloff must lie in (0, 1], got {}", self.rolloff));
        }
        if self.samples_per_symbol < 2 {
            return param("samples per symbol must be at least 2");
        }
        if self.realization == FilterRealization::Taps && self.num_taps % 2 == 0 {
            return param(format!("RRC tap count must be odd, got {}", self.num_taps));
        }
        Ok(())
    }

    /// Root-raised-cosine amplitude response at `f` (Hz) for `symbol_rate`, unity in the passband.
    pub fn frequency_response(&self, f: f64, symbol_rate: f64) -> f64 {
        let b = self.rolloff;
        let u = f.abs() / symbol_rate;
        let lo = 0.5 * (1.0 - b);
        let hi = 0.5 * (1.0 + b);
        if u <= lo {
            1.0
        } else if u <= hi {
            (0.5 * (1.0 + (PI / b * (u - lo)).cos())).sqrt()
        } else {
            0.0
        }
    }

    /// Occupied bandwidth `(1 + rolloff) * symbol_rate`.
    pub fn bandwidth(&self, symbol_rate: f64) -> f64 {
        (1.0 + self.rolloff) * symbol_rate
    }
}

/// Closed-form RRC value at `t` symbol periods, unnormalized.
fn rrc_point(t: f64, b: f64) -> f64 {
    if t.abs() < 1e-12 {
        return 1.0 - b + 4.0 * b / PI;
    }
    let q = 4.0 * b * t;
    if (1.0 - q * q).abs() < 1e-10 {
        let a = PI / (4.0 * b);
        return b * FRAC_1_SQRT_2 * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    ((PI * t * (1.0 - b)).sin() + q * (PI * t * (1.0 + b)).cos()) / (PI * t * (1.0 - q * q))
}

/// Unit-energy, symmetric RRC impulse response.
pub fn rrc_taps(spec: &RrcFilterSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.realization != FilterRealization::Taps {
        return param("rrc_taps requires a tap realization");
    }
    let c = (spec.num_taps - 1) as f64 / 2.0;
    let sps = spec.samples_per_symbol as f64;
    let mut h: Vec<f64> = (0..spec.num_taps)
        .map(|i| rrc_point((i as f64 - c) / sps, spec.rolloff))
        .collect();
    let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in h.iter_mut() {
        *v /= norm;
    }
    Ok(h)
}

/// Circular convolution of each polarization with a centered real tap set.
fn circular_filter(pols: [&mut Vec<Complex64>; 2], taps: &[f64]) {
    let n = pols[0].len();
    let c = (taps.len() - 1) / 2;
    let mut resp = vec![Complex64::new(0.0, 0.0); n];
    for (j, &t) in taps.iter().enumerate() {
        let idx = (j as i64 - c as i64).rem_euclid(n as i64) as usize;
        resp[idx] += t;
    }
    let mut fft = FftPair::new(n);
    fft.forward(&mut resp);
    for p in pols {
        fft.forward(p);
        for (v, r) in p.iter_mut().zip(&resp) {
            *v *= r;
        }
        fft.inverse(p);
    }
}

fn spectral_filter(pols: [&mut Vec<Complex64>; 2], spec: &RrcFilterSpec, fs: f64, gain: f64) {
    let n = pols[0].len();
    let rs = fs / spec.samples_per_symbol as f64;
    let resp: Vec<f64> = (0..n)
        .map(|k| gain * spec.frequency_response(bin_freq(k, n, fs), rs))
        .collect();
    let mut fft = FftPair::new(n);
    for p in pols {
        fft.forward(p);
        for (v, r) in p.iter_mut().zip(&resp) {
            *v *= r;
        }
        fft.inverse(p);
    }
}

/// Upsample and pulse-shape a symbol frame.
///
/// The shaping filter carries a gain of `sqrt(sps)` on the unit-energy taps so
/// that the mean waveform power equals the mean symbol energy.
pub fn shape_pulses(frame: &SymbolFrame, spec: &RrcFilterSpec) -> Result<DualPolWaveform> {
    spec.validate()?;
    if frame.is_empty() {
        return param("cannot shape an empty frame");
    }
    let sps = spec.samples_per_symbol;
    let n = frame.len() * sps;
    let fs = frame.symbol_rate * sps as f64;
    let mut w = DualPolWaveform::zeros(n, fs);
    for k in 0..frame.len() {
        w.x[k * sps] = frame.x[k];
        w.y[k * sps] = frame.y[k];
    }
    match spec.realization {
        FilterRealization::Taps => {
            let g: Vec<f64> = rrc_taps(spec)?
                .into_iter()
                .map(|v| v * (sps as f64).sqrt())
                .collect();
            circular_filter([&mut w.x, &mut w.y], &g);
        }
        FilterRealization::Spectral => {
            spectral_filter([&mut w.x, &mut w.y], spec, fs, sps as f64);
        }
    }
    Ok(w)
}

/// RRC matched filter; sampling the output every `sps` samples returns unit-gain symbols.
pub fn matched_filter(input: &DualPolWaveform, spec: &RrcFilterSpec) -> Result<DualPolWaveform> {
    spec.validate()?;
    let mut w = input.clone();
    match spec.realization {
        FilterRealization::Taps => {
            let s = (spec.samples_per_symbol as f64).sqrt();
            let g: Vec<f64> = rrc_taps(spec)?.into_iter().map(|v| v / s).collect();
            circular_filter([&mut w.x, &mut w.y], &g);
        }
        FilterRealization::Spectral => {
            let fs = w.sample_rate;
            spectral_filter([&mut w.x, &mut w.y], spec, fs, 1.0);
        }
    }
    Ok(w)
}

/// Decimate to one sample per symbol starting at sample `offset`.
pub fn sample_symbols(input: &DualPolWaveform, sps: usize, offset: usize) -> Result<SymbolFrame> {
    if sps == 0 || input.len() % sps != 0 {
        return param(format!(
            "waveform length {} is not a multiple of {sps} samples per symbol",
            input.len()
        ));
    }
    let pick = |v: &[Complex64]| -> Vec<Complex64> {
        (0..v.len() / sps).map(|k| v[(k * sps + offset) % v.len()]).collect()
    };
    SymbolFrame::new(pick(&input.x), pick(&input.y), input.sample_rate / sps as f64)
}
