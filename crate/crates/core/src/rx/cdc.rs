use std::f64::consts::PI;

use crate::error::{param, Result};
use crate::fft::{bin_freq, FftPair};
use crate::fiber::{LinkConfig, SPEED_OF_LIGHT};
use crate::signal::DualPolWaveform;
use crate::Complex64;

/// All-pass inverse of the accumulated link dispersion.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CdcSpec {
    /// Accumulated `D L`, ps/nm.
    pub total_dispersion: f64,
    pub wavelength_nm: f64,
    pub sample_rate: f64,
}

impl CdcSpec {
    pub fn for_link(link: &LinkConfig, sample_rate: f64) -> Self {
        Self {
            total_dispersion: link.accumulated_dispersion(),
            wavelength_nm: link.spans.first().map_or(1550.0, |s| s.wavelength_nm),
            sample_rate,
        }
    }

    /// Accumulated `beta2 L`, s^2.
    pub fn beta2_l(&self) -> f64 {
        let lambda = self.wavelength_nm * 1e-9;
        -self.total_dispersion * 1e-3 * lambda * lambda / (2.0 * PI * SPEED_OF_LIGHT)
    }
}

/// Apply `exp(-j beta2 L w^2 / 2)` to both polarizations.
pub fn cdc_compensate(input: &DualPolWaveform, spec: &CdcSpec) -> Result<DualPolWaveform> {
    input.validate()?;
    if (spec.sample_rate - input.sample_rate).abs() > 1e-9 * input.sample_rate {
        return param(format!(
            "CDC designed for {} Hz but waveform is sampled at {} Hz",
            spec.sample_rate, input.sample_rate
        ));
    }
    let n = input.len();
    let b2l = spec.beta2_l();
    let h: Vec<Complex64> = (0..n)
        .map(|k| {
            let w = 2.0 * PI * bin_freq(k, n, input.sample_rate);
            Complex64::cis(-b2l / 2.0 * w * w)
        })
        .collect();
    let mut out = input.clone();
    let mut fft = FftPair::new(n);
    for pol in [&mut out.x, &mut out.y] {
        fft.forward(pol);
        for (v, t) in pol.iter_mut().zip(&h) {
            *v *= t;
        }
        fft.inverse(pol);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::{propagate_link, FiberParams};

    fn pulse(n: usize, fs: f64, t0: f64) -> DualPolWaveform {
        let x: Vec<_> = (0..n)
            .map(|k| {
                let t = (k as f64 - n as f64 / 2.0) / fs;
                Complex64::new((-t * t / (2.0 * t0 * t0)).exp(), 0.0)
            })
            .collect();
        let y = x.iter().map(|v| v * Complex64::new(0.0, 0.3)).collect();
        DualPolWaveform::new(x, y, fs).unwrap()
    }

    fn rms_width(v: &[Complex64], fs: f64) -> f64 {
        let e: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        let t = |k: usize| k as f64 / fs;
        let m: f64 = v.iter().enumerate().map(|(k, a)| t(k) * a.norm_sqr()).sum::<f64>() / e;
        (v.iter().enumerate().map(|(k, a)| (t(k) - m).powi(2) * a.norm_sqr()).sum::<f64>() / e).sqrt()
    }

    #[test]
    fn zero_dispersion_is_identity() {
        let w = pulse(128, 1e11, 1e-10);
        let spec = CdcSpec { total_dispersion: 0.0, wavelength_nm: 1550.0, sample_rate: 1e11 };
        let out = cdc_compensate(&w, &spec).unwrap();
        for (a, b) in out.x.iter().zip(&w.x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn inverts_linear_lossless_link() {
        let fs = 256e9;
        let w = pulse(4096, fs, 20e-12);
        let mut link = LinkConfig::uniform(3, 80.0).with_gamma(0.0);
        link.ase = false;
        for s in link.spans.iter_mut() {
            s.alpha_db_km = 0.0;
        }
        let rx = propagate_link(&w, &link).unwrap();
        let out = cdc_compensate(&rx, &CdcSpec::for_link(&link, fs)).unwrap();
        assert!((out.energy() / rx.energy() - 1.0).abs() < 1e-9);
        let err: f64 = out.x.iter().chain(&out.y).zip(w.x.iter().chain(&w.y)).map(|(a, b)| (a - b).norm_sqr()).sum();
        assert!(err / w.energy() < 1e-6);
    }

    #[test]
    fn half_compensation_leaves_analytic_broadening() {
        let fs = 1e12;
        let t0 = 10e-12;
        let w = pulse(8192, fs, t0);
        let f = FiberParams { alpha_db_km: 0.0, gamma: 0.0, ..FiberParams::smf(40.0) };
        let rx = crate::fiber::ssfm_propagate_span(&w, &f, 100.0).unwrap();
        let spec = CdcSpec { total_dispersion: f.accumulated_dispersion() / 2.0, wavelength_nm: 1550.0, sample_rate: fs };
        let out = cdc_compensate(&rx, &spec).unwrap();
        // Gaussian broadening T(z) = T0 sqrt(1 + (z/LD)^2) for the residual half.
        let ld = t0 * t0 / f.beta2().abs();
        let z = f.length_m() / 2.0;
        let expect = (1.0 + (z / ld).powi(2)).sqrt();
        let got = rms_width(&out.x, fs) / rms_width(&w.x, fs);
        assert!((got / expect - 1.0).abs() < 0.05, "{got} vs {expect}");
    }
}
