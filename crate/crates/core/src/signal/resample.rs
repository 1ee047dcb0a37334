use std::f64::consts::PI;

use num_complex::Complex64;

use super::DualPolWaveform;
use crate::error::{param, Result};
use crate::fft::FftPair;

/// Map a length-`n` spectrum onto length `m`, keeping the lowest frequencies.
pub(crate) fn respectrum(x: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = x.len();
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    let small = n.min(m);
    let h = small / 2;
    for k in 0..h {
        y[k] = x[k];
    }
    for k in 1..h {
        y[m - k] = x[n - k];
    }
    if small % 2 == 1 {
        y[h] = x[h];
        y[m - h] = x[n - h];
    } else if h > 0 {
        if n <= m {
            y[h] += x[h] * 0.5;
            y[m - h] += x[h] * 0.5;
        } else {
            y[h] = x[h] + x[n - h];
        }
    }
    y
}

/// FFT-based band-limited resampling of a periodic waveform.
///
/// The new length `len * new_rate / sample_rate` must be an integer.
pub fn resample(input: &DualPolWaveform, new_rate: f64) -> Result<DualPolWaveform> {
    let n = input.len();
    let exact = n as f64 * new_rate / input.sample_rate;
    let m = exact.round() as usize;
    if m == 0 || (exact - m as f64).abs() > 1e-6 {
        return param(format!(
            "resampling {n} samples from {} to {new_rate} Hz gives non-integer length {exact}",
            input.sample_rate
        ));
    }
    if m == n {
        let mut w = input.clone();
        w.sample_rate = new_rate;
        return Ok(w);
    }
    let mut fwd = FftPair::new(n);
    let mut inv = FftPair::new(m);
    let gain = m as f64 / n as f64;
    let mut run = |v: &[Complex64]| {
        let mut buf = v.to_vec();
        fwd.forward(&mut buf);
        let mut out = respectrum(&buf, m);
        inv.inverse(&mut out);
        for s in out.iter_mut() {
            *s *= gain;
        }
        out
    };
    let x = run(&input.x);
    let y = run(&input.y);
    Ok(DualPolWaveform {
        x,
        y,
        sample_rate: new_rate,
        center_freq_offset: input.center_freq_offset,
        power_ref_dbm: input.power_ref_dbm,
    })
}

/// Multiply by `exp(j 2 pi f t)`.
///
/// The result stays periodic only when `f` is a multiple of `sample_rate / len`.
pub fn frequency_shift(input: &DualPolWaveform, hz: f64) -> DualPolWaveform {
    let w0 = 2.0 * PI * hz / input.sample_rate;
    let rot: Vec<Complex64> = (0..input.len())
        .map(|k| Complex64::from_polar(1.0, w0 * k as f64))
        .collect();
    let apply = |v: &[Complex64]| v.iter().zip(&rot).map(|(a, r)| a * r).collect();
    DualPolWaveform {
        x: apply(&input.x),
        y: apply(&input.y),
        sample_rate: input.sample_rate,
        center_freq_offset: input.center_freq_offset + hz,
        power_ref_dbm: input.power_ref_dbm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(n: usize, fs: f64, f: f64) -> DualPolWaveform {
        let x: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * f * k as f64 / fs))
            .collect();
        DualPolWaveform::new(x.clone(), x, fs).unwrap()
    }

    #[test]
    fn up_then_down_is_identity() {
        let w = tone(64, 64.0, 5.0);
        let up = resample(&w, 256.0).unwrap();
        assert_eq!(up.len(), 256);
        let back = resample(&up, 64.0).unwrap();
        for (a, b) in back.x.iter().zip(&w.x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn upsampled_tone_is_continuous() {
        let w = tone(64, 64.0, 5.0);
        let up = resample(&w, 128.0).unwrap();
        for (k, v) in up.x.iter().enumerate() {
            let expect = Complex64::from_polar(1.0, 2.0 * PI * 5.0 * k as f64 / 128.0);
            assert!((v - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn non_integer_ratio_rejected() {
        let w = tone(100, 100.0, 1.0);
        assert!(resample(&w, 33.3).is_err());
    }

    #[test]
    fn shift_moves_tone() {
        let w = tone(128, 128.0, 3.0);
        let s = frequency_shift(&w, 10.0);
        let expect = tone(128, 128.0, 13.0);
        for (a, b) in s.x.iter().zip(&expect.x) {
            assert!((a - b).norm() < 1e-10);
        }
        assert_eq!(s.center_freq_offset, 10.0);
    }
}
