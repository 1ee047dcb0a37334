use num_complex::Complex64;

use super::resample::resample;
use super::DualPolWaveform;
use crate::error::{param, Error, Result};
use crate::fft::{bin_freq, bin_index, FftPair};

/// Fixed WDM grid centered on the composite carrier.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WdmGrid {
    pub num_channels: usize,
    /// Channel spacing, Hz.
    pub spacing: f64,
}

impl WdmGrid {
    pub fn new(num_channels: usize, spacing: f64) -> Self {
        Self {
            num_channels,
            spacing,
        }
    }

    pub fn center_index(&self) -> usize {
        (self.num_channels - 1) / 2
    }

    /// Nominal carrier offset of channel `i`.
    pub fn offset(&self, i: usize) -> f64 {
        (i as f64 - self.center_index() as f64) * self.spacing
    }

    /// Carrier offset of channel `i` rounded to the FFT grid of a length-`n` frame at `fs`.
    fn offset_bins(&self, i: usize, n: usize, fs: f64) -> i64 {
        (self.offset(i) / (fs / n as f64)).round() as i64
    }
}

/// Two-sided bandwidth holding all but `1e-6` of the spectral power.
fn occupied_bandwidth(spec: &[Vec<Complex64>; 2], fs: f64) -> f64 {
    let n = spec[0].len();
    let mut bins: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let p = spec[0][k].norm_sqr() + spec[1][k].norm_sqr();
            (bin_freq(k, n, fs).abs(), p)
        })
        .collect();
    let total: f64 = bins.iter().map(|b| b.1).sum();
    if total == 0.0 {
        return 0.0;
    }
    bins.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for (f, p) in bins {
        acc += p;
        if acc >= total * (1.0 - 1e-6) {
            return 2.0 * f;
        }
    }
    fs
}

/// Frequency-multiplex equal-length channels onto a composite field.
///
/// Channel `i` lands at `(i - (N-1)/2) * spacing`, rounded to the nearest FFT bin.
pub fn wdm_multiplex(
    channels: &[DualPolWaveform],
    grid_spacing: f64,
    composite_rate: f64,
) -> Result<DualPolWaveform> {
    let nch = channels.len();
    if nch % 2 == 0 {
        return param(format!("WDM channel count must be odd, got {nch}"));
    }
    let grid = WdmGrid::new(nch, grid_spacing);
    let resampled = channels
        .iter()
        .map(|c| resample(c, composite_rate))
        .collect::<Result<Vec<_>>>()?;
    let n = resampled[0].len();
    if resampled.iter().any(|c| c.len() != n) {
        return param("WDM channels differ in length after resampling");
    }
    let mut fft = FftPair::new(n);
    let mut acc = [
        vec![Complex64::new(0.0, 0.0); n],
        vec![Complex64::new(0.0, 0.0); n],
    ];
    for (i, ch) in resampled.into_iter().enumerate() {
        let mut spec = [ch.x, ch.y];
        for s in spec.iter_mut() {
            fft.forward(s);
        }
        if nch > 1 {
            let bw = occupied_bandwidth(&spec, composite_rate);
            let need = nch as f64 * grid_spacing + bw;
            if need > composite_rate * (1.0 + 1e-9) {
                return Err(Error::Config(format!(
                    "composite bandwidth {need:.4e} Hz exceeds sample rate {composite_rate:.4e} Hz"
                )));
            }
        }
        let shift = grid.offset_bins(i, n, composite_rate);
        for p in 0..2 {
            for (k, v) in spec[p].iter().enumerate() {
                let f = bin_freq(k, n, composite_rate) / (composite_rate / n as f64);
                acc[p][bin_index(f.round() as i64 + shift, n)] += v;
            }
        }
    }
    let [mut x, mut y] = acc;
    fft.inverse(&mut x);
    fft.inverse(&mut y);
    Ok(DualPolWaveform {
        x,
        y,
        sample_rate: composite_rate,
        center_freq_offset: 0.0,
        power_ref_dbm: channels[0].power_ref_dbm,
    })
}

/// Shift channel `channel_index` to baseband, low-pass filter and resample to `target_rate`.
///
/// The ideal low-pass keeps `|f| <= min(spacing / 2, target_rate / 2)`.
pub fn wdm_extract(
    composite: &DualPolWaveform,
    grid: &WdmGrid,
    channel_index: usize,
    target_rate: f64,
) -> Result<DualPolWaveform> {
    if channel_index >= grid.num_channels {
        return param(format!(
            "channel index {channel_index} outside grid of {} channels",
            grid.num_channels
        ));
    }
    let n = composite.len();
    let fs = composite.sample_rate;
    let exact = n as f64 * target_rate / fs;
    let m = exact.round() as usize;
    if m == 0 || (exact - m as f64).abs() > 1e-6 || m > n {
        return param(format!("cannot extract {n} samples at {fs} Hz to {target_rate} Hz"));
    }
    let df = fs / n as f64;
    let mut cutoff = 0.5 * target_rate;
    if grid.num_channels > 1 {
        cutoff = cutoff.min(0.5 * grid.spacing);
    }
    let shift = grid.offset_bins(channel_index, n, fs);
    let half = (m / 2) as i64;
    let mut fwd = FftPair::new(n);
    let mut inv = FftPair::new(m);
    let gain = m as f64 / n as f64;
    let mut run = |v: &[Complex64]| {
        let mut buf = v.to_vec();
        fwd.forward(&mut buf);
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        for j in -half..=half {
            if (j as f64 * df).abs() > cutoff + 1e-9 * df || (m % 2 == 0 && j == half) {
                continue;
            }
            out[bin_index(j, m)] = buf[bin_index(j + shift, n)];
        }
        inv.inverse(&mut out);
        for s in out.iter_mut() {
            *s *= gain;
        }
        out
    };
    let x = run(&composite.x);
    let y = run(&composite.y);
    Ok(DualPolWaveform {
        x,
        y,
        sample_rate: target_rate,
        center_freq_offset: shift as f64 * df,
        power_ref_dbm: composite.power_ref_dbm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{shape_pulses, RrcFilterSpec, SymbolFrame};
    use rand::{Rng, SeedableRng};

    fn channel(n_sym: usize, seed: u64, sps: usize) -> DualPolWaveform {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut s = || Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let x: Vec<_> = (0..n_sym).map(|_| s()).collect();
        let y: Vec<_> = (0..n_sym).map(|_| s()).collect();
        let f = SymbolFrame::new(x, y, 32e9).unwrap();
        shape_pulses(&f, &RrcFilterSpec::spectral(0.005, sps)).unwrap()
    }

    fn rel_err(a: &DualPolWaveform, b: &DualPolWaveform) -> f64 {
        let e: f64 = a
            .x
            .iter()
            .zip(&b.x)
            .chain(a.y.iter().zip(&b.y))
            .map(|(p, q)| (p - q).norm_sqr())
            .sum();
        e / b.energy()
    }

    #[test]
    fn single_channel_is_identity() {
        let c = channel(512, 1, 8);
        let out = wdm_multiplex(std::slice::from_ref(&c), 1e12, c.sample_rate).unwrap();
        assert!(rel_err(&out, &c) < 1e-24);
    }

    #[test]
    fn even_count_rejected() {
        let c = channel(64, 1, 8);
        assert!(wdm_multiplex(&[c.clone(), c], 37.5e9, 256e9).is_err());
    }

    #[test]
    fn aliasing_rejected() {
        let cs: Vec<_> = (0..5).map(|i| channel(256, i, 4)).collect();
        assert!(matches!(
            wdm_multiplex(&cs, 37.5e9, 128e9),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn power_adds_across_channels() {
        let cs: Vec<_> = (0..3).map(|i| channel(1024, i, 8)).collect();
        let total: f64 = cs.iter().map(|c| c.mean_power()).sum();
        let out = wdm_multiplex(&cs, 37.5e9, 256e9).unwrap();
        let db = 10.0 * (out.mean_power() / total).log10();
        assert!(db.abs() < 0.1, "{db} dB");
    }

    #[test]
    fn five_channel_peaks_on_grid() {
        let n = 4096;
        let fs = 512e9;
        let cs: Vec<_> = (0..5)
            .map(|_| DualPolWaveform::new(vec![Complex64::new(1.0, 0.0); n], vec![Complex64::new(0.0, 0.0); n], fs).unwrap())
            .collect();
        let out = wdm_multiplex(&cs, 37.5e9, fs).unwrap();
        let spec = crate::fft::fft(&out.x);
        let mut peaks: Vec<f64> = spec
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > 0.5 * n as f64)
            .map(|(k, _)| bin_freq(k, n, fs))
            .collect();
        peaks.sort_by(f64::total_cmp);
        let df = fs / n as f64;
        let expect = [-75e9, -37.5e9, 0.0, 37.5e9, 75e9];
        assert_eq!(peaks.len(), 5);
        for (p, e) in peaks.iter().zip(expect) {
            assert!((p - e).abs() <= df / 2.0 + 1.0);
        }
    }

    #[test]
    fn extract_round_trip_center_and_edge() {
        let cs: Vec<_> = (0..5).map(|i| channel(2048, 10 + i, 16)).collect();
        let comp = wdm_multiplex(&cs, 37.5e9, 512e9).unwrap();
        let grid = WdmGrid::new(5, 37.5e9);
        for idx in [0, 2, 4] {
            let got = wdm_extract(&comp, &grid, idx, 64e9).unwrap();
            let want = resample(&cs[idx], 64e9).unwrap();
            let leak = rel_err(&got, &want);
            assert!(10.0 * leak.log10() < -30.0, "channel {idx}: {leak}");
        }
    }

    #[test]
    fn extract_with_silent_neighbors_has_low_evm() {
        let c = channel(2048, 5, 8);
        let silent = DualPolWaveform::zeros(c.len(), c.sample_rate);
        let comp = wdm_multiplex(&[silent.clone(), c.clone(), silent], 37.5e9, 256e9).unwrap();
        let got = wdm_extract(&comp, &WdmGrid::new(3, 37.5e9), 1, 256e9).unwrap();
        assert!(rel_err(&got, &c).sqrt() < 0.01);
    }

    #[test]
    fn extract_index_out_of_range() {
        let c = channel(64, 1, 8);
        assert!(wdm_extract(&c, &WdmGrid::new(3, 37.5e9), 3, 64e9).is_err());
    }
}
