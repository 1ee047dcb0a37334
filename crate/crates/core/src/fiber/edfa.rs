use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{param, Result};
use crate::signal::DualPolWaveform;

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// ASE power spectral density per polarization, `(G - 1) F h nu / 2`, W/Hz.
pub fn ase_psd_per_pol(gain_db: f64, noise_figure_db: f64, wavelength_nm: f64) -> f64 {
    let g = 10f64.powf(gain_db / 10.0);
    let f = 10f64.powf(noise_figure_db / 10.0);
    let nu = SPEED_OF_LIGHT / (wavelength_nm * 1e-9);
    (g - 1.0) * f * PLANCK * nu / 2.0
}

/// Amplify by `gain_db` and add white circular Gaussian ASE on both polarizations.
///
/// The noise variance per complex sample is `psd * sample_rate`.
pub fn edfa<R: Rng + ?Sized>(
    input: &DualPolWaveform,
    gain_db: f64,
    noise_figure_db: f64,
    rng: &mut R,
) -> Result<DualPolWaveform> {
    if !(gain_db >= 0.0) {
        return param(format!("EDFA gain must be non-negative, got {gain_db} dB"));
    }
    let mut out = input.clone();
    out.scale(10f64.powf(gain_db / 20.0));
    let var = ase_psd_per_pol(gain_db, noise_figure_db, 1550.0) * input.sample_rate;
    if var > 0.0 {
        let s = (var / 2.0).sqrt();
        for v in out.x.iter_mut().chain(out.y.iter_mut()) {
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            *v += Complex64::new(a * s, b * s);
        }
    }
    Ok(out)
}
