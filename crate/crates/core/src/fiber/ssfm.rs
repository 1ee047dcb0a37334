use std::f64::consts::PI;

use num_complex::Complex64;

use super::edfa::edfa;
use super::params::{FiberParams, LinkConfig};
use crate::error::{Error, Result};
use crate::fft::{bin_freq, FftPair};
use crate::rng::{purpose, stream};
use crate::signal::DualPolWaveform;

/// Polarization-averaged Kerr factor of the Manakov equation.
pub const MANAKOV_FACTOR: f64 = 8.0 / 9.0;

/// Coefficients of one homogeneous fiber section in SI units.
///
/// Negating all three gives the inverse channel used by backpropagation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepModel {
    /// Power attenuation, 1/m.
    pub alpha: f64,
    /// s^2/m.
    pub beta2: f64,
    /// Scalar nonlinear coefficient, 1/(W m). The Manakov factor is applied internally.
    pub gamma: f64,
}

impl StepModel {
    pub fn from_fiber(f: &FiberParams) -> Self {
        Self {
            alpha: f.alpha_per_m(),
            beta2: f.beta2(),
            gamma: f.gamma_per_m(),
        }
    }

    pub fn inverse(self) -> Self {
        Self {
            alpha: -self.alpha,
            beta2: -self.beta2,
            gamma: -self.gamma,
        }
    }

    /// Length over which the midpoint power acts within a lossy step of length `h`.
    fn effective_length(&self, h: f64) -> f64 {
        let ah = self.alpha * h;
        if ah.abs() < 1e-12 {
            h
        } else {
            2.0 / self.alpha * (ah / 2.0).sinh()
        }
    }
}

/// Step lengths covering `length`, the last one truncated.
fn schedule(length: f64, step: f64) -> Vec<f64> {
    let count = ((length / step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut steps = vec![step; count];
    steps[count - 1] = length - step * (count - 1) as f64;
    steps
}

struct LinearCache {
    omega2: Vec<f64>,
    model: StepModel,
    entries: Vec<(f64, Vec<Complex64>)>,
}

impl LinearCache {
    fn new(n: usize, fs: f64, model: StepModel) -> Self {
        let omega2 = (0..n)
            .map(|k| {
                let w = 2.0 * PI * bin_freq(k, n, fs);
                w * w
            })
            .collect();
        Self {
            omega2,
            model,
            entries: Vec::new(),
        }
    }

    fn get(&mut self, len: f64) -> &[Complex64] {
        let pos = match self.entries.iter().position(|(l, _)| *l == len) {
            Some(p) => p,
            None => {
                let (b2, a) = (self.model.beta2, self.model.alpha);
                let h = self
                    .omega2
                    .iter()
                    .map(|&w2| Complex64::new(-a / 2.0 * len, b2 / 2.0 * w2 * len).exp())
                    .collect();
                self.entries.push((len, h));
                self.entries.len() - 1
            }
        };
        &self.entries[pos].1
    }
}

fn apply(buf: &mut [Complex64], h: &[Complex64]) {
    for (v, t) in buf.iter_mut().zip(h) {
        *v *= t;
    }
}

/// Symmetric split-step integration of `length` meters, in place.
///
/// With `mirrored` the step schedule is reversed (truncated step first), which
/// makes a run with [`StepModel::inverse`] the exact inverse of a forward run.
pub(crate) fn split_step(
    x: &mut [Complex64],
    y: &mut [Complex64],
    fs: f64,
    model: StepModel,
    length: f64,
    step: f64,
    mirrored: bool,
) {
    let n = x.len();
    let mut fft = FftPair::new(n);
    let mut lin = LinearCache::new(n, fs, model);
    fft.forward(x);
    fft.forward(y);
    if model.gamma == 0.0 {
        let h = lin.get(length);
        apply(x, h);
        apply(y, h);
    } else {
        let mut steps = schedule(length, step);
        if mirrored {
            steps.reverse();
        }
        let h = lin.get(steps[0] / 2.0);
        apply(x, h);
        apply(y, h);
        let g = MANAKOV_FACTOR * model.gamma;
        for i in 0..steps.len() {
            fft.inverse(x);
            fft.inverse(y);
            let k = g * model.effective_length(steps[i]);
            for (a, b) in x.iter_mut().zip(y.iter_mut()) {
                let rot = Complex64::cis(k * (a.norm_sqr() + b.norm_sqr()));
                *a *= rot;
                *b *= rot;
            }
            fft.forward(x);
            fft.forward(y);
            let next = match steps.get(i + 1) {
                Some(s) => (steps[i] + s) / 2.0,
                None => steps[i] / 2.0,
            };
            let h = lin.get(next);
            apply(x, h);
            apply(y, h);
        }
    }
    fft.inverse(x);
    fft.inverse(y);
}

/// Propagate through one fiber span (no amplification).
pub fn ssfm_propagate_span(
    input: &DualPolWaveform,
    fiber: &FiberParams,
    step_m: f64,
) -> Result<DualPolWaveform> {
    fiber.validate()?;
    input.validate()?;
    if !(step_m > 0.0) {
        return Err(Error::Config(format!("SSFM step must be positive, got {step_m} m")));
    }
    if step_m > fiber.length_m() {
        return Err(Error::Config(format!(
            "SSFM step {step_m} m exceeds span length {} m",
            fiber.length_m()
        )));
    }
    let mut out = input.clone();
    split_step(
        &mut out.x,
        &mut out.y,
        input.sample_rate,
        StepModel::from_fiber(fiber),
        fiber.length_m(),
        step_m,
        false,
    );
    Ok(out)
}

/// Span/EDFA alternation. ASE for span `i` is drawn from its own stream of `link.rng_seed`.
pub fn propagate_link(input: &DualPolWaveform, link: &LinkConfig) -> Result<DualPolWaveform> {
    link.validate()?;
    let mut w = input.clone();
    for (i, span) in link.spans.iter().enumerate() {
        w = ssfm_propagate_span(&w, span, link.ssfm_step_m.min(span.length_m()))?;
        if link.ase {
            let mut rng = stream(link.rng_seed, &[purpose::ASE, i as u64]);
            w = edfa(&w, span.span_loss_db(), link.edfa_noise_figure_db, &mut rng)?;
        } else {
            w.scale(10f64.powf(span.span_loss_db() / 20.0));
        }
    }
    Ok(w)
}
