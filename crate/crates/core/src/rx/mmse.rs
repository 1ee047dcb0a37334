use nalgebra::{DMatrix, DVector};

use crate::error::{param, Error, Result};
use crate::fft::FftPair;
use crate::signal::{DualPolWaveform, SymbolFrame};
use crate::Complex64;

/// T/2-spaced 2x2 butterfly equalizer trained by block least squares.
#[derive(Debug, Clone, PartialEq)]
pub struct MmseEqualizer {
    /// `taps[out][in][i]`, applied as `z_out(k) = sum taps[out][in][i] r_in(2k + off + i - c)`.
    taps: [[Vec<Complex64>; 2]; 2],
    num_taps: usize,
    trained: bool,
    sample_offset: usize,
    training_mse: f64,
    regularized: bool,
}

impl MmseEqualizer {
    pub fn untrained(num_taps: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); num_taps];
        Self {
            taps: [[z.clone(), z.clone()], [z.clone(), z]],
            num_taps,
            trained: false,
            sample_offset: 0,
            training_mse: f64::NAN,
            regularized: false,
        }
    }

    pub fn taps(&self) -> &[[Vec<Complex64>; 2]; 2] {
        &self.taps
    }

    pub fn num_taps(&self) -> usize {
        self.num_taps
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    /// Received 2-sps sample index holding transmitted symbol 0.
    pub fn sample_offset(&self) -> usize {
        self.sample_offset
    }

    /// Whole-symbol part of the alignment.
    pub fn symbol_offset(&self) -> usize {
        self.sample_offset / 2
    }

    pub fn training_mse(&self) -> f64 {
        self.training_mse
    }

    /// True when the normal equations needed diagonal loading.
    pub fn regularized(&self) -> bool {
        self.regularized
    }

    fn window(&self, rx: &DualPolWaveform, k: usize, row: &mut Vec<Complex64>) {
        let n = rx.len();
        let c = self.num_taps / 2;
        let base = 2 * k + self.sample_offset + n - c;
        row.clear();
        for pol in [&rx.x, &rx.y] {
            for i in 0..self.num_taps {
                row.push(pol[(base + i) % n]);
            }
        }
    }
}

fn circular_xcorr(a: &[Complex64], b: &[Complex64], fft: &mut FftPair) -> Vec<Complex64> {
    let mut fa = a.to_vec();
    let mut fb = b.to_vec();
    fft.forward(&mut fa);
    fft.forward(&mut fb);
    for (u, v) in fa.iter_mut().zip(&fb) {
        *u *= v.conj();
    }
    fft.inverse(&mut fa);
    fa
}

/// Sample offset maximizing the pilot correlation over both polarizations and both T/2 phases.
fn align(rx: &DualPolWaveform, pilots: &SymbolFrame) -> usize {
    let n = rx.len() / 2;
    let mut fft = FftPair::new(n);
    let pad = |v: &[Complex64]| {
        let mut p = v.to_vec();
        p.resize(n, Complex64::new(0.0, 0.0));
        p
    };
    let (px, py) = (pad(&pilots.x), pad(&pilots.y));
    let mut best = (f64::NEG_INFINITY, 0);
    for phase in 0..2 {
        let dec = |v: &[Complex64]| (0..n).map(|k| v[2 * k + phase]).collect::<Vec<_>>();
        let (dx, dy) = (dec(&rx.x), dec(&rx.y));
        let mut metric = vec![0.0; n];
        for d in [&dx, &dy] {
            for p in [&px, &py] {
                for (m, c) in metric.iter_mut().zip(circular_xcorr(d, p, &mut fft)) {
                    *m += c.norm_sqr();
                }
            }
        }
        for (tau, &m) in metric.iter().enumerate() {
            if m > best.0 {
                best = (m, 2 * tau + phase);
            }
        }
    }
    best.1
}

/// Train on the pilot prefix of the transmitted frame.
///
/// The alignment between `rx` and the transmitted frame is found by pilot
/// correlation and stored in the equalizer.
pub fn mmse_train(rx: &DualPolWaveform, pilots: &SymbolFrame, num_taps: usize) -> Result<MmseEqualizer> {
    rx.validate()?;
    if num_taps == 0 {
        return param("equalizer needs at least one tap");
    }
    if pilots.len() < 10 * num_taps {
        return param(format!(
            "{} pilots are too few for {num_taps} taps (need at least {})",
            pilots.len(),
            10 * num_taps
        ));
    }
    if rx.len() % 2 != 0 || pilots.len() > rx.len() / 2 {
        return param("received waveform must be at 2 samples/symbol and cover the pilots");
    }
    let mut eq = MmseEqualizer::untrained(num_taps);
    eq.sample_offset = align(rx, pilots);
    let dim = 2 * num_taps;
    let mut r = DMatrix::<Complex64>::zeros(dim, dim);
    let mut b = [DVector::<Complex64>::zeros(dim), DVector::<Complex64>::zeros(dim)];
    let mut row = Vec::with_capacity(dim);
    for k in 0..pilots.len() {
        eq.window(rx, k, &mut row);
        for i in 0..dim {
            let ci = row[i].conj();
            for j in 0..dim {
                r[(i, j)] += ci * row[j];
            }
            b[0][i] += ci * pilots.x[k];
            b[1][i] += ci * pilots.y[k];
        }
    }
    // Minimum-norm solution: eigen-directions below 1e-10 of the largest are
    // dropped. Band-limited input leaves part of the T/2 spectrum empty, so the
    // normal matrix is routinely rank deficient.
    let eig = r.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    if !(top > 0.0) {
        return Err(Error::Numerical("MMSE training data carries no power".into()));
    }
    let keep: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > 1e-10 * top).collect();
    if keep.len() < dim {
        log::debug!("MMSE normal equations rank {} of {dim}, using pseudo-inverse", keep.len());
        eq.regularized = true;
    }
    let v = &eig.eigenvectors;
    for p in 0..2 {
        let mut w = DVector::<Complex64>::zeros(dim);
        for &i in &keep {
            let col = v.column(i);
            let c = col.dotc(&b[p]) / eig.eigenvalues[i];
            w += col * c;
        }
        eq.taps[p][0] = w.rows(0, num_taps).iter().copied().collect();
        eq.taps[p][1] = w.rows(num_taps, num_taps).iter().copied().collect();
    }
    eq.trained = true;
    let mut err = 0.0;
    for k in 0..pilots.len() {
        eq.window(rx, k, &mut row);
        let z = eq.output(&row);
        err += (z[0] - pilots.x[k]).norm_sqr() + (z[1] - pilots.y[k]).norm_sqr();
    }
    eq.training_mse = err / (2 * pilots.len()) as f64;
    Ok(eq)
}

impl MmseEqualizer {
    fn output(&self, row: &[Complex64]) -> [Complex64; 2] {
        let t = self.num_taps;
        let mut z = [Complex64::new(0.0, 0.0); 2];
        for (p, zp) in z.iter_mut().enumerate() {
            for q in 0..2 {
                for (w, r) in self.taps[p][q].iter().zip(&row[q * t..(q + 1) * t]) {
                    *zp += w * r;
                }
            }
        }
        z
    }
}

/// Equalize and decimate to 1 sample/symbol, aligned so index 0 is transmitted symbol 0.
pub fn mmse_apply(eq: &MmseEqualizer, rx: &DualPolWaveform) -> Result<SymbolFrame> {
    if !eq.trained {
        return Err(Error::State("MMSE equalizer used before training".into()));
    }
    rx.validate()?;
    if rx.len() % 2 != 0 {
        return param("received waveform must be at 2 samples/symbol");
    }
    let n = rx.len() / 2;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut row = Vec::with_capacity(2 * eq.num_taps);
    for k in 0..n {
        eq.window(rx, k, &mut row);
        let z = eq.output(&row);
        x.push(z[0]);
        y.push(z[1]);
    }
    SymbolFrame::new(x, y, rx.sample_rate / 2.0)
}
