//! Decision-directed 2x2 RLS equalizer for slowly time-varying ISI.
//!
//! Each output polarization is `h_xx^H a_x + h_xy^H a_y` (resp. `h_yx`, `h_yy`),
//! where `a_p` holds the `N` received symbols centered on the symbol of
//! interest. One inverse correlation matrix is kept per input polarization and
//! shared by both filters fed from it.

use num_complex::Complex64;

use crate::error::{param, Result};
use crate::fec::QamConstellation;
use crate::signal::SymbolFrame;

/// Trace of `S` above which the state is treated as diverged.
const TRACE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct RlsState {
    /// `h[out][in]`, length `N` each.
    pub h: [[Vec<Complex64>; 2]; 2],
    /// Row-major `N x N` inverse correlation matrices `S_x`, `S_y`.
    pub s: [Vec<Complex64>; 2],
    pub lambda: f64,
    pub delta: f64,
    pub num_taps: usize,
    /// Window position of the symbol of interest.
    pub delay: usize,
    /// Number of times `S` was reset after exceeding the trace bound.
    pub resets: usize,
}

fn scaled_identity(n: usize, v: f64) -> Vec<Complex64> {
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        m[i * n + i] = Complex64::new(v, 0.0);
    }
    m
}

/// `S = I / delta`, center-spike direct taps, zero cross taps.
pub fn rls_init(num_taps: usize, lambda: f64, delta: f64) -> Result<RlsState> {
    if num_taps == 0 {
        return param("RLS needs at least one tap");
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return param(format!("forgetting factor must lie in (0, 1], got {lambda}"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return param(format!("RLS regularization must be positive, got {delta}"));
    }
    let delay = (num_taps - 1) / 2;
    let zero = vec![Complex64::new(0.0, 0.0); num_taps];
    let mut spike = zero.clone();
    spike[delay] = Complex64::new(1.0, 0.0);
    Ok(RlsState {
        h: [[spike.clone(), zero.clone()], [zero, spike]],
        s: [scaled_identity(num_taps, 1.0 / delta), scaled_identity(num_taps, 1.0 / delta)],
        lambda,
        delta,
        num_taps,
        delay,
        resets: 0,
    })
}

fn dot_h(h: &[Complex64], a: &[Complex64]) -> Complex64 {
    h.iter().zip(a).map(|(h, a)| h.conj() * a).sum()
}

impl RlsState {
    /// Filter outputs for the given windows without updating.
    pub fn output(&self, a: [&[Complex64]; 2]) -> [Complex64; 2] {
        [
            dot_h(&self.h[0][0], a[0]) + dot_h(&self.h[0][1], a[1]),
            dot_h(&self.h[1][0], a[0]) + dot_h(&self.h[1][1], a[1]),
        ]
    }

    /// Inverse correlation update; returns the gain vector `S(k+1) a`.
    fn update_s(&mut self, p: usize, a: &[Complex64]) -> Vec<Complex64> {
        let n = self.num_taps;
        let lambda = self.lambda;
        let s = &mut self.s[p];
        let sa: Vec<Complex64> = (0..n).map(|i| (0..n).map(|j| s[i * n + j] * a[j]).sum()).collect();
        let denom = lambda + a.iter().zip(&sa).map(|(a, v)| a.conj() * v).sum::<Complex64>().re;
        // S a a^H S = sa sa^H because S is Hermitian.
        for i in 0..n {
            for j in 0..n {
                s[i * n + j] = (s[i * n + j] - sa[i] * sa[j].conj() / denom) / lambda;
            }
        }
        for i in 0..n {
            s[i * n + i].im = 0.0;
            for j in i + 1..n {
                let m = (s[i * n + j] + s[j * n + i].conj()) * 0.5;
                s[i * n + j] = m;
                s[j * n + i] = m.conj();
            }
        }
        let trace: f64 = (0..n).map(|i| s[i * n + i].re).sum();
        if !(trace.is_finite() && trace < TRACE_LIMIT) {
            *s = scaled_identity(n, 1.0 / self.delta);
            self.resets += 1;
        }
        (0..n).map(|i| (0..n).map(|j| s[i * n + j] * a[j]).sum()).collect()
    }
}

/// One recursion: filter, error against `desired`, update `S_x`, `S_y` and all four tap vectors.
pub fn rls_step(
    state: &mut RlsState,
    a_x: &[Complex64],
    a_y: &[Complex64],
    desired: [Complex64; 2],
) -> Result<[Complex64; 2]> {
    let n = state.num_taps;
    if a_x.len() != n || a_y.len() != n {
        return param(format!("RLS windows must hold {n} symbols"));
    }
    let out = state.output([a_x, a_y]);
    let e = [desired[0] - out[0], desired[1] - out[1]];
    let g = [state.update_s(0, a_x), state.update_s(1, a_y)];
    for (o, eo) in e.iter().enumerate() {
        for (i, gi) in g.iter().enumerate() {
            for (h, v) in state.h[o][i].iter_mut().zip(gi) {
                *h += eo.conj() * v;
            }
        }
    }
    Ok(out)
}

/// Where the desired symbols for the error come from.
#[derive(Debug, Clone)]
pub enum DecisionSource {
    /// Nearest constellation point to the current output.
    HardDecision(QamConstellation),
    /// Symbols regenerated from decoder output.
    FecFeedback(SymbolFrame),
    /// Transmitted symbols.
    Genie(SymbolFrame),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RlsParams {
    pub num_taps: usize,
    pub lambda: f64,
    /// `delta` relative to the mean input symbol power.
    pub delta_rel: f64,
}

impl Default for RlsParams {
    fn default() -> Self {
        Self {
            num_taps: 5,
            lambda: 0.99,
            delta_rel: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RlsOutput {
    pub frame: SymbolFrame,
    /// Mean `|desired - output|^2` over the frame.
    pub residual_mse: f64,
    pub resets: usize,
}

fn window(v: &[Complex64], k: usize, n: usize, d: usize, out: &mut Vec<Complex64>) {
    out.clear();
    for i in 0..n {
        let idx = k as i64 + d as i64 - i as i64;
        out.push(if (0..v.len() as i64).contains(&idx) { v[idx as usize] } else { Complex64::new(0.0, 0.0) });
    }
}

/// Sequential pass over the frame; output `k` is aligned with input `k`.
pub fn rls_equalize_frame(frame: &SymbolFrame, source: &DecisionSource, params: &RlsParams) -> Result<RlsOutput> {
    let reference = match source {
        DecisionSource::HardDecision(_) => None,
        DecisionSource::FecFeedback(f) | DecisionSource::Genie(f) => {
            if f.len() != frame.len() {
                return param(format!(
                    "decision reference has {} symbols but frame has {}",
                    f.len(),
                    frame.len()
                ));
            }
            Some(f)
        }
    };
    let power = frame.mean_power();
    let mut st = rls_init(params.num_taps, params.lambda, params.delta_rel * power.max(f64::MIN_POSITIVE))?;
    let (n, d) = (st.num_taps, st.delay);
    let mut x = Vec::with_capacity(frame.len());
    let mut y = Vec::with_capacity(frame.len());
    let (mut wx, mut wy) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut err = 0.0;
    for k in 0..frame.len() {
        window(&frame.x, k, n, d, &mut wx);
        window(&frame.y, k, n, d, &mut wy);
        let desired = match (source, reference) {
            (DecisionSource::HardDecision(c), _) => {
                let z = st.output([&wx, &wy]);
                [c.decide(z[0]), c.decide(z[1])]
            }
            (_, Some(r)) => [r.x[k], r.y[k]],
            _ => unreachable!(),
        };
        let z = rls_step(&mut st, &wx, &wy, desired)?;
        err += (desired[0] - z[0]).norm_sqr() + (desired[1] - z[1]).norm_sqr();
        x.push(z[0]);
        y.push(z[1]);
    }
    let mut out = SymbolFrame::new(x, y, frame.symbol_rate)?;
    out.source_bits = frame.source_bits.clone();
    Ok(RlsOutput {
        frame: out,
        residual_mse: err / (2 * frame.len()).max(1) as f64,
        resets: st.resets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{purpose, stream};
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn qam_frame(n: usize, seed: u64) -> SymbolFrame {
        let c = QamConstellation::new(16).unwrap();
        let mut rng = stream(seed, &[purpose::TEST]);
        let mut pick = || (0..n).map(|_| c.points()[rng.random_range(0..16)]).collect::<Vec<_>>();
        let x = pick();
        let y = pick();
        SymbolFrame::new(x, y, 1.0).unwrap()
    }

    fn snr_db(rx: &[Complex64], tx: &[Complex64]) -> f64 {
        let s: f64 = tx.iter().map(|v| v.norm_sqr()).sum();
        let e: f64 = rx.iter().zip(tx).map(|(a, b)| (a - b).norm_sqr()).sum();
        10.0 * (s / e).log10()
    }

    fn add_noise(f: &mut SymbolFrame, snr_db: f64, seed: u64) {
        let sigma = (0.5 * 10f64.powf(-snr_db / 10.0)).sqrt();
        let g = Normal::new(0.0, sigma).unwrap();
        let mut rng = stream(seed, &[purpose::TEST, 5]);
        for v in f.x.iter_mut().chain(f.y.iter_mut()) {
            *v += Complex64::new(g.sample(&mut rng), g.sample(&mut rng));
        }
    }

    /// Time-varying ISI `A(k) + j sum_n H_n(k) A(k - n)` with sinusoidal coefficients of period `period`.
    fn tv_isi(tx: &SymbolFrame, amp: f64, period: f64) -> SymbolFrame {
        let mut rx = tx.clone();
        let j = Complex64::new(0.0, 1.0);
        let n = tx.len();
        for k in 0..n {
            let w = 2.0 * std::f64::consts::PI * k as f64 / period;
            let (h0, h1, c) = (amp * w.sin(), 0.5 * amp * w.cos(), 0.3 * amp * (w + 1.0).sin());
            let km1 = (k + n - 1) % n;
            rx.x[k] += j * (h0 * tx.x[k] + h1 * tx.x[km1] + c * tx.y[k]);
            rx.y[k] += j * (h0 * tx.y[k] + h1 * tx.y[km1] - c * tx.x[k]);
        }
        rx
    }

    #[test]
    fn init_single_tap() {
        let st = rls_init(1, 0.99, 1.0).unwrap();
        assert_eq!(st.s[0], vec![Complex64::new(1.0, 0.0)]);
        assert_eq!(st.h[0][0], vec![Complex64::new(1.0, 0.0)]);
        assert_eq!(st.delay, 0);
        assert!(rls_init(0, 0.99, 1.0).is_err());
        assert!(rls_init(3, 1.5, 1.0).is_err());
        assert!(rls_init(3, 0.99, 0.0).is_err());
    }

    #[test]
    fn zero_error_keeps_taps() {
        let mut st = rls_init(5, 0.99, 0.1).unwrap();
        let f = qam_frame(5, 1);
        let before = st.h.clone();
        let z = st.output([&f.x, &f.y]);
        rls_step(&mut st, &f.x, &f.y, z).unwrap();
        assert_eq!(st.h, before);
        assert!(rls_step(&mut st, &f.x[..4], &f.y, z).is_err());
    }

    #[test]
    fn identity_channel_passes_through() {
        let f = qam_frame(3000, 2);
        let c = QamConstellation::new(16).unwrap();
        for src in [DecisionSource::HardDecision(c), DecisionSource::Genie(f.clone()), DecisionSource::FecFeedback(f.clone())] {
            let out = rls_equalize_frame(&f, &src, &RlsParams::default()).unwrap();
            for (a, b) in out.frame.x.iter().zip(&f.x).skip(100) {
                assert!((a - b).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn unit_forgetting_matches_regularized_batch_ls() {
        let n = 3;
        let delta = 0.05;
        let mut st = rls_init(n, 1.0, delta).unwrap();
        let h0 = st.h[0][0].clone();
        let mut rng = stream(3, &[purpose::TEST]);
        let zero = vec![Complex64::new(0.0, 0.0); n];
        let mut r = DMatrix::<Complex64>::identity(n, n) * Complex64::new(delta, 0.0);
        let mut b = DVector::<Complex64>::from_vec(h0.clone()) * Complex64::new(delta, 0.0);
        for _ in 0..500 {
            let a: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let d = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            rls_step(&mut st, &a, &zero, [d, Complex64::new(0.0, 0.0)]).unwrap();
            let av = DVector::from_vec(a);
            r += &av * av.adjoint();
            b += &av * d.conj();
        }
        let w = r.lu().solve(&b).unwrap();
        for (u, v) in st.h[0][0].iter().zip(w.iter()) {
            assert!((u - v).norm() < 1e-6, "{u} vs {v}");
        }
    }

    #[test]
    fn inverse_correlation_stays_hermitian() {
        let mut st = rls_init(5, 0.99, 0.01).unwrap();
        let mut rng = stream(4, &[purpose::TEST]);
        for _ in 0..100_000 {
            let mut w = || (0..5).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect::<Vec<_>>();
            let (a, b) = (w(), w());
            rls_step(&mut st, &a, &b, [a[2], b[2]]).unwrap();
        }
        for s in &st.s {
            for i in 0..5 {
                for j in 0..5 {
                    assert!((s[i * 5 + j] - s[j * 5 + i].conj()).norm() < 1e-8);
                }
            }
        }
        assert_eq!(st.resets, 0);
    }

    #[test]
    fn dead_input_triggers_reset_not_overflow() {
        let mut st = rls_init(2, 0.98, 1.0).unwrap();
        let z = vec![Complex64::new(0.0, 0.0); 2];
        for _ in 0..3000 {
            rls_step(&mut st, &z, &z, [Complex64::new(0.0, 0.0); 2]).unwrap();
        }
        assert!(st.resets > 0);
        assert!(st.s[0].iter().all(|v| v.re.is_finite()));
    }

    #[test]
    fn inverts_static_unitary_mixing() {
        let tx = qam_frame(6000, 5);
        let (c, s) = (Complex64::new(0.6, 0.3), Complex64::new(0.0, (1.0f64 - 0.45).sqrt()));
        let mut rx = tx.clone();
        for k in 0..tx.len() {
            rx.x[k] = c * tx.x[k] + s * tx.y[k];
            rx.y[k] = -s.conj() * tx.x[k] + c.conj() * tx.y[k];
        }
        add_noise(&mut rx, 20.0, 6);
        let p = RlsParams { num_taps: 5, lambda: 0.999, delta_rel: 1.0 };
        let out = rls_equalize_frame(&rx, &DecisionSource::Genie(tx.clone()), &p).unwrap();
        let got = (snr_db(&out.frame.x[2000..], &tx.x[2000..]) + snr_db(&out.frame.y[2000..], &tx.y[2000..])) / 2.0;
        // Unitary channel with white noise: LS bound is the channel SNR.
        assert!(20.0 - got < 1.0, "{got}");
    }

    #[test]
    fn tracks_slow_perturbation() {
        let tx = qam_frame(20_000, 7);
        let mut rx = tv_isi(&tx, 0.15, 5000.0);
        add_noise(&mut rx, 20.0, 8);
        let before = snr_db(&rx.x, &tx.x);
        let out = rls_equalize_frame(&rx, &DecisionSource::Genie(tx.clone()), &RlsParams::default()).unwrap();
        let after = snr_db(&out.frame.x[500..], &tx.x[500..]);
        assert!(after > before + 1.0, "{before} -> {after}");
    }

    #[test]
    fn fast_perturbation_gives_no_gain() {
        let tx = qam_frame(20_000, 9);
        let mut rx = tv_isi(&tx, 0.05, 3.3);
        add_noise(&mut rx, 20.0, 10);
        let before = snr_db(&rx.x, &tx.x);
        let p = RlsParams { lambda: 0.999, ..RlsParams::default() };
        let out = rls_equalize_frame(&rx, &DecisionSource::Genie(tx.clone()), &p).unwrap();
        let after = snr_db(&out.frame.x[2000..], &tx.x[2000..]);
        assert!((after - before).abs() < 0.1, "{before} -> {after}");
        assert_eq!(out.resets, 0);
    }

    #[test]
    fn genie_beats_hard_decision_beats_nothing() {
        let tx = qam_frame(20_000, 11);
        let mut rx = tv_isi(&tx, 0.2, 4000.0);
        add_noise(&mut rx, 15.0, 12);
        let c = QamConstellation::new(16).unwrap();
        let p = RlsParams::default();
        let none = snr_db(&rx.x[500..], &tx.x[500..]);
        let hd = rls_equalize_frame(&rx, &DecisionSource::HardDecision(c.clone()), &p).unwrap();
        let genie = rls_equalize_frame(&rx, &DecisionSource::Genie(tx.clone()), &p).unwrap();
        let hd = snr_db(&hd.frame.x[500..], &tx.x[500..]);
        let genie = snr_db(&genie.frame.x[500..], &tx.x[500..]);
        assert!(genie >= hd && hd >= none, "{genie} {hd} {none}");
    }

    #[test]
    fn regularization_changes_convergence_speed_only() {
        let tx = qam_frame(6000, 14);
        let mut rx = tx.clone();
        for k in 0..tx.len() {
            rx.x[k] = tx.x[k] * Complex64::new(0.8, 0.6);
            rx.y[k] = tx.y[k] * Complex64::new(0.6, -0.8);
        }
        add_noise(&mut rx, 20.0, 15);
        let err = |delta_rel: f64| {
            let p = RlsParams { lambda: 0.999, delta_rel, ..RlsParams::default() };
            let out = rls_equalize_frame(&rx, &DecisionSource::Genie(tx.clone()), &p).unwrap();
            let early = snr_db(&out.frame.x[..50], &tx.x[..50]);
            (early, snr_db(&out.frame.x[3000..], &tx.x[3000..]))
        };
        let (fast_early, fast_late) = err(0.01);
        let (slow_early, slow_late) = err(100.0);
        assert!(fast_late > 19.0 && slow_late > 19.0, "{fast_late} {slow_late}");
        assert!((fast_early - slow_early).abs() > 0.5, "{fast_early} {slow_early}");
    }

    #[test]
    fn reference_length_checked() {
        let f = qam_frame(10, 13);
        let short = qam_frame(5, 13);
        assert!(rls_equalize_frame(&f, &DecisionSource::Genie(short), &RlsParams::default()).is_err());
    }
}
