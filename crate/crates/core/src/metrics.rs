//! SNR estimators, BER counting with confidence intervals, Q-factor, result records.

use std::ops::Range;

use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc_inv;

use crate::error::{param, Result};
use crate::signal::SymbolFrame;
use crate::turbo::Scheme;

/// Per-term ceiling of the mean-of-ratios estimator (60 dB).
pub const SNR_TERM_CLIP: f64 = 1e6;

fn db(v: f64) -> f64 {
    10.0 * v.log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrEstimate {
    /// `sum |A|^2 / sum |rx - A|^2` per polarization, dB.
    pub ratio_db: [f64; 2],
    /// `mean(|A|^2 / |rx - A|^2)` per polarization, dB.
    pub eq8_db: [f64; 2],
    /// Terms clipped at [`SNR_TERM_CLIP`].
    pub clipped: usize,
    ratio_lin: [f64; 2],
    eq8_lin: [f64; 2],
}

impl SnrEstimate {
    /// Ratio-of-sums over both polarizations.
    pub fn ratio_avg_db(&self) -> f64 {
        db((self.ratio_lin[0] + self.ratio_lin[1]) / 2.0)
    }

    pub fn eq8_avg_db(&self) -> f64 {
        db((self.eq8_lin[0] + self.eq8_lin[1]) / 2.0)
    }
}

/// SNR of `rx` against aligned `truth`, all symbols.
pub fn snr_estimate(rx: &SymbolFrame, truth: &SymbolFrame) -> Result<SnrEstimate> {
    snr_estimate_range(rx, truth, 0..rx.len())
}

/// SNR over the symbol indices in `range` only.
pub fn snr_estimate_range(rx: &SymbolFrame, truth: &SymbolFrame, range: Range<usize>) -> Result<SnrEstimate> {
    if rx.len() != truth.len() {
        return param(format!("frames differ in length: {} vs {}", rx.len(), truth.len()));
    }
    if range.end > rx.len() || range.len() < 1000 {
        return param(format!("SNR needs at least 1000 symbols inside the frame, got {range:?}"));
    }
    let mut ratio = [0.0; 2];
    let mut eq8 = [0.0; 2];
    let mut clipped = 0;
    for p in 0..2 {
        let (r, t) = (&rx.pol(p)[range.clone()], &truth.pol(p)[range.clone()]);
        let (mut s, mut e, mut m) = (0.0, 0.0, 0.0);
        for (a, b) in r.iter().zip(t) {
            let (ps, pe) = (b.norm_sqr(), (a - b).norm_sqr());
            s += ps;
            e += pe;
            let term = ps / pe;
            if !(term <= SNR_TERM_CLIP) {
                clipped += 1;
                m += SNR_TERM_CLIP;
            } else {
                m += term;
            }
        }
        ratio[p] = s / e;
        eq8[p] = m / r.len() as f64;
    }
    Ok(SnrEstimate {
        ratio_db: [db(ratio[0]), db(ratio[1])],
        eq8_db: [db(eq8[0]), db(eq8[1])],
        clipped,
        ratio_lin: ratio,
        eq8_lin: eq8,
    })
}

/// Bit error ratio with a 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerCount {
    pub errors: u64,
    pub bits: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BerCount {
    pub fn from_counts(errors: u64, bits: u64) -> Self {
        if bits == 0 {
            return Self { errors, bits, ber: 0.0, ci_low: 0.0, ci_high: 1.0 };
        }
        let z = 1.959_963_984_540_054;
        let n = bits as f64;
        let p = errors as f64 / n;
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Self {
            errors,
            bits,
            ber: p,
            ci_low: (center - half).max(0.0),
            ci_high: (center + half).min(1.0),
        }
    }

    /// BER above one half usually means a mislabelled or inverted bit stream.
    pub fn suspicious(&self) -> bool {
        self.ber > 0.5
    }

    pub fn merge(self, other: BerCount) -> Self {
        Self::from_counts(self.errors + other.errors, self.bits + other.bits)
    }
}

pub fn ber_count(decided: &[u8], truth: &[u8]) -> Result<BerCount> {
    if decided.len() != truth.len() {
        return param(format!(
            "bit sequences differ in length: {} vs {}",
            decided.len(),
            truth.len()
        ));
    }
    let errors = decided.iter().zip(truth).filter(|(a, b)| (*a ^ *b) & 1 != 0).count();
    Ok(BerCount::from_counts(errors as u64, decided.len() as u64))
}

/// `20 log10(sqrt 2 erfcinv(2 ber))`.
pub fn q2_from_ber(ber: f64) -> Result<f64> {
    if !(ber > 0.0 && ber < 0.5) {
        return param(format!("Q-factor needs 0 < BER < 0.5, got {ber}"));
    }
    Ok(20.0 * (2f64.sqrt() * erfc_inv(2.0 * ber)).log10())
}

/// Mean and 95% Student-t half-width.
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map(|d| d.inverse_cdf(0.975))
        .unwrap_or(f64::INFINITY);
    (mean, t * (var / n as f64).sqrt())
}

/// One result line.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricRecord {
    pub launch_power_dbm: f64,
    pub scheme: Scheme,
    pub channel_index: usize,
    pub snr_x_db: f64,
    pub snr_y_db: f64,
    pub snr_db: f64,
    pub pre_fec_ber: f64,
    /// Absent when no transmitted bits are known.
    pub post_fec_ber: Option<f64>,
    /// Absent when the pre-FEC BER is zero.
    pub q2_db: Option<f64>,
    pub iterations_used: usize,
    pub seed: u64,
    pub bit_count: u64,
    pub snr_eq8_db: f64,
}

impl MetricRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("metric records always serialize")
    }
}

/// Rotate every symbol by `exp(j theta)`; handy for checking estimators do no hidden alignment.
pub fn rotate(frame: &SymbolFrame, theta: f64) -> SymbolFrame {
    let r = Complex64::cis(theta);
    SymbolFrame {
        x: frame.x.iter().map(|v| v * r).collect(),
        y: frame.y.iter().map(|v| v * r).collect(),
        symbol_rate: frame.symbol_rate,
        source_bits: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fec::QamConstellation;
    use crate::rng::{purpose, stream};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn frame(n: usize, seed: u64) -> SymbolFrame {
        let c = QamConstellation::new(16).unwrap();
        let mut rng = stream(seed, &[purpose::TEST]);
        let mut pick = || (0..n).map(|_| c.points()[rng.random_range(0..16)]).collect::<Vec<_>>();
        let x = pick();
        let y = pick();
        SymbolFrame::new(x, y, 1.0).unwrap()
    }

    fn noisy(f: &SymbolFrame, snr_db: f64, seed: u64) -> SymbolFrame {
        let sigma = (0.5 * 10f64.powf(-snr_db / 10.0)).sqrt();
        let g = Normal::new(0.0, sigma).unwrap();
        let mut rng = stream(seed, &[purpose::TEST, 3]);
        let mut out = f.clone();
        for v in out.x.iter_mut().chain(out.y.iter_mut()) {
            *v += Complex64::new(g.sample(&mut rng), g.sample(&mut rng));
        }
        out
    }

    #[test]
    fn ratio_of_sums_is_consistent() {
        let f = frame(100_000, 1);
        let s = snr_estimate(&noisy(&f, 15.0, 2), &f).unwrap();
        assert!((s.ratio_avg_db() - 15.0).abs() < 0.1, "{}", s.ratio_avg_db());
        // Mean of ratios exceeds the ratio of means.
        assert!(s.eq8_avg_db() > s.ratio_avg_db() + 1.0);
    }

    #[test]
    fn rotation_is_not_hidden() {
        let f = frame(2000, 3);
        let s = snr_estimate(&rotate(&f, 0.1), &f).unwrap();
        let expect = -db((Complex64::cis(0.1) - 1.0).norm_sqr());
        assert!((s.ratio_avg_db() - expect).abs() < 1e-9);
    }

    #[test]
    fn exact_symbols_are_clipped() {
        let f = frame(1000, 4);
        let s = snr_estimate(&f, &f).unwrap();
        assert_eq!(s.clipped, 2000);
        assert!((s.eq8_avg_db() - 60.0).abs() < 1e-9);
    }

    #[test]
    fn snr_needs_enough_symbols() {
        let f = frame(100, 5);
        assert!(snr_estimate(&f, &f).is_err());
    }

    #[test]
    fn more_noise_lowers_both_estimates() {
        let f = frame(20_000, 6);
        let a = noisy(&f, 20.0, 7);
        let b = noisy(&a, 20.0, 8);
        let (sa, sb) = (snr_estimate(&a, &f).unwrap(), snr_estimate(&b, &f).unwrap());
        assert!(sb.ratio_avg_db() < sa.ratio_avg_db());
        assert!(sb.eq8_avg_db() < sa.eq8_avg_db());
    }

    #[test]
    fn ber_basics() {
        let a = vec![0u8, 1, 1, 0, 1];
        assert_eq!(ber_count(&a, &a).unwrap().ber, 0.0);
        let inv: Vec<u8> = a.iter().map(|b| b ^ 1).collect();
        let c = ber_count(&inv, &a).unwrap();
        assert_eq!(c.ber, 1.0);
        assert!(c.suspicious());
        assert!(ber_count(&a, &a[..3]).is_err());
    }

    #[test]
    fn wilson_interval() {
        let c = BerCount::from_counts(100, 1_000_000);
        assert_eq!(c.ber, 1e-4);
        assert!((c.ci_low - 0.822e-4).abs() < 0.005e-4, "{}", c.ci_low);
        assert!((c.ci_high - 1.216e-4).abs() < 0.005e-4, "{}", c.ci_high);
    }

    #[test]
    fn q2_values() {
        assert!((q2_from_ber(1e-3).unwrap() - 9.80).abs() < 0.01);
        assert!((q2_from_ber(2.7e-2).unwrap() - 5.7).abs() < 0.05);
        assert!(q2_from_ber(0.5).is_err());
        assert!(q2_from_ber(0.0).is_err());
    }

    #[test]
    fn mean_ci_matches_t_table() {
        let (m, h) = mean_ci(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        // t(0.975, 2) = 4.303
        assert!((h - 4.302_652_7 / 3f64.sqrt()).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn q2_strictly_decreasing(a in 1e-9f64..0.49, d in 1e-6f64..0.01) {
            let b = (a + d).min(0.4999);
            prop_assume!(b > a);
            prop_assert!(q2_from_ber(b).unwrap() < q2_from_ber(a).unwrap());
        }

        #[test]
        fn record_round_trips(p in -10.0f64..10.0, snr in 0.0f64..30.0, ber in 0.0f64..0.5, seed: u64, bits in 1u64..1u64 << 40, post: Option<f64>) {
            let r = MetricRecord {
                launch_power_dbm: p,
                scheme: Scheme::FecAssisted,
                channel_index: 1,
                snr_x_db: snr,
                snr_y_db: snr * 0.9,
                snr_db: snr * 0.95,
                pre_fec_ber: ber,
                post_fec_ber: post.map(|v| v.abs() % 0.5),
                q2_db: if ber > 0.0 { Some(q2_from_ber(ber).unwrap()) } else { None },
                iterations_used: 3,
                seed,
                bit_count: bits,
                snr_eq8_db: snr + 1.0,
            };
            let back: MetricRecord = serde_json::from_str(&r.to_json_line()).unwrap();
            prop_assert_eq!(back, r);
        }
    }
}
