use num_complex::Complex64;

use crate::error::{param, Result};
use crate::signal::SymbolFrame;

/// Square Gray-labelled QAM with unit mean energy.
///
/// `points[label]` is the point carrying `label`, whose most significant half
/// selects the in-phase level and the least significant half the quadrature level.
#[derive(Debug, Clone, PartialEq)]
pub struct QamConstellation {
    order: usize,
    bits: usize,
    points: Vec<Complex64>,
}

fn gray_to_binary(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

impl QamConstellation {
    pub fn new(order: usize) -> Result<Self> {
        let bits = order.trailing_zeros() as usize;
        if !order.is_power_of_two() || bits % 2 != 0 || order < 4 {
            return param(format!("unsupported QAM order {order}"));
        }
        let half = bits / 2;
        let side = 1usize << half;
        let norm = (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
        let level = |g: usize| (2.0 * gray_to_binary(g) as f64 - (side as f64 - 1.0)) / norm;
        let points = (0..order)
            .map(|label| Complex64::new(level(label >> half), level(label & (side - 1))))
            .collect();
        Ok(Self {
            order,
            bits,
            points,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Symbol for `bits_per_symbol` bits, MSB first.
    pub fn map(&self, bits: &[u8]) -> Complex64 {
        let label = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        self.points[label]
    }

    /// Label of the nearest point; ties resolve to the lowest label.
    pub fn nearest_label(&self, y: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, p) in self.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        best
    }

    pub fn decide(&self, y: Complex64) -> Complex64 {
        self.points[self.nearest_label(y)]
    }

    pub fn label_bits(&self, label: usize, out: &mut Vec<u8>) {
        for i in (0..self.bits).rev() {
            out.push(((label >> i) & 1) as u8);
        }
    }
}

/// Map bits to dual-polarization symbols; each group of `2 * bits_per_symbol`
/// bits feeds one x symbol then one y symbol.
pub fn map_symbols(bits: &[u8], c: &QamConstellation, symbol_rate: f64) -> Result<SymbolFrame> {
    let b = c.bits_per_symbol();
    if bits.len() % (2 * b) != 0 {
        return param(format!(
            "{} bits do not fill whole dual-polarization {}-QAM symbols",
            bits.len(),
            c.order()
        ));
    }
    let mut x = Vec::with_capacity(bits.len() / (2 * b));
    let mut y = Vec::with_capacity(bits.len() / (2 * b));
    for g in bits.chunks(2 * b) {
        x.push(c.map(&g[..b]));
        y.push(c.map(&g[b..]));
    }
    SymbolFrame::new(x, y, symbol_rate)
}

/// Nearest-point label bits in the bit order of [`map_symbols`].
pub fn demap_hard(syms: &SymbolFrame, c: &QamConstellation) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 * syms.len() * c.bits_per_symbol());
    for (x, y) in syms.x.iter().zip(&syms.y) {
        c.label_bits(c.nearest_label(*x), &mut out);
        c.label_bits(c.nearest_label(*y), &mut out);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemapMethod {
    /// Exact log-sum-exp over the constellation.
    #[default]
    LogMap,
    MaxLog,
}

/// Bit LLRs (positive favors 0) in the bit order of [`map_symbols`].
///
/// `noise_var` is the complex noise variance, given either once, per
/// polarization (`[x, y]`), or per symbol in mapping order (x0, y0, x1, ...).
/// With `prior_llrs` the output is the a-posteriori LLR including the prior;
/// subtract the prior for the extrinsic part.
pub fn demap_llr(
    syms: &SymbolFrame,
    c: &QamConstellation,
    noise_var: &[f64],
    prior_llrs: Option<&[f64]>,
    method: DemapMethod,
) -> Result<Vec<f64>> {
    let n = syms.len();
    let b = c.bits_per_symbol();
    if !(noise_var.len() == 1 || noise_var.len() == 2 || noise_var.len() == 2 * n) {
        return param(format!(
            "noise variance must have 1, 2 or {} entries, got {}",
            2 * n,
            noise_var.len()
        ));
    }
    if noise_var.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return param("noise variance must be positive and finite");
    }
    if let Some(p) = prior_llrs {
        if p.len() != 2 * n * b {
            return param(format!("expected {} prior LLRs, got {}", 2 * n * b, p.len()));
        }
    }
    let m = c.order();
    let mut out = vec![0.0; 2 * n * b];
    let mut metric = vec![0.0; m];
    for k in 0..n {
        for p in 0..2 {
            let idx = 2 * k + p;
            let var = match noise_var.len() {
                1 => noise_var[0],
                2 => noise_var[p],
                _ => noise_var[idx],
            };
            let y = syms.pol(p)[k];
            let base = idx * b;
            let prior = prior_llrs.map(|pr| &pr[base..base + b]);
            for (label, pt) in c.points().iter().enumerate() {
                let mut mt = -(y - pt).norm_sqr() / var;
                if let Some(pr) = prior {
                    for (i, l) in pr.iter().enumerate() {
                        if (label >> (b - 1 - i)) & 1 == 1 {
                            mt -= l;
                        }
                    }
                }
                metric[label] = mt;
            }
            for i in 0..b {
                let bit = b - 1 - i;
                let (mut m0, mut m1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for (label, &mt) in metric.iter().enumerate() {
                    if (label >> bit) & 1 == 0 {
                        m0 = m0.max(mt);
                    } else {
                        m1 = m1.max(mt);
                    }
                }
                out[base + i] = match method {
                    DemapMethod::MaxLog => m0 - m1,
                    DemapMethod::LogMap => {
                        let (mut s0, mut s1) = (0.0, 0.0);
                        for (label, &mt) in metric.iter().enumerate() {
                            if (label >> bit) & 1 == 0 {
                                s0 += (mt - m0).exp();
                            } else {
                                s1 += (mt - m1).exp();
                            }
                        }
                        m0 - m1 + s0.ln() - s1.ln()
                    }
                };
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn unit_energy() {
        for order in [4, 16, 64] {
            let c = QamConstellation::new(order).unwrap();
            let e: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
            assert!((e - 1.0).abs() < 1e-12);
        }
        assert!(QamConstellation::new(32).is_err());
    }

    #[test]
    fn gray_neighbors_differ_in_one_bit() {
        for order in [16, 64] {
            let c = QamConstellation::new(order).unwrap();
            let pts = c.points();
            let dmin = (pts[0] - pts[1]).norm().min(
                pts.iter().skip(1).map(|p| (p - pts[0]).norm()).fold(f64::INFINITY, f64::min),
            );
            let mut pairs = 0;
            for a in 0..order {
                for b in (a + 1)..order {
                    let d = pts[a] - pts[b];
                    let axis_neighbor = (d.re.abs() < 1e-9 || d.im.abs() < 1e-9)
                        && (d.norm() - dmin).abs() < 1e-9;
                    if axis_neighbor {
                        pairs += 1;
                        assert_eq!((a ^ b).count_ones(), 1, "{order}-QAM labels {a} {b}");
                    }
                }
            }
            let side = (order as f64).sqrt() as usize;
            assert_eq!(pairs, 2 * side * (side - 1));
        }
    }

    #[test]
    fn noiseless_round_trip() {
        let c = QamConstellation::new(64).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let bits: Vec<u8> = (0..1200).map(|_| rng.random_range(0..2)).collect();
        let f = map_symbols(&bits, &c, 1.0).unwrap();
        let llr = demap_llr(&f, &c, &[1e-6], None, DemapMethod::LogMap).unwrap();
        for (l, b) in llr.iter().zip(&bits) {
            assert_eq!(*l < 0.0, *b == 1);
        }
    }

    #[test]
    fn zero_prior_matches_no_prior() {
        let c = QamConstellation::new(16).unwrap();
        let f = SymbolFrame::new(
            vec![Complex64::new(0.3, -0.1), Complex64::new(-0.9, 0.7)],
            vec![Complex64::new(0.0, 0.2), Complex64::new(1.1, 1.1)],
            1.0,
        )
        .unwrap();
        let zero = vec![0.0; 16];
        for method in [DemapMethod::LogMap, DemapMethod::MaxLog] {
            let a = demap_llr(&f, &c, &[0.1], None, method).unwrap();
            let b = demap_llr(&f, &c, &[0.1], Some(&zero), method).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn prior_is_additive_for_single_bit_information() {
        // Posterior minus prior (extrinsic) does not depend on the prior of that same bit.
        let c = QamConstellation::new(16).unwrap();
        let f = SymbolFrame::new(vec![Complex64::new(0.2, -0.4)], vec![Complex64::new(0.1, 0.1)], 1.0).unwrap();
        let mut prior = vec![0.0; 8];
        prior[0] = 2.5;
        let a = demap_llr(&f, &c, &[0.2], None, DemapMethod::LogMap).unwrap();
        let b = demap_llr(&f, &c, &[0.2], Some(&prior), DemapMethod::LogMap).unwrap();
        assert!((b[0] - 2.5 - a[0]).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_noise_variance() {
        let c = QamConstellation::new(16).unwrap();
        let f = SymbolFrame::new(vec![Complex64::new(0.0, 0.0)], vec![Complex64::new(0.0, 0.0)], 1.0).unwrap();
        assert!(demap_llr(&f, &c, &[0.0], None, DemapMethod::LogMap).is_err());
        assert!(demap_llr(&f, &c, &[-1.0], None, DemapMethod::LogMap).is_err());
    }

    /// Closed-form square M-QAM symbol error rate at `es_n0` (linear).
    fn qam_ser(order: usize, es_n0: f64) -> f64 {
        let m = order as f64;
        let arg = (3.0 * es_n0 / (m - 1.0)).sqrt();
        let p = 2.0 * (1.0 - 1.0 / m.sqrt()) * 0.5 * statrs::function::erf::erfc(arg / std::f64::consts::SQRT_2);
        1.0 - (1.0 - p) * (1.0 - p)
    }

    #[test]
    fn hard_decisions_from_llr_signs_match_closed_form_ser() {
        let c = QamConstellation::new(16).unwrap();
        let es_n0 = 10f64.powf(1.0);
        let var = 1.0 / es_n0;
        let n = 100_000;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let bits: Vec<u8> = (0..2 * n * 4).map(|_| rng.random_range(0..2)).collect();
        let mut f = map_symbols(&bits, &c, 1.0).unwrap();
        let s = (var / 2.0).sqrt();
        for v in f.x.iter_mut().chain(f.y.iter_mut()) {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            *v += Complex64::new(a * s, b * s);
        }
        let llr = demap_llr(&f, &c, &[var], None, DemapMethod::LogMap).unwrap();
        let errs = llr
            .chunks(4)
            .zip(bits.chunks(4))
            .filter(|(l, b)| l.iter().zip(b.iter()).any(|(l, b)| (*l < 0.0) != (*b == 1)))
            .count();
        let ser = errs as f64 / (2 * n) as f64;
        let p = qam_ser(16, es_n0);
        let sigma = (p * (1.0 - p) / (2 * n) as f64).sqrt();
        assert!((ser - p).abs() < 3.0 * sigma, "ser {ser} vs {p} (sigma {sigma})");
    }

    #[test]
    fn mean_llr_magnitude_grows_with_snr() {
        let c = QamConstellation::new(64).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let bits: Vec<u8> = (0..12 * 4000).map(|_| rng.random_range(0..2)).collect();
        let clean = map_symbols(&bits, &c, 1.0).unwrap();
        let noise: Vec<Complex64> = (0..2 * clean.len())
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        let mut last = 0.0;
        for snr_db in [5.0, 10.0, 15.0, 20.0, 25.0] {
            let var = 10f64.powf(-snr_db / 10.0);
            let mut f = clean.clone();
            for (v, n) in f.x.iter_mut().chain(f.y.iter_mut()).zip(&noise) {
                *v += n * var.sqrt();
            }
            let llr = demap_llr(&f, &c, &[var], None, DemapMethod::LogMap).unwrap();
            let mean = llr.iter().map(|l| l.abs()).sum::<f64>() / llr.len() as f64;
            assert!(mean > last, "{snr_db} dB: {mean} <= {last}");
            last = mean;
        }
    }
}
