use num_complex::Complex64;

use super::coupling::CouplingMatrix;
use crate::error::{param, Result};
use crate::fec::QamConstellation;
use crate::signal::SymbolFrame;

/// Which cross-polarization terms enter the additive distortion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossPolForm {
    /// Each cross-polarization triple product counted once: the `m != 0, n != 0`
    /// terms plus the `n = 0` terms `A_y(0) A_y*(m) A_x(m) C(m, 0)`.
    #[default]
    SingleCount,
    /// Second cross-polarization sum taken over all `n`, repeating the `n != 0` terms.
    AsPrinted,
}

/// Treatment of candidates beyond the frame ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeMode {
    /// Symbols outside the frame are zero.
    #[default]
    ZeroPad,
    /// The frame repeats periodically.
    Circular,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NliOptions {
    pub cross_pol: CrossPolForm,
    /// Include the `C(0, 0)` term acting on the symbol itself in the phase.
    pub include_self_term: bool,
    pub edge: EdgeMode,
    /// Remove the frame-mean phase (a constant rotation the linear equalizer already absorbs).
    pub center_phase: bool,
}

impl Default for NliOptions {
    fn default() -> Self {
        Self {
            cross_pol: CrossPolForm::SingleCount,
            include_self_term: true,
            edge: EdgeMode::ZeroPad,
            center_phase: false,
        }
    }
}

impl NliOptions {
    /// Settings for periodic simulated frames after MMSE equalization.
    pub fn periodic() -> Self {
        Self {
            edge: EdgeMode::Circular,
            center_phase: true,
            ..Self::default()
        }
    }
}

/// Per-symbol additive (`delta`) and phase (`phi`, rad) distortion.
#[derive(Debug, Clone, PartialEq)]
pub struct NliEstimate {
    pub delta_x: Vec<Complex64>,
    pub delta_y: Vec<Complex64>,
    pub phi_x: Vec<f64>,
    pub phi_y: Vec<f64>,
}

impl NliEstimate {
    pub fn zeros(n: usize) -> Self {
        Self {
            delta_x: vec![Complex64::new(0.0, 0.0); n],
            delta_y: vec![Complex64::new(0.0, 0.0); n],
            phi_x: vec![0.0; n],
            phi_y: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.delta_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta_x.is_empty()
    }

    /// Subtract each polarization's mean phase.
    pub fn center_phase(&mut self) {
        for phi in [&mut self.phi_x, &mut self.phi_y] {
            let mean = phi.iter().sum::<f64>() / phi.len().max(1) as f64;
            phi.iter_mut().for_each(|p| *p -= mean);
        }
    }
}

/// Unscaled sums: additive part and the complex phase sum whose imaginary part is `phi`.
struct RawNli {
    delta: [Vec<Complex64>; 2],
    xi: [Vec<Complex64>; 2],
}

fn padded(v: &[Complex64], margin: usize, edge: EdgeMode) -> Vec<Complex64> {
    let n = v.len() as i64;
    (0..v.len() + 2 * margin)
        .map(|i| {
            let k = i as i64 - margin as i64;
            match edge {
                EdgeMode::Circular => v[k.rem_euclid(n) as usize],
                EdgeMode::ZeroPad if (0..n).contains(&k) => v[k as usize],
                EdgeMode::ZeroPad => Complex64::new(0.0, 0.0),
            }
        })
        .collect()
}

fn raw_nli(cands: &SymbolFrame, matrix: &CouplingMatrix, opts: &NliOptions) -> Result<RawNli> {
    let n = cands.len();
    let l = matrix.memory();
    if n <= 2 * l {
        return param(format!("frame of {n} symbols is too short for memory {l}"));
    }
    let margin = 2 * l;
    let ax = padded(&cands.x, margin, opts.edge);
    let ay = padded(&cands.y, margin, opts.edge);
    let zero = Complex64::new(0.0, 0.0);
    let mut dx = vec![zero; n];
    let mut dy = vec![zero; n];
    let mut xx = vec![zero; n];
    let mut xy = vec![zero; n];
    let p0 = matrix.p0();
    let at = |k: usize, off: i32| (k as i64 + margin as i64 + off as i64) as usize;
    for e in matrix.entries() {
        let c = e.c * p0;
        let (m, nn) = (e.m, e.n);
        if m != 0 && nn != 0 {
            let twice = opts.cross_pol == CrossPolForm::AsPrinted;
            for k in 0..n {
                let (xn, xmn, xm) = (ax[at(k, nn)], ax[at(k, m + nn)].conj(), ax[at(k, m)]);
                let (yn, ymn, ym) = (ay[at(k, nn)], ay[at(k, m + nn)].conj(), ay[at(k, m)]);
                let (sx, sy) = (xn * xmn, yn * ymn);
                let mut tx = (sx + sy) * xm;
                let mut ty = (sy + sx) * ym;
                if twice {
                    tx += sy * xm;
                    ty += sx * ym;
                }
                dx[k] += c * tx;
                dy[k] += c * ty;
            }
        } else if m != 0 {
            for k in 0..n {
                let (x0, y0) = (ax[at(k, 0)], ay[at(k, 0)]);
                let (xm, ym) = (ax[at(k, m)], ay[at(k, m)]);
                dx[k] += c * y0 * ym.conj() * xm;
                dy[k] += c * x0 * xm.conj() * ym;
                let (px, py) = (xm.norm_sqr(), ym.norm_sqr());
                xx[k] += c * (2.0 * px + py);
                xy[k] += c * (2.0 * py + px);
            }
        } else if nn == 0 && opts.include_self_term {
            for k in 0..n {
                let (px, py) = (cands.x[k].norm_sqr(), cands.y[k].norm_sqr());
                xx[k] += c * (2.0 * px + py);
                xy[k] += c * (2.0 * py + px);
            }
        }
    }
    Ok(RawNli {
        delta: [dx, dy],
        xi: [xx, xy],
    })
}

fn finish(raw: RawNli, scale: Complex64, center: bool) -> NliEstimate {
    let [dx, dy] = raw.delta;
    let [xx, xy] = raw.xi;
    let phase = |v: Vec<Complex64>| v.into_iter().map(|z| (scale * z).im).collect::<Vec<_>>();
    let mut est = NliEstimate {
        delta_x: dx.into_iter().map(|v| v * scale).collect(),
        delta_y: dy.into_iter().map(|v| v * scale).collect(),
        phi_x: phase(xx),
        phi_y: phase(xy),
    };
    if center {
        est.center_phase();
    }
    est
}

/// NLI of each symbol given candidate transmitted symbols, default options.
pub fn estimate_nli(cands: &SymbolFrame, matrix: &CouplingMatrix) -> Result<NliEstimate> {
    estimate_nli_with(cands, matrix, &NliOptions::default())
}

pub fn estimate_nli_with(
    cands: &SymbolFrame,
    matrix: &CouplingMatrix,
    opts: &NliOptions,
) -> Result<NliEstimate> {
    let raw = raw_nli(cands, matrix, opts)?;
    Ok(finish(raw, matrix.scale(), opts.center_phase))
}

/// `rx exp(-j phi) - delta`, the inverse of the distortion model.
pub fn compensate(rx: &SymbolFrame, nli: &NliEstimate) -> Result<SymbolFrame> {
    if rx.len() != nli.len() {
        return param(format!(
            "NLI estimate covers {} symbols but frame has {}",
            nli.len(),
            rx.len()
        ));
    }
    let apply = |r: &[Complex64], d: &[Complex64], p: &[f64]| {
        r.iter()
            .zip(d)
            .zip(p)
            .map(|((r, d), p)| r * Complex64::cis(-p) - d)
            .collect::<Vec<_>>()
    };
    Ok(SymbolFrame {
        x: apply(&rx.x, &nli.delta_x, &nli.phi_x),
        y: apply(&rx.y, &nli.delta_y, &nli.phi_y),
        symbol_rate: rx.symbol_rate,
        source_bits: rx.source_bits.clone(),
    })
}

/// Nearest constellation point per symbol.
pub fn hard_decide(rx: &SymbolFrame, c: &QamConstellation) -> SymbolFrame {
    let dec = |v: &[Complex64]| v.iter().map(|&s| c.decide(s)).collect();
    SymbolFrame {
        x: dec(&rx.x),
        y: dec(&rx.y),
        symbol_rate: rx.symbol_rate,
        source_bits: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationStatus {
    Calibrated,
    /// The model predicts no distortion on this frame; the matrix is returned unchanged.
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationReport {
    pub status: CalibrationStatus,
    pub scale: Complex64,
    /// Energy of `rx - tx`.
    pub residual_before: f64,
    /// Energy left after removing the fitted model.
    pub residual_after: f64,
}

impl CalibrationReport {
    /// `residual_after / residual_before`.
    pub fn residual_ratio(&self) -> f64 {
        self.residual_after / self.residual_before
    }
}

/// Least-squares complex scale on the coefficients, fitted to a frame with known transmitted symbols.
///
/// Uses the first-order expansion `rx - tx ~ s dA + j Im(s X) tx`, which is
/// linear in `(Re s, Im s)`.
pub fn calibrate_scale(
    matrix: &CouplingMatrix,
    rx: &SymbolFrame,
    tx: &SymbolFrame,
    opts: &NliOptions,
) -> Result<(CouplingMatrix, CalibrationReport)> {
    if rx.len() != tx.len() {
        return param("received and transmitted frames differ in length");
    }
    if rx.len() < 10_000 {
        return param(format!("calibration needs at least 10000 symbols, got {}", rx.len()));
    }
    let mut raw = raw_nli(tx, matrix, opts)?;
    if opts.center_phase {
        for xi in raw.xi.iter_mut() {
            let mean = xi.iter().sum::<Complex64>() / xi.len() as f64;
            xi.iter_mut().for_each(|v| *v -= mean);
        }
    }
    let l = matrix.memory();
    let range = match opts.edge {
        EdgeMode::Circular => 0..rx.len(),
        EdgeMode::ZeroPad => l..rx.len() - l,
    };
    let j = Complex64::new(0.0, 1.0);
    let (mut uu, mut uv, mut vv, mut ur, mut vr, mut rr) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let dot = |a: Complex64, b: Complex64| (a.conj() * b).re;
    let mut terms = Vec::with_capacity(2 * range.len());
    for p in 0..2 {
        let (r, t) = (rx.pol(p), tx.pol(p));
        for k in range.clone() {
            let d = raw.delta[p][k];
            let xi = raw.xi[p][k];
            let u = d + j * xi.im * t[k];
            let v = j * d + j * xi.re * t[k];
            let res = r[k] - t[k];
            uu += dot(u, u);
            uv += dot(u, v);
            vv += dot(v, v);
            ur += dot(u, res);
            vr += dot(v, res);
            rr += res.norm_sqr();
            terms.push((u, v, res));
        }
    }
    let det = uu * vv - uv * uv;
    if !(uu > 0.0) || det <= 1e-12 * uu * vv {
        let report = CalibrationReport {
            status: CalibrationStatus::Skipped,
            scale: matrix.scale(),
            residual_before: rr,
            residual_after: rr,
        };
        return Ok((matrix.clone(), report));
    }
    let a = (vv * ur - uv * vr) / det;
    let b = (uu * vr - uv * ur) / det;
    let after: f64 = terms.iter().map(|(u, v, r)| (r - u * a - v * b).norm_sqr()).sum();
    let s = Complex64::new(a, b);
    let report = CalibrationReport {
        status: CalibrationStatus::Calibrated,
        scale: s,
        residual_before: rr,
        residual_after: after,
    };
    Ok((matrix.clone().with_scale(s), report))
}
