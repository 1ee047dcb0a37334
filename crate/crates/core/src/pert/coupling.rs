use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;

use super::quad::gauss_legendre;
use crate::error::{param, Error, Result};
use crate::fiber::{LinkConfig, MANAKOV_FACTOR};
use crate::signal::RrcFilterSpec;

/// Gaussian stand-in `exp(-t^2 / (2 tau^2))` for the transmitted pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPulse {
    /// s
    pub tau: f64,
    /// Symbol period, s.
    pub period: f64,
}

impl GaussianPulse {
    /// Gaussian whose power spectrum has the same variance as the RRC pulse's.
    pub fn matched_to(spec: &RrcFilterSpec, symbol_rate: f64) -> Result<Self> {
        spec.validate()?;
        if !(symbol_rate > 0.0) {
            return param(format!("symbol rate must be positive, got {symbol_rate}"));
        }
        let half = spec.bandwidth(symbol_rate) / 2.0;
        let steps = 200_000;
        let df = 2.0 * half / steps as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..=steps {
            let f = -half + i as f64 * df;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            let p = spec.frequency_response(f, symbol_rate).powi(2) * w;
            num += f * f * p;
            den += p;
        }
        let var = num / den;
        Ok(Self {
            tau: 1.0 / (8.0 * PI * PI * var).sqrt(),
            period: 1.0 / symbol_rate,
        })
    }

    /// Pulse energy at unit peak amplitude.
    pub fn energy(&self) -> f64 {
        self.tau * PI.sqrt()
    }

    /// Peak power per polarization for a channel launch power of `p_ch` watts (both polarizations).
    pub fn peak_power(&self, p_ch: f64) -> f64 {
        p_ch * self.period / (2.0 * self.energy())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingEntry {
    pub m: i32,
    pub n: i32,
    pub c: Complex64,
}

/// Sparse coupling coefficients `C(m, n)`, `m, n` in `[-L, L]`, sorted by magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    entries: Vec<CouplingEntry>,
    memory: usize,
    cutoff_db: f64,
    scale: Complex64,
    p0: f64,
}

impl CouplingMatrix {
    /// Build from explicit entries; `(0, 0)` must be present.
    pub fn from_entries(
        memory: usize,
        cutoff_db: f64,
        p0: f64,
        mut entries: Vec<CouplingEntry>,
    ) -> Result<Self> {
        let l = memory as i32;
        if let Some(e) = entries.iter().find(|e| e.m.abs() > l || e.n.abs() > l) {
            return param(format!("entry ({}, {}) outside memory {memory}", e.m, e.n));
        }
        if !entries.iter().any(|e| e.m == 0 && e.n == 0) {
            return param("coupling matrix must contain C(0,0)");
        }
        if entries.iter().any(|e| !e.c.re.is_finite() || !e.c.im.is_finite()) || !p0.is_finite() {
            return param("coupling coefficients must be finite");
        }
        sort_entries(&mut entries);
        Ok(Self {
            entries,
            memory,
            cutoff_db,
            scale: Complex64::new(1.0, 0.0),
            p0,
        })
    }

    pub fn entries(&self) -> &[CouplingEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn cutoff_db(&self) -> f64 {
        self.cutoff_db
    }

    /// Complex factor applied to every coefficient during estimation.
    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    pub fn with_scale(mut self, scale: Complex64) -> Self {
        self.scale = scale;
        self
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn with_p0(mut self, p0: f64) -> Self {
        self.p0 = p0;
        self
    }

    /// Retained entries over `(2L + 1)^2`.
    pub fn retained_fraction(&self) -> f64 {
        let side = (2 * self.memory + 1) as f64;
        self.entries.len() as f64 / (side * side)
    }

    pub fn get(&self, m: i32, n: i32) -> Option<Complex64> {
        self.entries.iter().find(|e| e.m == m && e.n == n).map(|e| e.c)
    }

    pub fn c00(&self) -> Complex64 {
        self.get(0, 0).expect("C(0,0) is always retained")
    }

    /// Drop entries weaker than `cutoff_db` (amplitude) relative to `|C(0,0)|`.
    pub fn pruned(&self, cutoff_db: f64) -> Self {
        let thr = self.c00().norm() * 10f64.powf(cutoff_db / 20.0);
        Self {
            entries: self
                .entries
                .iter()
                .filter(|e| (e.m == 0 && e.n == 0) || e.c.norm() >= thr)
                .copied()
                .collect(),
            cutoff_db,
            ..self.clone()
        }
    }
}

fn sort_entries(entries: &mut [CouplingEntry]) {
    entries.sort_by(|a, b| {
        b.c.norm()
            .total_cmp(&a.c.norm())
            .then(a.m.cmp(&b.m))
            .then(a.n.cmp(&b.n))
    });
}

/// Quadrature nodes along the whole link: accumulated `beta2 z`, weight times `(8/9) gamma exp(-alpha z)`.
fn link_nodes(link: &LinkConfig, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let gl = gauss_legendre(order);
    let mut out = Vec::with_capacity(link.spans.len() * panels * order);
    let mut acc_disp = 0.0;
    for span in &link.spans {
        let (alpha, beta2, g) = (span.alpha_per_m(), span.beta2(), span.gamma_per_m());
        let len = span.length_m();
        let h = len / panels as f64;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for &(x, w) in &gl {
                let z = mid + x * h / 2.0;
                let weight = w * h / 2.0 * MANAKOV_FACTOR * g * (-alpha * z).exp();
                out.push((acc_disp + beta2 * z, weight));
            }
        }
        acc_disp += beta2 * len;
    }
    out
}

/// `C` for every `(|m - n|, |m + n|)` key in `keys`, using nodes from [`link_nodes`].
fn integrate(pulse: &GaussianPulse, nodes: &[(f64, f64)], keys: &[(usize, usize)]) -> Vec<Complex64> {
    let tau2 = pulse.tau * pulse.tau;
    let t2 = pulse.period * pulse.period;
    let pre = pulse.tau.powi(3) * (PI / 2.0).sqrt() / pulse.energy();
    let prepared: Vec<(Complex64, f64)> = nodes
        .iter()
        .map(|&(b, w)| {
            let a = Complex64::new(tau2, -b);
            (t2 / (4.0 * a), w * pre / a.norm())
        })
        .collect();
    keys.iter()
        .map(|&(d, s)| {
            let (d2, s2) = ((d * d) as f64, (s * s) as f64);
            let mut acc = Complex64::new(0.0, 0.0);
            for &(u, w) in &prepared {
                acc += w * (-(u * d2 + u.conj() * s2)).exp();
            }
            Complex64::new(0.0, 1.0) * acc
        })
        .collect()
}

/// First-order coupling coefficients of a multi-span link for a Gaussian-approximated pulse.
///
/// `C(m, n) = j (8/9) gamma / E_g * integral f(z) <g g(. - mT) g(. - nT) g*(. - (m+n)T)> dz`,
/// evaluated in closed form in time and by panel Gauss-Legendre quadrature in `z`.
/// The panel count doubles until 32- and 64-point rules agree to `1e-10 |C(0,0)|`.
pub fn generate_coupling_matrix(
    link: &LinkConfig,
    pulse: &RrcFilterSpec,
    symbol_rate: f64,
    memory: usize,
    cutoff_db: f64,
) -> Result<CouplingMatrix> {
    link.validate()?;
    if link.spans.is_empty() {
        return param("coupling matrix needs at least one span");
    }
    let g = GaussianPulse::matched_to(pulse, symbol_rate)?;
    let l = memory as i64;
    let side = 2 * memory + 1;
    let mut index = vec![usize::MAX; side * side];
    let mut keys = Vec::new();
    for m in -l..=l {
        for n in -l..=l {
            let (d, s) = ((m - n).unsigned_abs() as usize, (m + n).unsigned_abs() as usize);
            if index[d * side + s] == usize::MAX {
                index[d * side + s] = keys.len();
                keys.push((d, s));
            }
        }
    }
    let mut panels = 4;
    let values = loop {
        let coarse = integrate(&g, &link_nodes(link, panels, 32), &keys);
        let fine = integrate(&g, &link_nodes(link, panels, 64), &keys);
        let c00 = fine[index[0]].norm();
        let worst = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if worst <= 1e-10 * c00 {
            break fine;
        }
        if panels >= 4096 {
            return Err(Error::Numerical(format!(
                "coupling integral did not converge: {panels} panels/span, worst difference {:.3e} relative to |C(0,0)|",
                worst / c00
            )));
        }
        panels *= 2;
    };
    let mut entries = Vec::with_capacity(side * side);
    for m in -l..=l {
        for n in -l..=l {
            let (d, s) = ((m - n).unsigned_abs() as usize, (m + n).unsigned_abs() as usize);
            entries.push(CouplingEntry {
                m: m as i32,
                n: n as i32,
                c: values[index[d * side + s]],
            });
        }
    }
    let p0 = g.peak_power(link.launch_power_w());
    let full = CouplingMatrix::from_entries(memory, f64::NEG_INFINITY, p0, entries)?;
    Ok(full.pruned(cutoff_db))
}

pub fn write_coupling_matrix<W: Write>(mut out: W, c: &CouplingMatrix) -> Result<()> {
    writeln!(out, "# coupling matrix")?;
    writeln!(out, "memory {}", c.memory)?;
    writeln!(out, "cutoff_db {:?}", c.cutoff_db)?;
    writeln!(out, "scale {:?} {:?}", c.scale.re, c.scale.im)?;
    writeln!(out, "p0 {:?}", c.p0)?;
    writeln!(out, "entries {}", c.entries.len())?;
    for e in &c.entries {
        writeln!(out, "{} {} {:?} {:?}", e.m, e.n, e.c.re, e.c.im)?;
    }
    Ok(())
}

pub fn read_coupling_matrix<R: BufRead>(input: R) -> Result<CouplingMatrix> {
    let mut offset = 0u64;
    let mut header: Vec<(u64, String, Vec<String>)> = Vec::new();
    let mut rows: Vec<(u64, Vec<String>)> = Vec::new();
    for line in input.lines() {
        let line = line?;
        let start = offset;
        offset += line.len() as u64 + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut parts = t.split_whitespace().map(str::to_string);
        let first = parts.next().unwrap_or_default();
        let rest: Vec<String> = parts.collect();
        if first.chars().next().is_some_and(|ch| ch.is_ascii_alphabetic()) {
            header.push((start, first, rest));
        } else {
            let mut all = vec![first];
            all.extend(rest);
            rows.push((start, all));
        }
    }
    let bad = |at: u64, msg: String| Error::Format { offset: at, message: msg };
    let num = |at: u64, s: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|_| bad(at, format!("cannot parse number {s:?}")))
    };
    let field = |name: &str| -> Result<&(u64, String, Vec<String>)> {
        header
            .iter()
            .find(|h| h.1 == name)
            .ok_or_else(|| bad(0, format!("missing header field {name:?}")))
    };
    let (at, _, v) = field("memory")?;
    let memory = v.first().and_then(|s| s.parse::<usize>().ok()).ok_or_else(|| bad(*at, "bad memory".into()))?;
    let (at, _, v) = field("cutoff_db")?;
    let cutoff_db = num(*at, v.first().map_or("", |s| s))?;
    let (at, _, v) = field("scale")?;
    if v.len() != 2 {
        return Err(bad(*at, "scale needs real and imaginary parts".into()));
    }
    let scale = Complex64::new(num(*at, &v[0])?, num(*at, &v[1])?);
    let (at, _, v) = field("p0")?;
    let p0 = num(*at, v.first().map_or("", |s| s))?;
    let (at, _, v) = field("entries")?;
    let count = v.first().and_then(|s| s.parse::<usize>().ok()).ok_or_else(|| bad(*at, "bad entry count".into()))?;
    if count != rows.len() {
        return Err(bad(offset, format!("expected {count} entries, found {}", rows.len())));
    }
    let mut entries = Vec::with_capacity(count);
    for (at, r) in &rows {
        if r.len() != 4 {
            return Err(bad(*at, format!("expected 4 columns, found {}", r.len())));
        }
        let idx = |s: &str| s.parse::<i32>().map_err(|_| bad(*at, format!("bad index {s:?}")));
        entries.push(CouplingEntry {
            m: idx(&r[0])?,
            n: idx(&r[1])?,
            c: Complex64::new(num(*at, &r[2])?, num(*at, &r[3])?),
        });
    }
    let m = CouplingMatrix::from_entries(memory, cutoff_db, p0, entries)
        .map_err(|e| bad(0, e.to_string()))?;
    Ok(m.with_scale(scale))
}
