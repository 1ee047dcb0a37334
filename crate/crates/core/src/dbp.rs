//! Single-channel digital backpropagation.
//!
//! The received field is renormalized to the configured launch power and run
//! through the sign-inverted Manakov channel span by span, last span first.
//! Neighbor channels are not modeled.

use crate::error::{param, Result};
use crate::fiber::{split_step, FiberParams, LinkConfig, StepModel};
use crate::metrics::snr_estimate;
use crate::signal::{DualPolWaveform, SymbolFrame};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DbpConfig {
    pub step_km: f64,
    /// Fiber model used for every span; may differ from the true link.
    pub fiber: FiberParams,
    pub spans: usize,
    pub samples_per_symbol: usize,
    pub symbol_rate: f64,
    pub launch_power_dbm: f64,
}

impl DbpConfig {
    /// Matched to a uniform link, 1 km steps, 2 samples per symbol.
    pub fn for_link(link: &LinkConfig, symbol_rate: f64) -> Result<Self> {
        let Some(first) = link.spans.first() else {
            return param("link has no spans");
        };
        if link.spans.iter().any(|s| s != first) {
            return param("backpropagation assumes identical spans");
        }
        Ok(Self {
            step_km: 1.0,
            fiber: *first,
            spans: link.spans.len(),
            samples_per_symbol: 2,
            symbol_rate,
            launch_power_dbm: link.launch_power_dbm_per_channel,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.fiber.validate()?;
        if !(self.step_km > 0.0 && self.step_km.is_finite()) {
            return param(format!("step must be positive, got {} km", self.step_km));
        }
        if !(self.symbol_rate > 0.0) || !self.launch_power_dbm.is_finite() {
            return param("symbol rate and launch power must be finite and positive");
        }
        if self.samples_per_symbol < 2 {
            return param("backpropagation needs at least 2 samples per symbol");
        }
        Ok(())
    }
}

/// Backpropagate an extracted single channel.
pub fn dbp_backpropagate(rx: &DualPolWaveform, cfg: &DbpConfig) -> Result<DualPolWaveform> {
    cfg.validate()?;
    rx.validate()?;
    let sps = rx.sample_rate / cfg.symbol_rate;
    if (sps - cfg.samples_per_symbol as f64).abs() > 1e-6 {
        return param(format!(
            "waveform is at {sps} samples per symbol, configuration expects {}",
            cfg.samples_per_symbol
        ));
    }
    let mut w = rx.clone();
    let p = 1e-3 * 10f64.powf(cfg.launch_power_dbm / 10.0);
    w.scale((p / w.mean_power()).sqrt());
    let model = StepModel::from_fiber(&cfg.fiber).inverse();
    let length = cfg.fiber.length_m();
    let step = (cfg.step_km * 1e3).min(length);
    let amp = 10f64.powf(-cfg.fiber.span_loss_db() / 20.0);
    for _ in 0..cfg.spans {
        w.scale(amp);
        split_step(&mut w.x, &mut w.y, w.sample_rate, model, length, step, true);
    }
    Ok(w)
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DbpGrid {
    /// Nonlinear coefficients to try, 1/(W km). Empty keeps the base value.
    pub gamma: Vec<f64>,
    /// Dispersion parameters, ps/(nm km).
    pub dispersion_d: Vec<f64>,
    /// Attenuations, dB/km.
    pub alpha_db_km: Vec<f64>,
}

impl DbpGrid {
    /// `n` points spread over `base * [1 - rel, 1 + rel]` for gamma and dispersion.
    pub fn around(base: &FiberParams, rel: f64, n: usize) -> Self {
        let pts = |v: f64| -> Vec<f64> {
            if n <= 1 {
                return vec![v];
            }
            (0..n).map(|i| v * (1.0 - rel + 2.0 * rel * i as f64 / (n - 1) as f64)).collect()
        };
        Self {
            gamma: pts(base.gamma),
            dispersion_d: pts(base.dispersion_d),
            alpha_db_km: vec![base.alpha_db_km],
        }
    }

    fn points(&self, base: &FiberParams) -> Vec<FiberParams> {
        let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
        let mut out = Vec::new();
        for &g in &or(&self.gamma, base.gamma) {
            for &d in &or(&self.dispersion_d, base.dispersion_d) {
                for &a in &or(&self.alpha_db_km, base.alpha_db_km) {
                    out.push(FiberParams { gamma: g, dispersion_d: d, alpha_db_km: a, ..*base });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DbpTuning {
    pub config: DbpConfig,
    /// Mean-of-ratios SNR of the winner, dB.
    pub snr_db: f64,
    /// Every grid point with its SNR, in search order.
    pub table: Vec<(FiberParams, f64)>,
}

/// Grid search over fiber parameters maximizing the SNR of `receiver(dbp(rx))` against `truth`.
///
/// `receiver` turns the backpropagated waveform into symbols aligned with `truth`.
pub fn dbp_tune<F>(rx: &DualPolWaveform, truth: &SymbolFrame, base: &DbpConfig, grid: &DbpGrid, receiver: F) -> Result<DbpTuning>
where
    F: Fn(&DualPolWaveform) -> Result<SymbolFrame> + Sync,
{
    use rayon::prelude::*;
    let points = grid.points(&base.fiber);
    let table = points
        .into_par_iter()
        .map(|fiber| {
            let cfg = DbpConfig { fiber, ..base.clone() };
            let syms = receiver(&dbp_backpropagate(rx, &cfg)?)?;
            let snr = snr_estimate(&syms, truth)?.eq8_avg_db();
            Ok((fiber, if snr.is_nan() { f64::NEG_INFINITY } else { snr }))
        })
        .collect::<Result<Vec<_>>>()?;
    let (fiber, snr_db) = table
        .iter()
        .fold(None::<&(FiberParams, f64)>, |best, e| match best {
            Some(b) if b.1 >= e.1 => Some(b),
            _ => Some(e),
        })
        .cloned()
        .expect("grid always has a point");
    Ok(DbpTuning { config: DbpConfig { fiber, ..base.clone() }, snr_db, table })
}
