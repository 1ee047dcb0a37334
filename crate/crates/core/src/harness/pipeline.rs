use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::SystemSpec;
use crate::dbp::{dbp_backpropagate, dbp_tune, DbpGrid};
use crate::error::Result;
use crate::fec::{demap_hard, ldpc_encode, CodewordBlock, FrameLayout};
use crate::fiber::{propagate_link, LinkConfig};
use crate::metrics::{ber_count, q2_from_ber, snr_estimate, MetricRecord};
use crate::pert::{calibrate_scale, generate_coupling_matrix, CalibrationStatus, CouplingMatrix, GaussianPulse};
use crate::rng::{purpose, stream};
use crate::rx::{cdc_compensate, ddpll_carrier_recovery, mmse_apply, mmse_train, CdcSpec};
use crate::signal::{matched_filter, shape_pulses, wdm_extract, wdm_multiplex, DualPolWaveform, SymbolFrame};
use crate::turbo::{regenerate_symbols, run_scheme, IterationRecord, Scheme};

/// Transmitted content of one WDM channel.
#[derive(Debug, Clone)]
pub struct ChannelTx {
    pub frame: SymbolFrame,
    pub codewords: Vec<Vec<u8>>,
}

/// Encode, map and shape every channel. Bits depend on `(seed, channel)` only,
/// so all launch powers of a seed carry the same data.
pub fn transmit(system: &SystemSpec, layout: &FrameLayout, power_dbm: f64, seed: u64) -> Result<(DualPolWaveform, Vec<ChannelTx>)> {
    let k = layout.code.info_len();
    let p_ch = 1e-3 * 10f64.powf(power_dbm / 10.0);
    let mut waves = Vec::with_capacity(system.channels);
    let mut txs = Vec::with_capacity(system.channels);
    for ch in 0..system.channels {
        let mut rng = stream(seed, &[purpose::TX_BITS, ch as u64]);
        let codewords = (0..layout.num_blocks)
            .map(|_| {
                let info: Vec<u8> = (0..k).map(|_| rng.random_range(0..2u8)).collect();
                Ok(ldpc_encode(&info, &layout.code)?.bits)
            })
            .collect::<Result<Vec<_>>>()?;
        let frame = layout.map_codewords(&codewords, system.symbol_rate)?;
        let mut w = shape_pulses(&frame, &system.rrc())?;
        // Unit-energy symbols on each polarization: nominal field power 2 per sample.
        w.scale((p_ch / 2.0).sqrt());
        w.power_ref_dbm = power_dbm;
        waves.push(w);
        txs.push(ChannelTx { frame, codewords });
    }
    let fs = system.symbol_rate * system.samples_per_symbol as f64;
    let composite = wdm_multiplex(&waves, system.spacing_hz, fs)?;
    Ok((composite, txs))
}

/// Link for one cell; ASE streams are keyed by `(seed, power)`.
pub fn cell_link(system: &SystemSpec, power_dbm: f64, seed: u64) -> LinkConfig {
    let rng_seed = stream(seed, &[purpose::LINK, power_dbm.to_bits()]).random();
    system.link_config(power_dbm, rng_seed)
}

/// Transmit, propagate and extract every receiver channel at 2 samples per symbol.
pub fn simulate_cell(system: &SystemSpec, layout: &FrameLayout, power_dbm: f64, seed: u64) -> Result<Vec<(usize, DualPolWaveform, ChannelTx)>> {
    let (composite, mut txs) = transmit(system, layout, power_dbm, seed)?;
    let rx = propagate_link(&composite, &cell_link(system, power_dbm, seed))?;
    let mut out = Vec::new();
    for ch in system.rx_channels() {
        let w = wdm_extract(&rx, &system.grid(), ch, 2.0 * system.symbol_rate)?;
        let tx = std::mem::replace(&mut txs[ch], ChannelTx { frame: SymbolFrame::new(vec![], vec![], 0.0)?, codewords: vec![] });
        out.push((ch, w, tx));
    }
    Ok(out)
}

/// Coupling matrix of the configured link at unit scale, `p0` left for the caller.
pub fn base_matrix(system: &SystemSpec) -> Result<CouplingMatrix> {
    generate_coupling_matrix(
        &system.link_config(0.0, 0),
        &system.rrc(),
        system.symbol_rate,
        system.nlc.memory,
        system.nlc.cutoff_db,
    )
}

/// Dispersion compensation (or backpropagation), matched filter, pilot-trained MMSE, optional PLL.
pub fn linear_receiver(w: &DualPolWaveform, pilots: &SymbolFrame, system: &SystemSpec, power_dbm: f64, dbp: Option<&crate::dbp::DbpConfig>) -> Result<SymbolFrame> {
    let d = match dbp {
        Some(cfg) => dbp_backpropagate(w, cfg)?,
        None => cdc_compensate(w, &CdcSpec::for_link(&system.link_config(power_dbm, 0), w.sample_rate))?,
    };
    let mf = matched_filter(&d, &system.rrc().at_sps(2))?;
    let eq = mmse_train(&mf, pilots, system.receiver.mmse_taps)?;
    let y = mmse_apply(&eq, &mf)?;
    if system.receiver.pll_bandwidth > 0.0 {
        Ok(ddpll_carrier_recovery(&y, &system.constellation(), system.receiver.pll_bandwidth))
    } else {
        Ok(y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub launch_power_dbm: f64,
    pub seed: u64,
    pub channel_index: usize,
    pub scheme: Scheme,
    #[serde(flatten)]
    pub record: IterationRecord,
}

#[derive(Debug, Clone, Default)]
pub struct ChannelResult {
    pub records: Vec<MetricRecord>,
    pub traces: Vec<TraceLine>,
    /// Schemes that could not run, with the reason.
    pub refused: Vec<(Scheme, String)>,
    pub calibration: Option<CalibrationStatus>,
}

/// Everything downstream of channel extraction, shared by simulation and ingestion.
pub struct ChannelJob<'a> {
    pub system: &'a SystemSpec,
    pub layout: &'a FrameLayout,
    pub matrix: &'a CouplingMatrix,
    pub schemes: &'a [Scheme],
    pub power_dbm: f64,
    pub seed: u64,
    pub channel_index: usize,
}

impl ChannelJob<'_> {
    pub fn run(&self, w: &DualPolWaveform, pilots: &SymbolFrame, truth: Option<&SymbolFrame>) -> Result<ChannelResult> {
        let sys = self.system;
        let y = linear_receiver(w, pilots, sys, self.power_dbm, None)?;
        let p_ch = 1e-3 * 10f64.powf(self.power_dbm / 10.0);
        let pulse = GaussianPulse::matched_to(&sys.rrc(), sys.symbol_rate)?;
        let mut matrix = self.matrix.clone().with_p0(pulse.peak_power(p_ch));
        let mut out = ChannelResult::default();
        if sys.nlc.calibrate && y.len() < 10_000 {
            log::warn!("frame of {} symbols is too short to calibrate the coupling scale", y.len());
        } else if sys.nlc.calibrate {
            if let Some(t) = truth {
                let (m, report) = calibrate_scale(&matrix, &y, t, &sys.nlc.options)?;
                matrix = m;
                out.calibration = Some(report.status);
            }
        }
        for &scheme in self.schemes {
            if scheme.needs_truth() && truth.is_none() {
                out.refused.push((scheme, "genie scheme needs the transmitted symbols".into()));
                continue;
            }
            let frame = if scheme == Scheme::Dbp {
                let mut cfg = sys.dbp_config(self.power_dbm);
                if sys.dbp.tune_rel > 0.0 {
                    if let Some(t) = truth {
                        let grid = DbpGrid::around(&cfg.fiber, sys.dbp.tune_rel, sys.dbp.tune_points);
                        let rx = |b: &DualPolWaveform| {
                            let mf = matched_filter(b, &sys.rrc().at_sps(2))?;
                            mmse_apply(&mmse_train(&mf, pilots, sys.receiver.mmse_taps)?, &mf)
                        };
                        cfg = dbp_tune(w, t, &cfg, &grid, rx)?.config;
                    }
                }
                linear_receiver(w, pilots, sys, self.power_dbm, Some(&cfg))?
            } else {
                y.clone()
            };
            let so = run_scheme(&frame, truth, &matrix, self.layout, &sys.scheme_config(scheme))?;
            let last = so.trace.last().expect("at least one iteration").clone();
            let record = match truth {
                Some(_) => self.record_from(scheme, &last, so.trace.records.len()),
                None => self.blind_record(scheme, &so.frame, &so.decoded, so.trace.records.len())?,
            };
            out.records.push(record);
            out.traces.extend(so.trace.records.into_iter().map(|record| TraceLine {
                launch_power_dbm: self.power_dbm,
                seed: self.seed,
                channel_index: self.channel_index,
                scheme,
                record,
            }));
        }
        Ok(out)
    }

    fn record_from(&self, scheme: Scheme, r: &IterationRecord, iterations: usize) -> MetricRecord {
        let ber = r.pre_fec_ber.expect("truth known");
        MetricRecord {
            launch_power_dbm: self.power_dbm,
            scheme,
            channel_index: self.channel_index,
            snr_x_db: r.snr_x_db.expect("truth known"),
            snr_y_db: r.snr_y_db.expect("truth known"),
            snr_db: r.snr_db.expect("truth known"),
            pre_fec_ber: ber,
            post_fec_ber: r.post_fec_ber,
            q2_db: q2_from_ber(ber).ok(),
            iterations_used: iterations,
            seed: self.seed,
            bit_count: r.bit_count,
            snr_eq8_db: r.snr_eq8_db.expect("truth known"),
        }
    }

    /// Metrics against the re-encoded decoder output when nothing was transmitted-known.
    fn blind_record(&self, scheme: Scheme, y: &SymbolFrame, decoded: &[CodewordBlock], iterations: usize) -> Result<MetricRecord> {
        let reference = regenerate_symbols(decoded, self.layout, y.symbol_rate)?;
        let c = &self.layout.constellation;
        let s = snr_estimate(y, &reference)?;
        let ber = ber_count(&demap_hard(y, c), &demap_hard(&reference, c))?;
        Ok(MetricRecord {
            launch_power_dbm: self.power_dbm,
            scheme,
            channel_index: self.channel_index,
            snr_x_db: s.ratio_db[0],
            snr_y_db: s.ratio_db[1],
            snr_db: s.ratio_avg_db(),
            pre_fec_ber: ber.ber,
            post_fec_ber: None,
            q2_db: q2_from_ber(ber.ber).ok(),
            iterations_used: iterations,
            seed: self.seed,
            bit_count: ber.bits,
            snr_eq8_db: s.eq8_avg_db(),
        })
    }
}
