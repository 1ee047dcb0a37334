use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::{RunPlan, SystemSpec};
use super::pipeline::{base_matrix, ChannelJob, ChannelResult};
use crate::error::{param, Error, Result};
use crate::fec::FrameLayout;
use crate::pert::CouplingMatrix;
use crate::signal::{read_waveform, resample, write_waveform, DualPolWaveform, SymbolFrame};

/// Metadata stored as `<name>.json` next to a `<name>.dpwf` capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub symbol_rate: f64,
    pub modulation: usize,
    pub launch_power_dbm: f64,
    pub channel_index: usize,
    #[serde(default)]
    pub seed: u64,
    /// Known symbols at the start of the frame, `[re, im]` per symbol.
    pub pilots_x: Vec<[f64; 2]>,
    pub pilots_y: Vec<[f64; 2]>,
    /// Transmitted LDPC codewords as hex strings, 8 bits per byte, first bit most significant.
    #[serde(default)]
    pub truth_codewords: Option<Vec<String>>,
}

fn to_hex(bits: &[u8]) -> String {
    let bytes: Vec<u8> = bits
        .chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |a, (i, &b)| a | (b & 1) << (7 - i)))
        .collect();
    hex::encode(bytes)
}

fn from_hex(s: &str, len: usize) -> Result<Vec<u8>> {
    let bytes = hex::decode(s).map_err(|e| Error::Config(format!("bad codeword hex: {e}")))?;
    if bytes.len() != len.div_ceil(8) {
        return Err(Error::Config(format!("codeword holds {} bytes, expected {}", bytes.len(), len.div_ceil(8))));
    }
    let mut out: Vec<u8> = bytes.iter().flat_map(|&v| (0..8).map(move |i| (v >> (7 - i)) & 1)).collect();
    out.truncate(len);
    Ok(out)
}

impl Sidecar {
    pub fn new(system: &SystemSpec, power_dbm: f64, seed: u64, channel: usize, pilots: &SymbolFrame, truth: Option<&[Vec<u8>]>) -> Self {
        let pts = |v: &[Complex64]| v.iter().map(|c| [c.re, c.im]).collect();
        Self {
            symbol_rate: system.symbol_rate,
            modulation: system.modulation,
            launch_power_dbm: power_dbm,
            channel_index: channel,
            seed,
            pilots_x: pts(&pilots.x),
            pilots_y: pts(&pilots.y),
            truth_codewords: truth.map(|cws| cws.iter().map(|b| to_hex(b)).collect()),
        }
    }

    pub fn pilots(&self) -> Result<SymbolFrame> {
        let c = |v: &[[f64; 2]]| v.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        SymbolFrame::new(c(&self.pilots_x), c(&self.pilots_y), self.symbol_rate)
    }

    /// Transmitted frame rebuilt from the codewords, if present.
    pub fn truth(&self, layout: &FrameLayout) -> Result<Option<SymbolFrame>> {
        let Some(hex) = &self.truth_codewords else { return Ok(None) };
        let n = layout.code.block_len();
        let cws = hex.iter().map(|h| from_hex(h, n)).collect::<Result<Vec<_>>>()?;
        layout.map_codewords(&cws, self.symbol_rate).map(Some)
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Write `<stem>.dpwf` and `<stem>.json`; `stem` may contain dots.
pub fn export_channel(stem: &Path, w: &DualPolWaveform, sidecar: &Sidecar) -> Result<PathBuf> {
    let wave = PathBuf::from(format!("{}.dpwf", stem.display()));
    if let Some(dir) = wave.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = std::io::BufWriter::new(fs::File::create(&wave)?);
    write_waveform(&mut f, w)?;
    std::io::Write::flush(&mut f)?;
    fs::write(sidecar_path(&wave), serde_json::to_string_pretty(sidecar).expect("sidecar serializes"))?;
    Ok(wave)
}

#[derive(Debug, Clone)]
pub struct IngestReport {
    pub sidecar: Sidecar,
    /// Metrics are relative to the transmitted symbols when true, else to the re-encoded decoder output.
    pub has_truth: bool,
    pub result: ChannelResult,
}

/// Run the receiver chain and every planned scheme on a captured single-channel waveform.
///
/// `matrix` is generated from the plan when not given.
pub fn ingest_waveform(path: &Path, plan: &RunPlan, matrix: Option<&CouplingMatrix>) -> Result<IngestReport> {
    let sys = &plan.system;
    let file = fs::File::open(path)?;
    let w = read_waveform(std::io::BufReader::new(file))?;
    let side_path = sidecar_path(path);
    let text = fs::read_to_string(&side_path)
        .map_err(|e| Error::Config(format!("cannot read sidecar {}: {e}", side_path.display())))?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Format {
        offset: (text.lines().take(e.line().saturating_sub(1)).map(|l| l.len() + 1).sum::<usize>() + e.column().saturating_sub(1)) as u64,
        message: format!("{}: {e}", side_path.display()),
    })?;
    if (sidecar.symbol_rate - sys.symbol_rate).abs() > 1e-6 * sys.symbol_rate || sidecar.modulation != sys.modulation {
        return Err(Error::Config(format!(
            "capture is {}-QAM at {} Bd, configuration expects {}-QAM at {} Bd",
            sidecar.modulation, sidecar.symbol_rate, sys.modulation, sys.symbol_rate
        )));
    }
    let layout = sys.layout()?;
    let truth = sidecar.truth(&layout)?;
    let target = 2.0 * sys.symbol_rate;
    let w = if w.sample_rate == target { w } else { resample(&w, target)? };
    if w.len() != 2 * layout.frame_len() {
        return param(format!(
            "capture holds {} symbols, the configured frame has {}",
            w.len() / 2,
            layout.frame_len()
        ));
    }
    let generated;
    let matrix = match matrix {
        Some(m) => m,
        None => {
            generated = base_matrix(sys)?;
            &generated
        }
    };
    let job = ChannelJob {
        system: sys,
        layout: &layout,
        matrix,
        schemes: &plan.schemes,
        power_dbm: sidecar.launch_power_dbm,
        seed: sidecar.seed,
        channel_index: sidecar.channel_index,
    };
    let result = job.run(&w, &sidecar.pilots()?, truth.as_ref())?;
    for (s, why) in &result.refused {
        log::warn!("{} skipped: {why}", s.name());
    }
    Ok(IngestReport { has_truth: truth.is_some(), sidecar, result })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_round_trip() {
        let bits: Vec<u8> = (0..37).map(|i| ((i * 7 + 3) % 5 % 2) as u8).collect();
        let h = to_hex(&bits);
        assert_eq!(h.len(), 10);
        assert!(from_hex(&h, 40).is_ok());
        assert_eq!(from_hex(&h, 37).unwrap(), bits);
        assert!(from_hex("zz", 8).is_err());
        assert!(from_hex("abc", 8).is_err());
    }
}
