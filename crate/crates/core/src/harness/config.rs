use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dbp::DbpConfig;
use crate::error::{Error, Result};
use crate::fec::{CodeRate, DecoderConfig, DemapMethod, FrameLayout, LdpcCode, QamConstellation};
use crate::fiber::{FiberParams, LinkConfig};
use crate::pert::NliOptions;
use crate::rls::RlsParams;
use crate::signal::{FilterRealization, RrcFilterSpec, WdmGrid};
use crate::turbo::{PriorMode, Scheme, SchemeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// 3 x 32 GBd DP-64QAM, 10 x 80 km. Minutes per cell on one core.
    #[default]
    DeskScale,
    /// 5 x 32 GBd DP-64QAM on a 37.5 GHz grid over 20 x 80 km, 100 m steps.
    PaperSim64qam,
    /// 5 x 32 GBd DP-16QAM on a 50 GHz grid, 30 x 140 km, rate 5/6.
    PaperExp16qam,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk-scale" => Ok(Preset::DeskScale),
            "paper-sim-64qam" => Ok(Preset::PaperSim64qam),
            "paper-exp-16qam" => Ok(Preset::PaperExp16qam),
            _ => Err(Error::Config(format!("unknown preset {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub rolloff: f64,
    pub realization: FilterRealization,
    /// Only used by the `taps` realization.
    pub num_taps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub spans: usize,
    pub span_km: f64,
    pub alpha_db_km: f64,
    /// 1/(W km)
    pub gamma: f64,
    /// ps/(nm km)
    pub dispersion_d: f64,
    pub noise_figure_db: f64,
    pub ssfm_step_m: f64,
    pub ase: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSpec {
    /// T/2-spaced taps per MMSE filter.
    pub mmse_taps: usize,
    /// Known symbols at the frame start used to train the MMSE equalizer.
    pub pilot_symbols: usize,
    /// Normalized loop bandwidth of the carrier-recovery PLL; 0 disables it.
    /// Simulated lasers are ideal, so presets leave it off. Lab captures need it.
    pub pll_bandwidth: f64,
    /// Channels to receive; empty means the center channel.
    pub channels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlcSpec {
    pub memory: usize,
    pub cutoff_db: f64,
    pub options: NliOptions,
    /// Fit the complex scale of the coupling matrix on every received frame.
    pub calibrate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurboSpec {
    pub max_iters: usize,
    pub stop_on_converged: bool,
    pub decoder: DecoderConfig,
    pub demap: DemapMethod,
    pub prior: PriorMode,
    pub rls_enabled: bool,
    pub rls: RlsParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbpSpec {
    pub step_km: f64,
    /// Relative half-width of the gamma/dispersion tuning grid; 0 uses the link values.
    pub tune_rel: f64,
    pub tune_points: usize,
}

/// Every physical and DSP parameter of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub modulation: usize,
    pub code_rate: CodeRate,
    /// LDPC codewords per channel frame, each spread over both polarizations.
    pub blocks_per_channel: usize,
    pub symbol_rate: f64,
    pub channels: usize,
    pub spacing_hz: f64,
    /// Samples per symbol of the transmitted composite field.
    pub samples_per_symbol: usize,
    pub pulse: PulseSpec,
    pub link: LinkSpec,
    pub receiver: ReceiverSpec,
    pub nlc: NlcSpec,
    pub turbo: TurboSpec,
    pub dbp: DbpSpec,
}

impl Preset {
    pub fn system(self) -> SystemSpec {
        let desk = SystemSpec {
            modulation: 64,
            code_rate: CodeRate::R5_6,
            blocks_per_channel: 4,
            symbol_rate: 32e9,
            channels: 3,
            spacing_hz: 37.5e9,
            samples_per_symbol: 8,
            pulse: PulseSpec { rolloff: 0.005, realization: FilterRealization::Spectral, num_taps: 401 },
            link: LinkSpec {
                spans: 10,
                span_km: 80.0,
                alpha_db_km: 0.2,
                gamma: 1.3,
                dispersion_d: 17.0,
                noise_figure_db: 4.5,
                ssfm_step_m: 500.0,
                ase: true,
            },
            receiver: ReceiverSpec { mmse_taps: 24, pilot_symbols: 2048, pll_bandwidth: 0.0, channels: Vec::new() },
            nlc: NlcSpec { memory: 80, cutoff_db: -16.0, options: NliOptions::periodic(), calibrate: true },
            turbo: TurboSpec {
                max_iters: 5,
                stop_on_converged: true,
                decoder: DecoderConfig::min_sum(10),
                demap: DemapMethod::default(),
                prior: PriorMode::default(),
                rls_enabled: false,
                rls: RlsParams::default(),
            },
            dbp: DbpSpec { step_km: 1.0, tune_rel: 0.0, tune_points: 5 },
        };
        match self {
            Preset::DeskScale => desk,
            Preset::PaperSim64qam => SystemSpec {
                channels: 5,
                samples_per_symbol: 16,
                link: LinkSpec { spans: 20, ssfm_step_m: 100.0, ..desk.link },
                ..desk
            },
            Preset::PaperExp16qam => SystemSpec {
                modulation: 16,
                channels: 5,
                spacing_hz: 50e9,
                samples_per_symbol: 8,
                pulse: PulseSpec { rolloff: 0.5, ..desk.pulse },
                link: LinkSpec { spans: 30, span_km: 140.0, ssfm_step_m: 100.0, ..desk.link },
                receiver: ReceiverSpec { mmse_taps: 85, ..desk.receiver },
                turbo: TurboSpec { decoder: DecoderConfig::min_sum(5), rls: RlsParams { num_taps: 3, ..RlsParams::default() }, ..desk.turbo },
                ..desk
            },
        }
    }
}

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        QamConstellation::new(self.modulation).map_err(|e| Error::Config(e.to_string()))?;
        if self.blocks_per_channel == 0 || self.channels == 0 || self.channels % 2 == 0 {
            return cfg(format!(
                "need an odd channel count and at least one block, got {} channels and {} blocks",
                self.channels, self.blocks_per_channel
            ));
        }
        if !(self.symbol_rate > 0.0) || !(self.spacing_hz > 0.0) {
            return cfg("symbol rate and spacing must be positive".into());
        }
        if self.samples_per_symbol < 2 {
            return cfg("composite field needs at least 2 samples per symbol".into());
        }
        self.rrc().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.link_config(0.0, 0).validate()?;
        if self.link.ssfm_step_m > self.link.span_km * 1e3 {
            return cfg(format!("SSFM step {} m exceeds span length", self.link.ssfm_step_m));
        }
        if self.receiver.channels.iter().any(|&c| c >= self.channels) {
            return cfg(format!("receiver channel outside the {}-channel grid", self.channels));
        }
        if self.receiver.pilot_symbols < 10 * self.receiver.mmse_taps || self.receiver.pilot_symbols > self.frame_len() {
            return cfg(format!("{} pilot symbols cannot train {} taps", self.receiver.pilot_symbols, self.receiver.mmse_taps));
        }
        if self.turbo.max_iters == 0 || self.dbp.step_km <= 0.0 {
            return cfg("turbo iterations and DBP step must be positive".into());
        }
        Ok(())
    }

    pub fn constellation(&self) -> QamConstellation {
        QamConstellation::new(self.modulation).expect("validated")
    }

    pub fn layout(&self) -> Result<FrameLayout> {
        FrameLayout::new(Arc::new(LdpcCode::dvbs2(self.code_rate)), self.constellation(), self.blocks_per_channel)
    }

    /// Symbols per polarization in one channel frame.
    pub fn frame_len(&self) -> usize {
        let bps = self.modulation.trailing_zeros() as usize;
        self.blocks_per_channel * 64800 / (2 * bps)
    }

    /// Pulse at the composite oversampling.
    pub fn rrc(&self) -> RrcFilterSpec {
        RrcFilterSpec {
            rolloff: self.pulse.rolloff,
            num_taps: self.pulse.num_taps,
            samples_per_symbol: self.samples_per_symbol,
            realization: self.pulse.realization,
        }
    }

    pub fn grid(&self) -> WdmGrid {
        WdmGrid::new(self.channels, self.spacing_hz)
    }

    pub fn fiber(&self) -> FiberParams {
        FiberParams {
            alpha_db_km: self.link.alpha_db_km,
            gamma: self.link.gamma,
            dispersion_d: self.link.dispersion_d,
            length_km: self.link.span_km,
            wavelength_nm: 1550.0,
        }
    }

    pub fn link_config(&self, power_dbm: f64, rng_seed: u64) -> LinkConfig {
        LinkConfig {
            spans: vec![self.fiber(); self.link.spans],
            edfa_noise_figure_db: self.link.noise_figure_db,
            launch_power_dbm_per_channel: power_dbm,
            ssfm_step_m: self.link.ssfm_step_m,
            rng_seed,
            ase: self.link.ase,
        }
    }

    pub fn rx_channels(&self) -> Vec<usize> {
        if self.receiver.channels.is_empty() {
            vec![self.grid().center_index()]
        } else {
            self.receiver.channels.clone()
        }
    }

    pub fn scheme_config(&self, scheme: Scheme) -> SchemeConfig {
        let t = &self.turbo;
        SchemeConfig {
            scheme,
            max_turbo_iters: t.max_iters,
            rls_enabled: t.rls_enabled,
            stop_on_converged: t.stop_on_converged,
            rls: t.rls,
            decoder: t.decoder,
            demap: t.demap,
            prior: t.prior,
            nli: self.nlc.options,
        }
    }

    pub fn dbp_config(&self, power_dbm: f64) -> DbpConfig {
        DbpConfig {
            step_km: self.dbp.step_km,
            fiber: self.fiber(),
            spans: self.link.spans,
            samples_per_symbol: 2,
            symbol_rate: self.symbol_rate,
            launch_power_dbm: power_dbm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl PowerSweep {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || self.stop < self.start {
            return Err(Error::Config(format!("bad power sweep {self:?}")));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| ((self.start + i as f64 * self.step) * 1e9).round() / 1e9).collect())
    }
}

/// Experiment description as written in a TOML file.
///
/// `[system]` holds overrides merged key by key into the preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub preset: Preset,
    #[serde(default)]
    pub system: toml::Table,
    /// Launch powers per channel, dBm. Takes precedence over `sweep`.
    #[serde(default)]
    pub powers: Vec<f64>,
    pub sweep: Option<PowerSweep>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Write each received channel as a waveform file plus sidecar.
    #[serde(default)]
    pub export_waveforms: bool,
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

fn default_schemes() -> Vec<Scheme> {
    vec![Scheme::NoNlc, Scheme::Conventional, Scheme::FecAssisted, Scheme::Genie]
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn from_preset(preset: Preset) -> Self {
        Self {
            preset,
            system: toml::Table::new(),
            powers: vec![0.0],
            sweep: None,
            seeds: default_seeds(),
            schemes: default_schemes(),
            output_dir: default_output(),
            export_waveforms: false,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Set one `[system]` override by dotted path, e.g. `link.spans`.
    pub fn set(&mut self, path: &str, value: impl Into<toml::Value>) {
        let mut t = &mut self.system;
        let mut keys: Vec<&str> = path.split('.').collect();
        let last = keys.pop().expect("non-empty path");
        for k in keys {
            t = t
                .entry(k)
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .expect("override path crosses a scalar");
        }
        t.insert(last.to_string(), value.into());
    }

    pub fn resolve(&self) -> Result<RunPlan> {
        let mut base = toml::Table::try_from(self.preset.system()).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut base, &self.system, "system")?;
        let system: SystemSpec = base.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        system.validate()?;
        let powers = match (&self.powers[..], &self.sweep) {
            ([], Some(s)) => s.points()?,
            ([], None) => return Err(Error::Config("no launch powers given".into())),
            (p, _) => p.to_vec(),
        };
        if powers.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("launch powers must be finite".into()));
        }
        if self.seeds.is_empty() || self.schemes.is_empty() {
            return Err(Error::Config("need at least one seed and one scheme".into()));
        }
        let dedup = |v: &[u64]| v.iter().collect::<BTreeSet<_>>().len() == v.len();
        if !dedup(&self.seeds) {
            return Err(Error::Config("seeds repeat".into()));
        }
        let mut schemes = self.schemes.clone();
        schemes.sort();
        schemes.dedup();
        Ok(RunPlan {
            system,
            powers,
            seeds: self.seeds.clone(),
            schemes,
            output_dir: self.output_dir.clone(),
            export_waveforms: self.export_waveforms,
        })
    }
}

fn merge(base: &mut toml::Table, over: &toml::Table, at: &str) -> Result<()> {
    for (k, v) in over {
        let here = format!("{at}.{k}");
        match (base.get_mut(k), v) {
            (None, _) => return Err(Error::Config(format!("unknown setting {here}"))),
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o, &here)?,
            (Some(slot), _) => *slot = v.clone(),
        }
    }
    Ok(())
}

/// Fully concrete experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub system: SystemSpec,
    pub powers: Vec<f64>,
    pub seeds: Vec<u64>,
    pub schemes: Vec<Scheme>,
    pub output_dir: PathBuf,
    pub export_waveforms: bool,
}

impl RunPlan {
    /// SHA-256 of the canonical JSON of everything that affects results.
    ///
    /// Object keys are sorted, so the hash does not depend on field order in
    /// the source file. The output directory is excluded.
    pub fn config_hash(&self) -> String {
        let v = serde_json::json!({
            "system": self.system,
            "powers": self.powers,
            "seeds": self.seeds,
            "schemes": self.schemes,
        });
        let canon = serde_json::to_string(&v).expect("plan serializes");
        let d = Sha256::digest(canon.as_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Hash of the system alone; results from different sweeps over the same system can be merged.
    pub fn system_hash(&self) -> String {
        let canon = serde_json::to_string(&serde_json::to_value(&self.system).expect("system serializes")).expect("json");
        Sha256::digest(canon.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for (pi, &power_dbm) in self.powers.iter().enumerate() {
            for &seed in &self.seeds {
                out.push(Cell { power_index: pi, power_dbm, seed });
            }
        }
        out
    }
}

/// One (launch power, seed) Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub power_index: usize,
    pub power_dbm: f64,
    pub seed: u64,
}

impl Cell {
    pub fn key(&self) -> String {
        format!("p{:+.2}dBm_s{}", self.power_dbm, self.seed).replace('.', "_")
    }
}
