//! Receiver schemes built on the perturbation model: conventional (hard
//! decisions as candidates), FEC-assisted (candidates regenerated from the
//! decoder, iterated) and genie-assisted (transmitted symbols as candidates).

use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::fec::{
    demap_hard, demap_llr, ldpc_decode, CodewordBlock, DecodeStatus, DecoderConfig, DemapMethod,
    FrameLayout,
};
use crate::metrics::{ber_count, snr_estimate};
use crate::pert::{compensate, estimate_nli_with, hard_decide, CouplingMatrix, NliOptions};
use crate::rls::{rls_equalize_frame, DecisionSource, RlsParams};
use crate::signal::SymbolFrame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Linear receiver only.
    NoNlc,
    Conventional,
    FecAssisted,
    Genie,
    /// Single-channel backpropagation ahead of the linear receiver.
    Dbp,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::NoNlc,
        Scheme::Conventional,
        Scheme::FecAssisted,
        Scheme::Genie,
        Scheme::Dbp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::NoNlc => "no-nlc",
            Scheme::Conventional => "conventional",
            Scheme::FecAssisted => "fec-assisted",
            Scheme::Genie => "genie",
            Scheme::Dbp => "dbp",
        }
    }

    pub fn needs_truth(self) -> bool {
        self == Scheme::Genie
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?}")))
    }
}

/// What the demapper receives as a-priori information in later iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorMode {
    /// Channel LLRs only.
    Off,
    /// Decoder posterior used as prior, demapper posterior passed on.
    #[default]
    Posterior,
    /// Decoder extrinsic used as prior, demapper extrinsic passed on.
    Extrinsic,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub max_turbo_iters: usize,
    pub rls_enabled: bool,
    pub stop_on_converged: bool,
    pub rls: RlsParams,
    pub decoder: DecoderConfig,
    pub demap: DemapMethod,
    pub prior: PriorMode,
    pub nli: NliOptions,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Conventional,
            max_turbo_iters: 5,
            rls_enabled: false,
            stop_on_converged: true,
            rls: RlsParams::default(),
            decoder: DecoderConfig::default(),
            demap: DemapMethod::LogMap,
            prior: PriorMode::default(),
            nli: NliOptions::default(),
        }
    }
}

impl SchemeConfig {
    pub fn for_scheme(scheme: Scheme) -> Self {
        Self { scheme, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Ratio-of-sums SNR against the transmitted frame, dB.
    pub snr_db: Option<f64>,
    pub snr_x_db: Option<f64>,
    pub snr_y_db: Option<f64>,
    pub snr_eq8_db: Option<f64>,
    pub pre_fec_ber: Option<f64>,
    pub post_fec_ber: Option<f64>,
    pub bit_count: u64,
    pub converged_blocks: usize,
    pub decoder_iterations: usize,
    pub rls_residual: Option<f64>,
    /// Demapper noise variance per polarization.
    pub noise_var: [f64; 2],
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TurboTrace {
    pub records: Vec<IterationRecord>,
}

impl TurboTrace {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

#[derive(Debug, Clone)]
pub struct SchemeOutput {
    /// Symbols presented to the demapper in the final iteration.
    pub frame: SymbolFrame,
    pub decoded: Vec<CodewordBlock>,
    pub trace: TurboTrace,
}

/// Re-interleave decoded codewords and map them to symbols.
pub fn regenerate_symbols(decoded: &[CodewordBlock], layout: &FrameLayout, symbol_rate: f64) -> Result<SymbolFrame> {
    let cws: Vec<Vec<u8>> = decoded.iter().map(|b| b.bits.clone()).collect();
    layout.map_codewords(&cws, symbol_rate)
}

/// Transmitted bits carried by a frame of exact constellation points, in frame order.
struct Truth<'a> {
    frame: &'a SymbolFrame,
    bits: Vec<u8>,
    info: Vec<Vec<u8>>,
}

impl<'a> Truth<'a> {
    fn new(frame: &'a SymbolFrame, layout: &FrameLayout) -> Result<Self> {
        let bits = demap_hard(frame, &layout.constellation);
        let k = layout.code.info_len();
        let info = layout.to_blocks(&bits)?.into_iter().map(|mut b| {
            b.truncate(k);
            b
        });
        Ok(Self { frame, info: info.collect(), bits })
    }
}

fn noise_variance(y: &SymbolFrame, reference: &SymbolFrame) -> [f64; 2] {
    let mut v = [0.0; 2];
    for (p, vp) in v.iter_mut().enumerate() {
        let e: f64 = y.pol(p).iter().zip(reference.pol(p)).map(|(a, b)| (a - b).norm_sqr()).sum();
        *vp = (e / y.len() as f64).max(1e-9);
    }
    v
}

struct Stage<'a> {
    rx: &'a SymbolFrame,
    layout: &'a FrameLayout,
    matrix: &'a CouplingMatrix,
    cfg: &'a SchemeConfig,
    truth: Option<Truth<'a>>,
}

impl Stage<'_> {
    /// Compensate with `cands`, optionally run RLS, return the equalized frame and RLS residual.
    fn equalize(&self, cands: Option<&SymbolFrame>, desired: &DecisionSource) -> Result<(SymbolFrame, Option<f64>)> {
        let y = match cands {
            Some(c) => compensate(self.rx, &estimate_nli_with(c, self.matrix, &self.cfg.nli)?)?,
            None => self.rx.clone(),
        };
        if self.cfg.rls_enabled {
            let out = rls_equalize_frame(&y, desired, &self.cfg.rls)?;
            Ok((out.frame, Some(out.residual_mse)))
        } else {
            Ok((y, None))
        }
    }

    /// Demap and decode every block not in `frozen`; frozen blocks keep their previous result.
    fn decode(
        &self,
        y: &SymbolFrame,
        noise_var: [f64; 2],
        prior: Option<&[CodewordBlock]>,
        frozen: &[bool],
    ) -> Result<Vec<CodewordBlock>> {
        let c = &self.layout.constellation;
        let (prior_frame, decoder_prior): (Option<Vec<f64>>, Option<Vec<Vec<f64>>>) = match (prior, self.cfg.prior) {
            (Some(blocks), PriorMode::Posterior) => {
                let llrs: Vec<Vec<f64>> = blocks.iter().map(|b| b.llrs.clone()).collect();
                (Some(self.layout.to_frame(&llrs)?), None)
            }
            (Some(blocks), PriorMode::Extrinsic) => {
                let llrs: Vec<Vec<f64>> = blocks.iter().map(|b| b.llrs.clone()).collect();
                (Some(self.layout.to_frame(&llrs)?), Some(llrs))
            }
            _ => (None, None),
        };
        let llrs = demap_llr(y, c, &noise_var, prior_frame.as_deref(), self.cfg.demap)?;
        let blocks = self.layout.to_blocks(&llrs)?;
        let prev = prior;
        (0..blocks.len())
            .into_par_iter()
            .map(|i| {
                if frozen[i] {
                    return Ok(prev.expect("frozen blocks have a previous result")[i].clone());
                }
                let mut input = blocks[i].clone();
                if let Some(p) = &decoder_prior {
                    // Demapper extrinsic: posterior minus the prior it was given.
                    for (v, q) in input.iter_mut().zip(&p[i]) {
                        *v -= q;
                    }
                }
                ldpc_decode(&input, &self.layout.code, &self.cfg.decoder)
            })
            .collect()
    }

    fn record(
        &self,
        iteration: usize,
        y: &SymbolFrame,
        decoded: &[CodewordBlock],
        rls_residual: Option<f64>,
        noise_var: [f64; 2],
    ) -> Result<IterationRecord> {
        let bits = demap_hard(y, &self.layout.constellation);
        let mut r = IterationRecord {
            iteration,
            snr_db: None,
            snr_x_db: None,
            snr_y_db: None,
            snr_eq8_db: None,
            pre_fec_ber: None,
            post_fec_ber: None,
            bit_count: bits.len() as u64,
            converged_blocks: decoded.iter().filter(|b| b.status == DecodeStatus::Converged).count(),
            decoder_iterations: decoded.iter().map(|b| b.iterations).max().unwrap_or(0),
            rls_residual,
            noise_var,
        };
        if let Some(t) = &self.truth {
            let s = snr_estimate(y, t.frame)?;
            r.snr_db = Some(s.ratio_avg_db());
            r.snr_x_db = Some(s.ratio_db[0]);
            r.snr_y_db = Some(s.ratio_db[1]);
            r.snr_eq8_db = Some(s.eq8_avg_db());
            r.pre_fec_ber = Some(ber_count(&bits, &t.bits)?.ber);
            let k = self.layout.code.info_len();
            let mut post = crate::metrics::BerCount::from_counts(0, 0);
            for (b, ti) in decoded.iter().zip(&t.info) {
                post = post.merge(ber_count(&b.bits[..k], ti)?);
            }
            r.post_fec_ber = Some(post.ber);
        }
        Ok(r)
    }
}

/// Run one receiver scheme on an aligned, linearly equalized frame.
///
/// `truth` is required by the genie scheme and enables SNR/BER in the trace.
pub fn run_scheme(
    rx: &SymbolFrame,
    truth: Option<&SymbolFrame>,
    matrix: &CouplingMatrix,
    layout: &FrameLayout,
    cfg: &SchemeConfig,
) -> Result<SchemeOutput> {
    if rx.len() != layout.frame_len() {
        return param(format!(
            "frame of {} symbols does not match the {}-symbol codeword layout",
            rx.len(),
            layout.frame_len()
        ));
    }
    if let Some(t) = truth {
        if t.len() != rx.len() {
            return param("truth frame length differs from received frame");
        }
    }
    if cfg.scheme.needs_truth() && truth.is_none() {
        return Err(Error::Config("genie scheme requires the transmitted frame".into()));
    }
    if cfg.max_turbo_iters == 0 {
        return param("at least one iteration is required");
    }
    let stage = Stage {
        rx,
        layout,
        matrix,
        cfg,
        truth: truth.map(|t| Truth::new(t, layout)).transpose()?,
    };
    let c = &layout.constellation;
    let no_freeze = vec![false; layout.num_blocks];
    let mut trace = TurboTrace::default();

    let (y, residual, reference) = match cfg.scheme {
        Scheme::NoNlc | Scheme::Dbp => {
            let (y, res) = stage.equalize(None, &DecisionSource::HardDecision(c.clone()))?;
            let r = hard_decide(&y, c);
            (y, res, r)
        }
        Scheme::Genie => {
            let t = truth.expect("checked above");
            let (y, res) = stage.equalize(Some(t), &DecisionSource::Genie(t.clone()))?;
            (y, res, t.clone())
        }
        Scheme::Conventional | Scheme::FecAssisted => {
            let hd = hard_decide(rx, c);
            let (y, res) = stage.equalize(Some(&hd), &DecisionSource::HardDecision(c.clone()))?;
            let r = hard_decide(&y, c);
            (y, res, r)
        }
    };
    let nv = noise_variance(&y, &reference);
    let mut decoded = stage.decode(&y, nv, None, &no_freeze)?;
    trace.records.push(stage.record(1, &y, &decoded, residual, nv)?);
    let mut frame = y;

    if cfg.scheme == Scheme::FecAssisted {
        let mut prev_cands: Option<SymbolFrame> = None;
        for it in 2..=cfg.max_turbo_iters {
            let frozen: Vec<bool> = decoded.iter().map(|b| b.status == DecodeStatus::Converged).collect();
            let cands = regenerate_symbols(&decoded, layout, rx.symbol_rate)?;
            // Once every block has converged and the feedback has been applied,
            // another pass would repeat the previous one exactly.
            if cfg.stop_on_converged && frozen.iter().all(|&f| f) && prev_cands.as_ref() == Some(&cands) {
                break;
            }
            let (y, res) = stage.equalize(Some(&cands), &DecisionSource::FecFeedback(cands.clone()))?;
            let nv = noise_variance(&y, &cands);
            let prior = (cfg.prior != PriorMode::Off).then_some(&decoded[..]);
            let freeze = if cfg.stop_on_converged { frozen } else { no_freeze.clone() };
            let next = match prior {
                Some(p) => stage.decode(&y, nv, Some(p), &freeze)?,
                None => {
                    let prev = decoded.clone();
                    let mut d = stage.decode(&y, nv, None, &no_freeze)?;
                    for (i, f) in freeze.iter().enumerate() {
                        if *f {
                            d[i] = prev[i].clone();
                        }
                    }
                    d
                }
            };
            decoded = next;
            trace.records.push(stage.record(it, &y, &decoded, res, nv)?);
            frame = y;
            prev_cands = Some(cands);
        }
    }
    Ok(SchemeOutput { frame, decoded, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fec::{ldpc_encode, CodeRate, LdpcCode, QamConstellation};
    use crate::pert::CouplingEntry;
    use crate::rng::{purpose, stream};
    use crate::Complex64;
    use rand::Rng;
    use std::sync::Arc;

    fn layout() -> FrameLayout {
        let code = Arc::new(LdpcCode::dvbs2(CodeRate::R5_6));
        FrameLayout::new(code, QamConstellation::new(16).unwrap(), 2).unwrap()
    }

    fn tx_frame(l: &FrameLayout, seed: u64) -> (SymbolFrame, Vec<Vec<u8>>) {
        let mut rng = stream(seed, &[purpose::TEST]);
        let cws: Vec<Vec<u8>> = (0..l.num_blocks)
            .map(|_| {
                let info: Vec<u8> = (0..l.code.info_len()).map(|_| rng.random_range(0..2u8)).collect();
                ldpc_encode(&info, &l.code).unwrap().bits
            })
            .collect();
        (l.map_codewords(&cws, 1.0).unwrap(), cws)
    }

    fn matrix() -> CouplingMatrix {
        let e = |m, n, re, im| CouplingEntry { m, n, c: Complex64::new(re, im) };
        CouplingMatrix::from_entries(
            2,
            -16.0,
            0.05,
            vec![e(0, 0, 0.0, 1.0), e(1, 0, 0.1, 0.5), e(0, 1, 0.1, 0.5), e(-1, 0, 0.1, 0.5), e(0, -1, 0.1, 0.5), e(1, 1, 0.05, 0.2), e(-1, -1, 0.05, 0.2)],
        )
        .unwrap()
    }

    fn with_awgn(f: &SymbolFrame, snr_db: f64, seed: u64) -> SymbolFrame {
        use rand_distr::{Distribution, Normal};
        let g = Normal::new(0.0, (0.5 * 10f64.powf(-snr_db / 10.0)).sqrt()).unwrap();
        let mut rng = stream(seed, &[purpose::TEST, 2]);
        let mut out = f.clone();
        for v in out.x.iter_mut().chain(out.y.iter_mut()) {
            *v += Complex64::new(g.sample(&mut rng), g.sample(&mut rng));
        }
        out
    }

    #[test]
    fn regenerated_frame_equals_transmitted() {
        let l = layout();
        let (tx, cws) = tx_frame(&l, 1);
        let blocks: Vec<CodewordBlock> = cws
            .iter()
            .map(|b| CodewordBlock { bits: b.clone(), llrs: vec![0.0; b.len()], status: DecodeStatus::Converged, iterations: 0 })
            .collect();
        assert_eq!(regenerate_symbols(&blocks, &l, 1.0).unwrap(), tx);
        let mut flipped = blocks.clone();
        flipped[1].bits[777] ^= 1;
        flipped[1].status = DecodeStatus::MaxItersReached;
        let r = regenerate_symbols(&flipped, &l, 1.0).unwrap();
        let diff = r.x.iter().chain(&r.y).zip(tx.x.iter().chain(&tx.y)).filter(|(a, b)| a != b).count();
        assert_eq!(diff, 1);
        assert!(regenerate_symbols(&blocks[..1], &l, 1.0).is_err());
    }

    #[test]
    fn noiseless_linear_channel_every_scheme() {
        let l = layout();
        let (tx, _) = tx_frame(&l, 2);
        let zero = CouplingMatrix::from_entries(2, -16.0, 0.0, vec![CouplingEntry { m: 0, n: 0, c: Complex64::new(0.0, 1.0) }]).unwrap();
        for scheme in [Scheme::NoNlc, Scheme::Conventional, Scheme::FecAssisted, Scheme::Genie] {
            let out = run_scheme(&tx, Some(&tx), &zero, &l, &SchemeConfig::for_scheme(scheme)).unwrap();
            // The feedback pass always runs once; convergence stops the loop after it.
            let expect = if scheme == Scheme::FecAssisted { 2 } else { 1 };
            assert_eq!(out.trace.records.len(), expect, "{scheme:?}");
            for r in &out.trace.records {
                assert_eq!(r.pre_fec_ber, Some(0.0));
                assert_eq!(r.post_fec_ber, Some(0.0));
            }
        }
    }

    #[test]
    fn genie_needs_truth() {
        let l = layout();
        let (tx, _) = tx_frame(&l, 3);
        let err = run_scheme(&tx, None, &matrix(), &l, &SchemeConfig::for_scheme(Scheme::Genie)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn single_iteration_fec_assisted_is_conventional() {
        let l = layout();
        let (tx, _) = tx_frame(&l, 4);
        let rx = with_awgn(&tx, 9.0, 5);
        for rls_enabled in [false, true] {
            let conv = SchemeConfig { scheme: Scheme::Conventional, rls_enabled, ..SchemeConfig::default() };
            let fec = SchemeConfig { scheme: Scheme::FecAssisted, max_turbo_iters: 1, rls_enabled, ..SchemeConfig::default() };
            let a = run_scheme(&rx, Some(&tx), &matrix(), &l, &conv).unwrap();
            let b = run_scheme(&rx, Some(&tx), &matrix(), &l, &fec).unwrap();
            assert_eq!(a.frame, b.frame);
            assert_eq!(a.decoded, b.decoded);
            assert_eq!(a.trace, b.trace);
        }
    }

    #[test]
    fn feedback_helps_on_model_distortion() {
        let l = layout();
        let (tx, _) = tx_frame(&l, 6);
        let m = matrix();
        let opts = NliOptions::default();
        let nli = estimate_nli_with(&tx, &m, &opts).unwrap();
        let mut rx = tx.clone();
        for k in 0..tx.len() {
            rx.x[k] = (tx.x[k] + nli.delta_x[k]) * Complex64::cis(nli.phi_x[k]);
            rx.y[k] = (tx.y[k] + nli.delta_y[k]) * Complex64::cis(nli.phi_y[k]);
        }
        let rx = with_awgn(&rx, 11.5, 7);
        let run = |scheme| {
            let cfg = SchemeConfig { scheme, ..SchemeConfig::default() };
            run_scheme(&rx, Some(&tx), &m, &l, &cfg).unwrap().trace
        };
        let none = run(Scheme::NoNlc).last().unwrap().snr_db.unwrap();
        let conv = run(Scheme::Conventional).last().unwrap().snr_db.unwrap();
        let fec = run(Scheme::FecAssisted);
        let genie = run(Scheme::Genie).last().unwrap().snr_db.unwrap();
        let fec_snr = fec.last().unwrap().snr_db.unwrap();
        assert!(genie >= fec_snr - 1e-9 && fec_snr >= conv && conv > none, "{genie} {fec_snr} {conv} {none}");
        assert!(fec.records.len() <= 5);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("bogus".parse::<Scheme>().is_err());
    }
}
