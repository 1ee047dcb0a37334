use std::sync::Arc;

use super::{map_symbols, Interleaver, LdpcCode, QamConstellation};
use crate::error::{param, Result};
use crate::signal::SymbolFrame;

/// How codewords are laid out on a dual-polarization symbol frame.
///
/// Each codeword is interleaved on its own and occupies
/// `64800 / (2 * bits_per_symbol)` consecutive symbol slots on both
/// polarizations; codewords follow each other in time.
#[derive(Debug, Clone)]
pub struct FrameLayout {
    pub code: Arc<LdpcCode>,
    pub constellation: QamConstellation,
    pub interleaver: Interleaver,
    pub num_blocks: usize,
}

impl FrameLayout {
    pub fn new(code: Arc<LdpcCode>, constellation: QamConstellation, num_blocks: usize) -> Result<Self> {
        let interleaver = Interleaver::new(constellation.bits_per_symbol())?;
        if num_blocks == 0 {
            return param("a frame needs at least one codeword");
        }
        Ok(Self {
            code,
            constellation,
            interleaver,
            num_blocks,
        })
    }

    pub fn symbols_per_block(&self) -> usize {
        self.code.block_len() / (2 * self.constellation.bits_per_symbol())
    }

    /// Dual-polarization symbol slots per frame.
    pub fn frame_len(&self) -> usize {
        self.num_blocks * self.symbols_per_block()
    }

    /// Interleave and map codewords (in frame order) to symbols.
    pub fn map_codewords(&self, codewords: &[Vec<u8>], symbol_rate: f64) -> Result<SymbolFrame> {
        if codewords.len() != self.num_blocks {
            return param(format!(
                "frame holds {} codewords, got {}",
                self.num_blocks,
                codewords.len()
            ));
        }
        let mut bits = Vec::with_capacity(self.num_blocks * self.code.block_len());
        for cw in codewords {
            bits.extend(self.interleaver.interleave(cw)?);
        }
        map_symbols(&bits, &self.constellation, symbol_rate)
    }

    /// Split frame-order bit values into deinterleaved per-codeword vectors.
    pub fn to_blocks<T: Copy + Default>(&self, frame_values: &[T]) -> Result<Vec<Vec<T>>> {
        if frame_values.len() != self.num_blocks * self.code.block_len() {
            return param(format!(
                "expected {} frame values, got {}",
                self.num_blocks * self.code.block_len(),
                frame_values.len()
            ));
        }
        frame_values
            .chunks(self.code.block_len())
            .map(|c| self.interleaver.deinterleave(c))
            .collect()
    }

    /// Inverse of [`FrameLayout::to_blocks`].
    pub fn to_frame<T: Copy + Default>(&self, blocks: &[Vec<T>]) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(self.num_blocks * self.code.block_len());
        for b in blocks {
            out.extend(self.interleaver.interleave(b)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fec::{demap_llr, ldpc_encode, CodeRate, DemapMethod};

    #[test]
    fn codewords_survive_mapping() {
        let code = Arc::new(LdpcCode::dvbs2(CodeRate::R5_6));
        let layout = FrameLayout::new(code.clone(), QamConstellation::new(64).unwrap(), 2).unwrap();
        assert_eq!(layout.frame_len(), 10800);
        let cws: Vec<Vec<u8>> = (0..2)
            .map(|s| {
                let info: Vec<u8> = (0..code.info_len()).map(|i| ((i * 31 + s) % 3 == 0) as u8).collect();
                ldpc_encode(&info, &code).unwrap().bits
            })
            .collect();
        let frame = layout.map_codewords(&cws, 32e9).unwrap();
        assert_eq!(frame.len(), 10800);
        let llr = demap_llr(&frame, &layout.constellation, &[1e-3], None, DemapMethod::MaxLog).unwrap();
        let blocks = layout.to_blocks(&llr).unwrap();
        for (b, cw) in blocks.iter().zip(&cws) {
            let hard: Vec<u8> = b.iter().map(|&l| u8::from(l < 0.0)).collect();
            assert_eq!(&hard, cw);
        }
        assert_eq!(layout.to_frame(&blocks).unwrap(), llr);
    }
}
