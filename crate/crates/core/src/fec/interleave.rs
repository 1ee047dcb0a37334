use crate::error::{param, Result};

use super::ldpc::BLOCK_LEN;

/// Row-column block interleaver spanning one codeword.
///
/// Bits are written row-wise into `rows x cols` and read column-wise. With
/// `rows = 2 * bits_per_symbol` every column becomes one dual-polarization
/// symbol, so consecutive symbols draw bits from positions `cols` apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interleaver {
    rows: usize,
    cols: usize,
}

impl Interleaver {
    pub fn new(bits_per_symbol: usize) -> Result<Self> {
        let rows = 2 * bits_per_symbol;
        if rows == 0 || BLOCK_LEN % rows != 0 {
            return param(format!(
                "{bits_per_symbol} bits per symbol does not tile a {BLOCK_LEN}-bit block"
            ));
        }
        Ok(Self {
            rows,
            cols: BLOCK_LEN / rows,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Output position of input bit `i` within its block.
    #[inline]
    pub fn position(&self, i: usize) -> usize {
        (i % self.cols) * self.rows + i / self.cols
    }

    fn check(&self, len: usize) -> Result<()> {
        if len % BLOCK_LEN != 0 {
            return param(format!("length {len} is not a multiple of {BLOCK_LEN}"));
        }
        Ok(())
    }

    pub fn interleave<T: Copy + Default>(&self, data: &[T]) -> Result<Vec<T>> {
        self.check(data.len())?;
        let mut out = vec![T::default(); data.len()];
        for (blk_in, blk_out) in data.chunks(BLOCK_LEN).zip(out.chunks_mut(BLOCK_LEN)) {
            for (i, &v) in blk_in.iter().enumerate() {
                blk_out[self.position(i)] = v;
            }
        }
        Ok(out)
    }

    pub fn deinterleave<T: Copy + Default>(&self, data: &[T]) -> Result<Vec<T>> {
        self.check(data.len())?;
        let mut out = vec![T::default(); data.len()];
        for (blk_in, blk_out) in data.chunks(BLOCK_LEN).zip(out.chunks_mut(BLOCK_LEN)) {
            for (i, v) in blk_out.iter_mut().enumerate() {
                *v = blk_in[self.position(i)];
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bijective_on_one_block() {
        let il = Interleaver::new(6).unwrap();
        let mut seen = vec![false; BLOCK_LEN];
        for i in 0..BLOCK_LEN {
            let p = il.position(i);
            assert!(!seen[p]);
            seen[p] = true;
        }
    }

    #[test]
    fn round_trip() {
        let il = Interleaver::new(4).unwrap();
        let data: Vec<u32> = (0..2 * BLOCK_LEN as u32).collect();
        let back = il.deinterleave(&il.interleave(&data).unwrap()).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn burst_is_spread() {
        let il = Interleaver::new(6).unwrap();
        let mut errs = vec![0u8; BLOCK_LEN];
        for e in errs.iter_mut().skip(30000).take(100) {
            *e = 1;
        }
        let d = il.deinterleave(&errs).unwrap();
        let mut run = 0;
        let mut worst = 0;
        for b in d {
            run = if b == 1 { run + 1 } else { 0 };
            worst = worst.max(run);
        }
        assert!(worst <= 10, "run {worst}");
    }

    #[test]
    fn deterministic() {
        let il = Interleaver::new(6).unwrap();
        let data: Vec<u8> = (0..BLOCK_LEN).map(|i| (i * 7 % 256) as u8).collect();
        assert_eq!(il.interleave(&data).unwrap(), il.interleave(&data).unwrap());
    }

    #[test]
    fn partial_block_rejected() {
        let il = Interleaver::new(6).unwrap();
        assert!(il.interleave(&[0u8; 100]).is_err());
        assert!(Interleaver::new(7).is_err());
    }
}
