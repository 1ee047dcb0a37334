//! `DPWF` little-endian waveform files.
//!
//! Layout: magic `b"DPWF"`, version `u32`, sample rate `f64`, sample count
//! `u64`, reference power (dBm) `f64`, then `count` quadruples of `f64`
//! in the order `Ix, Qx, Iy, Qy`.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::DualPolWaveform;
use crate::error::{Error, Result};

pub const WAVEFORM_MAGIC: [u8; 4] = *b"DPWF";
pub const WAVEFORM_VERSION: u32 = 1;
const HEADER_LEN: u64 = 4 + 4 + 8 + 8 + 8;

pub fn write_waveform<W: Write>(mut out: W, w: &DualPolWaveform) -> Result<()> {
    out.write_all(&WAVEFORM_MAGIC)?;
    out.write_all(&WAVEFORM_VERSION.to_le_bytes())?;
    out.write_all(&w.sample_rate.to_le_bytes())?;
    out.write_all(&(w.len() as u64).to_le_bytes())?;
    out.write_all(&w.power_ref_dbm.to_le_bytes())?;
    let mut buf = Vec::with_capacity(w.len() * 32);
    for (a, b) in w.x.iter().zip(&w.y) {
        for v in [a.re, a.im, b.re, b.im] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

fn format_err(offset: u64, message: impl Into<String>) -> Error {
    Error::Format {
        offset,
        message: message.into(),
    }
}

pub fn read_waveform<R: Read>(mut input: R) -> Result<DualPolWaveform> {
    let mut header = [0u8; HEADER_LEN as usize];
    let got = read_full(&mut input, &mut header)?;
    if got < header.len() {
        return Err(format_err(
            got as u64,
            format!("header truncated: expected {HEADER_LEN} bytes, found {got}"),
        ));
    }
    if header[0..4] != WAVEFORM_MAGIC {
        return Err(format_err(0, "bad magic, expected \"DPWF\""));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(header[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != WAVEFORM_VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let sample_rate = f64::from_bits(u64_at(8));
    let len = u64_at(16);
    let power_ref_dbm = f64::from_bits(u64_at(24));
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(format_err(8, format!("invalid sample rate {sample_rate}")));
    }
    let expect = len
        .checked_mul(32)
        .ok_or_else(|| format_err(16, "sample count overflows"))?;
    let mut body = vec![0u8; expect as usize];
    let got = read_full(&mut input, &mut body)? as u64;
    if got < expect {
        return Err(format_err(
            HEADER_LEN + got,
            format!(
                "payload truncated: expected {expect} bytes for {len} samples, found {got}"
            ),
        ));
    }
    let f = |o: usize| f64::from_le_bytes(body[o..o + 8].try_into().unwrap());
    let mut x = Vec::with_capacity(len as usize);
    let mut y = Vec::with_capacity(len as usize);
    for k in 0..len as usize {
        let o = k * 32;
        x.push(Complex64::new(f(o), f(o + 8)));
        y.push(Complex64::new(f(o + 16), f(o + 24)));
    }
    let mut w = DualPolWaveform::new(x, y, sample_rate)
        .map_err(|e| format_err(HEADER_LEN, e.to_string()))?;
    w.power_ref_dbm = power_ref_dbm;
    Ok(w)
}

fn read_full<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(k) => filled += k,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            samples in prop::collection::vec(prop::array::uniform4(-1e3f64..1e3), 1..64),
            fs in 1.0f64..1e12,
            p in -20.0f64..20.0,
        ) {
            let x = samples.iter().map(|s| Complex64::new(s[0], s[1])).collect();
            let y = samples.iter().map(|s| Complex64::new(s[2], s[3])).collect();
            let mut w = DualPolWaveform::new(x, y, fs).unwrap();
            w.power_ref_dbm = p;
            let mut buf = Vec::new();
            write_waveform(&mut buf, &w).unwrap();
            prop_assert_eq!(buf.len() as u64, HEADER_LEN + 32 * samples.len() as u64);
            let back = read_waveform(&buf[..]).unwrap();
            prop_assert_eq!(back, w);
        }
    }

    #[test]
    fn truncated_payload_names_lengths() {
        let w = DualPolWaveform::new(vec![Complex64::new(1.0, 2.0); 4], vec![Complex64::new(0.5, 0.0); 4], 1e9).unwrap();
        let mut buf = Vec::new();
        write_waveform(&mut buf, &w).unwrap();
        buf.truncate(buf.len() - 10);
        let err = read_waveform(&buf[..]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("expected 128 bytes"), "{msg}");
        assert!(msg.contains("found 118"), "{msg}");
    }

    #[test]
    fn bad_magic() {
        let err = read_waveform(&b"XXXX\x01\0\0\0aaaaaaaabbbbbbbbcccccccc"[..]).unwrap_err();
        assert!(matches!(err, Error::Format { offset: 0, .. }));
    }
}
