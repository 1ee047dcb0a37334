//! Propagate a dual-polarization Gaussian pulse through one SMF span with the
//! split-step Fourier method and compare with dispersion-only propagation.
//!
//! ```text
//! cargo run --example ssfm_span -- 12
//! ```
//! The optional argument is the peak power in dBm.

use num_complex::Complex64;
use pertnlc::fiber::{ssfm_propagate_span, FiberParams, LinkConfig};
use pertnlc::rx::{cdc_compensate, CdcSpec};
use pertnlc::signal::DualPolWaveform;

fn main() -> pertnlc::Result<()> {
    let peak_dbm: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20.0);
    let peak = 1e-3 * 10f64.powf(peak_dbm / 10.0);
    let (n, fs, t0) = (4096, 1e12, 5e-12);
    let x: Vec<Complex64> = (0..n)
        .map(|k| {
            let t = (k as f64 - n as f64 / 2.0) / fs;
            Complex64::new((peak / 2.0).sqrt() * (-t * t / (2.0 * t0 * t0)).exp(), 0.0)
        })
        .collect();
    let input = DualPolWaveform::new(x.clone(), x, fs)?;

    let span = FiberParams::smf(80.0);
    let linear = FiberParams { gamma: 0.0, ..span };
    let nl = ssfm_propagate_span(&input, &span, 100.0)?;
    let lin = ssfm_propagate_span(&input, &linear, 100.0)?;
    println!("span: {} km, loss {:.1} dB, beta2 {:.2} ps^2/km", span.length_km, span.span_loss_db(), span.beta2() * 1e27);
    println!("pulse energy in {:.3e} J, out {:.3e} J", input.energy() / fs, nl.energy() / fs);

    // Undo the loss and the dispersion, then look at what the Kerr effect left behind.
    let mut link = LinkConfig::uniform(1, 80.0);
    link.ase = false;
    let cdc = CdcSpec::for_link(&link, fs);
    let g = 10f64.powf(span.span_loss_db() / 20.0);
    for (name, w) in [("linear", lin), ("nonlinear", nl)] {
        let mut back = cdc_compensate(&w, &cdc)?;
        back.scale(g);
        let c = n / 2;
        let phase = (back.x[c] / input.x[c]).arg();
        let err: f64 = back.x.iter().zip(&input.x).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
            / input.x.iter().map(|v| v.norm_sqr()).sum::<f64>();
        println!("{name:>9}: after CDC, peak phase {phase:+.4} rad, NMSE vs input {err:.2e}");
    }
    Ok(())
}
