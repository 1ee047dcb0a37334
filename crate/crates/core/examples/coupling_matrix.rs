//! Coupling coefficients `C(m, n)` of a 10 x 80 km link, their pruning, and the
//! NLI they predict for a random 64QAM frame.
//!
//! ```text
//! cargo run --release --example coupling_matrix -- 2.0
//! ```
//! The optional argument is the launch power per channel in dBm.

use pertnlc::fec::{map_symbols, QamConstellation};
use pertnlc::fiber::LinkConfig;
use pertnlc::pert::{estimate_nli_with, generate_coupling_matrix, write_coupling_matrix, GaussianPulse, NliOptions};
use pertnlc::signal::RrcFilterSpec;
use rand::{Rng, SeedableRng};

fn main() -> pertnlc::Result<()> {
    let power_dbm: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2.0);
    let rs = 32e9;
    let link = LinkConfig::uniform(10, 80.0);
    let pulse = RrcFilterSpec::spectral(0.005, 8);
    let full = generate_coupling_matrix(&link, &pulse, rs, 40, f64::NEG_INFINITY)?;
    println!("memory 40: {} coefficients, |C(0,0)| = {:.3e}", full.len(), full.c00().norm());
    for cutoff in [-16.0, -25.0, -35.0] {
        let p = full.pruned(cutoff);
        println!("  cutoff {cutoff:>5} dB keeps {:4} ({:.2}% of the grid)", p.len(), 100.0 * p.retained_fraction());
    }

    let p_ch = 1e-3 * 10f64.powf(power_dbm / 10.0);
    let g = GaussianPulse::matched_to(&pulse, rs)?;
    let m = full.pruned(-25.0).with_p0(g.peak_power(p_ch));
    println!("\nlargest coefficients at {power_dbm} dBm (P0 = {:.3e} W):", m.p0());
    let mut text = Vec::new();
    write_coupling_matrix(&mut text, &m)?;
    for line in String::from_utf8_lossy(&text).lines().take(8) {
        println!("  {line}");
    }

    let qam = QamConstellation::new(64)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let bits: Vec<u8> = (0..2 * 4096 * 6).map(|_| rng.random_range(0..2u8)).collect();
    let a = map_symbols(&bits, &qam, rs)?;
    let nli = estimate_nli_with(&a, &m, &NliOptions::periodic())?;
    let add: f64 = nli.delta_x.iter().map(|d| d.norm_sqr()).sum::<f64>() / a.len() as f64;
    let phi: f64 = nli.phi_x.iter().map(|p| p * p).sum::<f64>() / a.len() as f64;
    println!("\npredicted intra-channel NLI: additive {:.1} dB below signal, rms phase {:.4} rad", -10.0 * add.log10(), phi.sqrt());
    Ok(())
}
