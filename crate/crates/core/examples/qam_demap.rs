//! Soft demapping of 64QAM on an AWGN channel: exact and max-log LLRs,
//! hard-decision BER and the equivalent Q-factor.

use num_complex::Complex64;
use pertnlc::fec::{demap_hard, demap_llr, map_symbols, DemapMethod, QamConstellation};
use pertnlc::metrics::{ber_count, q2_from_ber};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

fn main() -> pertnlc::Result<()> {
    let qam = QamConstellation::new(64)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let bits: Vec<u8> = (0..2 * 20_000 * 6).map(|_| rng.random_range(0..2u8)).collect();
    let tx = map_symbols(&bits, &qam, 32e9)?;
    for snr_db in [14.0, 17.0, 20.0] {
        let var = 10f64.powf(-snr_db / 10.0);
        let mut rx = tx.clone();
        for v in rx.x.iter_mut().chain(rx.y.iter_mut()) {
            let (a, b): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            *v += Complex64::new(a, b) * (var / 2.0).sqrt();
        }
        let ber = ber_count(&demap_hard(&rx, &qam), &bits)?;
        let exact = demap_llr(&rx, &qam, &[var], None, DemapMethod::LogMap)?;
        let maxlog = demap_llr(&rx, &qam, &[var], None, DemapMethod::MaxLog)?;
        let gap = exact.iter().zip(&maxlog).map(|(a, b)| (a - b).abs()).sum::<f64>() / exact.len() as f64;
        // Mutual information estimate from the exact LLRs.
        let mi = 1.0
            - exact
                .iter()
                .zip(&bits)
                .map(|(l, &b)| {
                    let s = if b == 0 { *l } else { -*l };
                    (1.0 + (-s).exp()).log2()
                })
                .sum::<f64>()
                / exact.len() as f64;
        println!(
            "SNR {snr_db:4.1} dB: BER {:.3e}, Q2 {:.2} dB, bitwise MI {mi:.3}, mean |LogMap - MaxLog| {gap:.3}",
            ber.ber,
            q2_from_ber(ber.ber)?
        );
    }
    Ok(())
}
