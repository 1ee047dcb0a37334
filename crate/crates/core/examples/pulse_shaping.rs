//! Shape 16QAM symbols with a root-raised-cosine pulse, matched-filter them and
//! measure the residual ISI of each filter realization.
//!
//! ```text
//! cargo run --example pulse_shaping
//! ```

use pertnlc::fec::{map_symbols, QamConstellation};
use pertnlc::signal::{matched_filter, rrc_taps, sample_symbols, shape_pulses, RrcFilterSpec};
use rand::{Rng, SeedableRng};

fn main() -> pertnlc::Result<()> {
    let qam = QamConstellation::new(16)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let bits: Vec<u8> = (0..2 * 8192 * 4).map(|_| rng.random_range(0..2u8)).collect();
    let tx = map_symbols(&bits, &qam, 32e9)?;

    let taps = rrc_taps(&RrcFilterSpec::new(0.1, 101, 8))?;
    let energy: f64 = taps.iter().map(|t| t * t).sum();
    println!("101-tap RRC, rolloff 0.1: peak {:.4}, energy {energy:.4}", taps[50]);

    for (name, spec) in [
        ("taps, 0.1, 401", RrcFilterSpec::new(0.1, 401, 8)),
        ("taps, 0.005, 401", RrcFilterSpec::new(0.005, 401, 8)),
        ("spectral, 0.005", RrcFilterSpec::spectral(0.005, 8)),
    ] {
        let w = shape_pulses(&tx, &spec)?;
        let rx = sample_symbols(&matched_filter(&w, &spec)?, 8, 0)?;
        let err: f64 = rx.x.iter().zip(&tx.x).map(|(a, b)| (a - b).norm_sqr()).sum();
        let isi_db = 10.0 * (tx.x.len() as f64 * tx.mean_power() / err).log10();
        println!("{name:>18}: signal-to-ISI {isi_db:6.1} dB, occupied bandwidth {:.2} GHz", spec.bandwidth(32e9) / 1e9);
    }
    Ok(())
}
