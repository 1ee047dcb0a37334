//! Single-channel 16QAM over 5 x 80 km at high power: dispersion compensation
//! only against digital backpropagation with a few step sizes.
//!
//! ```text
//! cargo run --release --example dbp_vs_cdc
//! ```

use pertnlc::dbp::{dbp_backpropagate, DbpConfig};
use pertnlc::fec::{map_symbols, QamConstellation};
use pertnlc::fiber::{propagate_link, LinkConfig};
use pertnlc::metrics::snr_estimate;
use pertnlc::rx::{cdc_compensate, CdcSpec};
use pertnlc::signal::{matched_filter, sample_symbols, shape_pulses, DualPolWaveform, RrcFilterSpec, SymbolFrame};
use rand::{Rng, SeedableRng};

fn receive(w: &DualPolWaveform, spec: &RrcFilterSpec, tx: &SymbolFrame) -> pertnlc::Result<f64> {
    let mut s = sample_symbols(&matched_filter(w, spec)?, 2, 0)?;
    // One complex gain per polarization, fitted on the known symbols.
    for p in 0..2 {
        let num: num_complex::Complex64 = s.pol(p).iter().zip(tx.pol(p)).map(|(r, t)| t * r.conj()).sum();
        let den: f64 = s.pol(p).iter().map(|r| r.norm_sqr()).sum();
        let g = num / den;
        s.pol_mut(p).iter_mut().for_each(|v| *v *= g);
    }
    Ok(snr_estimate(&s, tx)?.ratio_avg_db())
}

fn main() -> pertnlc::Result<()> {
    let rs = 32e9;
    let qam = QamConstellation::new(16)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let bits: Vec<u8> = (0..2 * 16384 * 4).map(|_| rng.random_range(0..2u8)).collect();
    let tx = map_symbols(&bits, &qam, rs)?;
    let spec = RrcFilterSpec::spectral(0.1, 2);

    println!("power   CDC      DBP 10 km  DBP 2 km  DBP 0.5 km   (SNR, dB)");
    for power in [0.0, 4.0, 8.0] {
        let mut link = LinkConfig::uniform(5, 80.0);
        link.launch_power_dbm_per_channel = power;
        link.rng_seed = 4;
        let mut w = shape_pulses(&tx, &spec)?;
        w.scale((link.launch_power_w() / w.mean_power()).sqrt());
        let rx = propagate_link(&w, &link)?;
        let cdc = receive(&cdc_compensate(&rx, &CdcSpec::for_link(&link, rx.sample_rate))?, &spec, &tx)?;
        let mut row = format!("{power:+4.0}    {cdc:6.2}");
        for step in [10.0, 2.0, 0.5] {
            let mut cfg = DbpConfig::for_link(&link, rs)?;
            cfg.step_km = step;
            row += &format!("   {:7.2}", receive(&dbp_backpropagate(&rx, &cfg)?, &spec, &tx)?);
        }
        println!("{row}");
    }
    Ok(())
}
