//! One WDM cell of the desk system: transmit, propagate, extract the center
//! channel, then CDC, matched filter and pilot-trained MMSE.

use pertnlc::harness::{linear_receiver, simulate_cell, ExperimentConfig, Preset};
use pertnlc::metrics::snr_estimate;

fn main() -> pertnlc::Result<()> {
    let mut cfg = ExperimentConfig::from_preset(Preset::DeskScale);
    // Shorter link so the example runs in seconds.
    cfg.set("link.spans", 3);
    cfg.set("blocks_per_channel", 2);
    let sys = cfg.resolve()?.system;
    let layout = sys.layout()?;
    for power in [-2.0, 2.0, 6.0] {
        for (ch, w, tx) in simulate_cell(&sys, &layout, power, 1)? {
            let pilots = tx.frame.slice(0, sys.receiver.pilot_symbols);
            let y = linear_receiver(&w, &pilots, &sys, power, None)?;
            let s = snr_estimate(&y, &tx.frame)?;
            println!(
                "{power:+.0} dBm, channel {ch}: {} symbols/pol at {:.0} GS/s, SNR x {:.2} dB, y {:.2} dB",
                y.len(),
                w.sample_rate / 1e9,
                s.ratio_db[0],
                s.ratio_db[1]
            );
        }
    }
    Ok(())
}
