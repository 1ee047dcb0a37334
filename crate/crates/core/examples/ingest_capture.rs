//! Export one simulated channel as a `.dpwf` capture with its JSON sidecar, then
//! process it the way a recorded waveform would be, with and without the
//! transmitted codewords.

use pertnlc::harness::{export_channel, ingest_waveform, simulate_cell, ExperimentConfig, Preset, Sidecar};

fn main() -> pertnlc::Result<()> {
    let dir = std::env::temp_dir().join("pertnlc_ingest_example");
    std::fs::create_dir_all(&dir)?;
    let mut cfg = ExperimentConfig::from_preset(Preset::DeskScale);
    cfg.set("channels", 1);
    cfg.set("blocks_per_channel", 2);
    cfg.set("link.spans", 2);
    cfg.powers = vec![3.0];
    let plan = cfg.resolve()?;
    let sys = &plan.system;
    let (ch, w, tx) = simulate_cell(sys, &sys.layout()?, 3.0, 11)?.remove(0);
    let pilots = tx.frame.slice(0, sys.receiver.pilot_symbols);

    for (name, truth) in [("with_truth", Some(&tx.codewords[..])), ("blind", None)] {
        let sidecar = Sidecar::new(sys, 3.0, 11, ch, &pilots, truth);
        let path = export_channel(&dir.join(name), &w, &sidecar)?;
        let report = ingest_waveform(&path, &plan, None)?;
        println!("{} ({} bytes), metrics against {}:", path.display(), std::fs::metadata(&path)?.len(), if report.has_truth { "transmitted symbols" } else { "decoder output" });
        for r in &report.result.records {
            println!("  {:<14} SNR {:6.2} dB  pre-FEC BER {:.3e}", r.scheme.name(), r.snr_db, r.pre_fec_ber);
        }
        for (s, why) in &report.result.refused {
            println!("  {:<14} refused: {why}", s.name());
        }
    }
    Ok(())
}
