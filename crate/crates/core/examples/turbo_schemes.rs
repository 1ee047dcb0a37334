//! Every receiver scheme on one simulated channel, with the per-iteration trace
//! of the turbo loop.
//!
//! ```text
//! cargo run --release --example turbo_schemes -- 3.0
//! ```

use pertnlc::harness::{base_matrix, linear_receiver, simulate_cell, ExperimentConfig, Preset};
use pertnlc::pert::{calibrate_scale, GaussianPulse};
use pertnlc::turbo::{run_scheme, Scheme};

fn main() -> pertnlc::Result<()> {
    let power: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3.0);
    let mut cfg = ExperimentConfig::from_preset(Preset::DeskScale);
    cfg.set("channels", 1);
    cfg.set("link.spans", 4);
    let sys = cfg.resolve()?.system;
    let layout = sys.layout()?;
    let (_, w, tx) = simulate_cell(&sys, &layout, power, 3)?.remove(0);
    let y = linear_receiver(&w, &tx.frame.slice(0, sys.receiver.pilot_symbols), &sys, power, None)?;

    let pulse = GaussianPulse::matched_to(&sys.rrc(), sys.symbol_rate)?;
    let m = base_matrix(&sys)?.with_p0(pulse.peak_power(1e-3 * 10f64.powf(power / 10.0)));
    let (m, report) = calibrate_scale(&m, &y, &tx.frame, &sys.nlc.options)?;
    println!("{} coefficients, calibrated scale {:.3}, {:?}", m.len(), m.scale(), report.status);

    println!("scheme         iter  SNR dB   pre-FEC BER  post-FEC BER  converged");
    for scheme in [Scheme::NoNlc, Scheme::Conventional, Scheme::FecAssisted, Scheme::Genie] {
        let out = run_scheme(&y, Some(&tx.frame), &m, &layout, &sys.scheme_config(scheme))?;
        for r in &out.trace.records {
            println!(
                "{:<14} {:>4}  {:6.2}   {:.3e}    {:.3e}     {}/{}",
                scheme.name(),
                r.iteration,
                r.snr_db.unwrap_or(f64::NAN),
                r.pre_fec_ber.unwrap_or(f64::NAN),
                r.post_fec_ber.unwrap_or(f64::NAN),
                r.converged_blocks,
                layout.num_blocks
            );
        }
    }
    Ok(())
}
