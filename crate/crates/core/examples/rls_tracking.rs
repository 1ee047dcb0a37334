//! Track a slowly rotating polarization with the decision-directed 2x2 RLS
//! equalizer and compare forgetting factors.

use num_complex::Complex64;
use pertnlc::fec::{map_symbols, QamConstellation};
use pertnlc::rls::{rls_equalize_frame, DecisionSource, RlsParams};
use pertnlc::signal::SymbolFrame;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

fn main() -> pertnlc::Result<()> {
    let qam = QamConstellation::new(16)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let n = 20_000;
    let bits: Vec<u8> = (0..2 * n * 4).map(|_| rng.random_range(0..2u8)).collect();
    let tx = map_symbols(&bits, &qam, 32e9)?;

    // Polarization rotation by an angle drifting through 0.3 rad, plus a weak echo and noise.
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for k in 0..n {
        let th = 0.3 * k as f64 / n as f64;
        let (c, s) = (th.cos(), th.sin());
        let echo = |v: &[Complex64]| if k > 0 { 0.1 * v[k - 1] } else { Complex64::new(0.0, 0.0) };
        let mut noise = || Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)) * 0.03;
        x.push(c * tx.x[k] - s * tx.y[k] + echo(&tx.x) + noise());
        y.push(s * tx.x[k] + c * tx.y[k] + echo(&tx.y) + noise());
    }
    let rx = SymbolFrame::new(x, y, 32e9)?;
    let mse = |f: &SymbolFrame| {
        f.x.iter().chain(&f.y).zip(tx.x.iter().chain(&tx.y)).skip(2000).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / (2 * (n - 1000)) as f64
    };
    println!("no equalizer: MSE {:.2e}", mse(&rx));
    for lambda in [0.9, 0.99, 0.999, 1.0] {
        let p = RlsParams { num_taps: 3, lambda, ..RlsParams::default() };
        let dd = rls_equalize_frame(&rx, &DecisionSource::HardDecision(qam.clone()), &p)?;
        let genie = rls_equalize_frame(&rx, &DecisionSource::Genie(tx.clone()), &p)?;
        println!(
            "lambda {lambda:<5}: decision-directed MSE {:.2e}, genie MSE {:.2e}, resets {}",
            mse(&dd.frame),
            mse(&genie.frame),
            dd.resets
        );
    }
    Ok(())
}
