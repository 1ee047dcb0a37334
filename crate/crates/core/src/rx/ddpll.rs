use crate::fec::QamConstellation;
use crate::signal::SymbolFrame;
use crate::Complex64;

/// Proportional/integral gains of a critically damped second-order loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PllGains {
    pub kp: f64,
    pub ki: f64,
}

impl PllGains {
    /// Gains for noise bandwidth `bn_ts` (normalized to the symbol rate), damping `1/sqrt 2`.
    pub fn from_bandwidth(bn_ts: f64) -> Self {
        let zeta = std::f64::consts::FRAC_1_SQRT_2;
        let theta = bn_ts / (zeta + 1.0 / (4.0 * zeta));
        let d = 1.0 + 2.0 * zeta * theta + theta * theta;
        Self {
            kp: 4.0 * zeta * theta / d,
            ki: 4.0 * theta * theta / d,
        }
    }
}

fn track(sym: &[Complex64], c: &QamConstellation, g: PllGains) -> Vec<Complex64> {
    let mut theta = 0.0;
    let mut integ = 0.0;
    sym.iter()
        .map(|&r| {
            let z = r * Complex64::cis(-theta);
            let e = (z * c.decide(z).conj()).arg();
            integ += g.ki * e;
            theta += g.kp * e + integ;
            z
        })
        .collect()
}

/// Decision-directed PLL run independently on each polarization.
pub fn ddpll_carrier_recovery(frame: &SymbolFrame, c: &QamConstellation, loop_bw: f64) -> SymbolFrame {
    let g = PllGains::from_bandwidth(loop_bw);
    SymbolFrame {
        x: track(&frame.x, c, g),
        y: track(&frame.y, c, g),
        symbol_rate: frame.symbol_rate,
        source_bits: frame.source_bits.clone(),
    }
}
