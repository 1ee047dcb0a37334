use std::f64::consts::PI;

use crate::error::{param, Result};

use super::edfa::SPEED_OF_LIGHT;

/// One fiber span in engineering units.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FiberParams {
    /// Attenuation, dB/km.
    pub alpha_db_km: f64,
    /// Nonlinear coefficient, 1/(W km).
    pub gamma: f64,
    /// Dispersion parameter, ps/(nm km).
    pub dispersion_d: f64,
    pub length_km: f64,
    /// Reference wavelength for converting `D` to `beta2`, nm.
    #[serde(default = "default_wavelength")]
    pub wavelength_nm: f64,
}

fn default_wavelength() -> f64 {
    1550.0
}

impl FiberParams {
    /// Standard single-mode fiber.
    pub fn smf(length_km: f64) -> Self {
        Self {
            alpha_db_km: 0.2,
            gamma: 1.3,
            dispersion_d: 17.0,
            length_km,
            wavelength_nm: 1550.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_db_km >= 0.0) {
            return param(format!("attenuation must be non-negative, got {}", self.alpha_db_km));
        }
        if !(self.length_km > 0.0) {
            return param(format!("span length must be positive, got {}", self.length_km));
        }
        if !(self.wavelength_nm > 0.0) || !self.gamma.is_finite() || !self.dispersion_d.is_finite() {
            return param("fiber parameters must be finite with positive wavelength");
        }
        Ok(())
    }

    /// Power attenuation coefficient, 1/m.
    pub fn alpha_per_m(&self) -> f64 {
        self.alpha_db_km / (10.0 * std::f64::consts::LOG10_E) / 1e3
    }

    /// Group-velocity dispersion `beta2 = -D lambda^2 / (2 pi c)`, s^2/m.
    pub fn beta2(&self) -> f64 {
        let lambda = self.wavelength_nm * 1e-9;
        let d = self.dispersion_d * 1e-6;
        -d * lambda * lambda / (2.0 * PI * SPEED_OF_LIGHT)
    }

    /// Nonlinear coefficient, 1/(W m).
    pub fn gamma_per_m(&self) -> f64 {
        self.gamma / 1e3
    }

    pub fn length_m(&self) -> f64 {
        self.length_km * 1e3
    }

    pub fn span_loss_db(&self) -> f64 {
        self.alpha_db_km * self.length_km
    }

    /// Accumulated dispersion `D L`, ps/nm.
    pub fn accumulated_dispersion(&self) -> f64 {
        self.dispersion_d * self.length_km
    }
}

/// Multi-span amplified link.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinkConfig {
    pub spans: Vec<FiberParams>,
    pub edfa_noise_figure_db: f64,
    pub launch_power_dbm_per_channel: f64,
    pub ssfm_step_m: f64,
    pub rng_seed: u64,
    /// Add ASE noise at every amplifier.
    #[serde(default = "default_true")]
    pub ase: bool,
}

fn default_true() -> bool {
    true
}

impl LinkConfig {
    /// `count` identical SMF spans of `length_km`.
    pub fn uniform(count: usize, length_km: f64) -> Self {
        Self {
            spans: vec![FiberParams::smf(length_km); count],
            edfa_noise_figure_db: 4.5,
            launch_power_dbm_per_channel: 0.0,
            ssfm_step_m: 100.0,
            rng_seed: 0,
            ase: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.spans {
            s.validate()?;
        }
        if !(self.ssfm_step_m > 0.0) {
            return param(format!("SSFM step must be positive, got {}", self.ssfm_step_m));
        }
        Ok(())
    }

    pub fn total_length_km(&self) -> f64 {
        self.spans.iter().map(|s| s.length_km).sum()
    }

    /// Sum of `D L` over spans, ps/nm.
    pub fn accumulated_dispersion(&self) -> f64 {
        self.spans.iter().map(|s| s.accumulated_dispersion()).sum()
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        for s in self.spans.iter_mut() {
            s.gamma = gamma;
        }
        self
    }

    pub fn launch_power_w(&self) -> f64 {
        1e-3 * 10f64.powf(self.launch_power_dbm_per_channel / 10.0)
    }
}
