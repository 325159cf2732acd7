//! Gaussian probe pulses and their input photon number.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian probe pulse `Ω_p^s·exp(−(t − t₀)²/τ_d²)` at carrier `ω_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePulse {
    /// Peak Rabi frequency `Ω_p^s` (rad/ns).
    pub amp: f64,
    /// Duration parameter `τ_d` (ns).
    pub tau_d: f64,
    /// Centre `t₀` (ns).
    pub t0: f64,
    /// Carrier frequency `ω_p` (rad/ns).
    pub carrier: f64,
}

impl ProbePulse {
    pub fn validate(&self) -> Result<()> {
        if !(self.amp >= 0.0) || !self.amp.is_finite() {
            return Err(Error::Domain(format!("pulse amplitude must be finite and non-negative, got {}", self.amp)));
        }
        if !(self.tau_d > 0.0) || !self.tau_d.is_finite() {
            return Err(Error::Domain(format!("pulse duration must be positive, got {}", self.tau_d)));
        }
        if !self.t0.is_finite() || !self.carrier.is_finite() {
            return Err(Error::Domain("pulse centre and carrier must be finite".into()));
        }
        Ok(())
    }

    /// Envelope relative to the peak, `exp(−(t − t₀)²/τ_d²)`.
    pub fn shape(&self, t: f64) -> f64 {
        let x = (t - self.t0) / self.tau_d;
        (-x * x).exp()
    }

    /// Input field amplitude `α_in = Ω_p(t)/√(2Γ)`.
    pub fn alpha_in(&self, t: f64, gamma_relax: f64) -> f64 {
        gaussian_probe(t, self) / (2.0 * gamma_relax).sqrt()
    }
}

/// Instantaneous probe Rabi frequency `Ω_p^s·exp(−(t − t₀)²/τ_d²)`.
pub fn gaussian_probe(t: f64, pulse: &ProbePulse) -> f64 {
    pulse.amp * pulse.shape(t)
}

/// Mean photon number `∫|α_in|²dt = Ω_p^s²·τ_d·√(π/2)/(2Γ)` carried by the pulse.
pub fn mean_input_photons(pulse: &ProbePulse, gamma_relax: f64) -> Result<f64> {
    if !(gamma_relax > 0.0) {
        return Err(Error::Domain(format!("Γ must be positive, got {gamma_relax}")));
    }
    Ok(pulse.amp * pulse.amp * pulse.tau_d * std::f64::consts::FRAC_PI_2.sqrt() / (2.0 * gamma_relax))
}
