//! Output-field relation and the analytic Λ-type transmission.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transmission `t = 1 + iΓ⟨σ⟩/Ω_p` of the line from the atomic coherence.
pub fn transmission_from_sigma(sigma: Complex64, gamma_relax: f64, omega_p_rabi: f64) -> Result<Complex64> {
    if omega_p_rabi == 0.0 || !omega_p_rabi.is_finite() {
        return Err(Error::Domain(format!(
            "probe Rabi frequency must be nonzero and finite, got {omega_p_rabi}"
        )));
    }
    Ok(Complex64::new(1.0, 0.0) + Complex64::new(0.0, gamma_relax) * sigma / omega_p_rabi)
}

/// Detunings of the Λ system for one probe frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaDetunings {
    /// One-photon detuning `Δ₁ = ω̃_q^M − ω_p`.
    pub delta1: f64,
    /// Coupling detuning `Δ₂ = ω̃_q^M − ω̃_r − ω_Φ`.
    pub delta2: f64,
    /// Two-photon detuning `δ = Δ₁ − Δ₂ = ω̃_r + ω_Φ − ω_p`.
    pub delta: f64,
}

impl LambdaDetunings {
    pub fn new(omega_p: f64, omega_q_motional: f64, omega_r_dressed: f64, omega_mod: f64) -> Self {
        let delta1 = omega_q_motional - omega_p;
        let delta2 = omega_q_motional - omega_r_dressed - omega_mod;
        Self {
            delta1,
            delta2,
            delta: delta1 - delta2,
        }
    }
}

/// Analytic transmission of the probed Λ system,
/// `t = 1 + i(Γ/2)(δ − iκ/2) / [(δ − iκ/2)(δ + Δ₂ − iγ) − Ω_Φ²/4]`.
///
/// `gamma` is the total qubit decoherence rate `Γ/2 + γ_φ`. Without coupling
/// the common Raman factor is cancelled, leaving the two-level response.
pub fn analytic_transmission(
    delta: f64,
    delta2: f64,
    gamma_relax: f64,
    gamma: f64,
    kappa: f64,
    omega_phi: f64,
) -> Result<Complex64> {
    for (name, v) in [("Gamma", gamma_relax), ("gamma", gamma), ("kappa", kappa)] {
        if !(v >= 0.0) {
            return Err(Error::Domain(format!("rate {name} must be non-negative, got {v}")));
        }
    }
    let i = Complex64::new(0.0, 1.0);
    let raman = Complex64::new(delta, -kappa / 2.0);
    let optical = Complex64::new(delta + delta2, -gamma);
    if omega_phi == 0.0 {
        if optical == Complex64::new(0.0, 0.0) {
            return Err(Error::Singularity { delta });
        }
        return Ok(1.0 + i * (gamma_relax / 2.0) / optical);
    }
    let denominator = raman * optical - omega_phi * omega_phi / 4.0;
    if denominator == Complex64::new(0.0, 0.0) {
        return Err(Error::Singularity { delta });
    }
    Ok(1.0 + i * (gamma_relax / 2.0) * raman / denominator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz;
    use proptest::prelude::*;

    #[test]
    fn no_coherence_is_full_transmission() {
        let t = transmission_from_sigma(Complex64::new(0.0, 0.0), 0.76, 0.01).unwrap();
        assert_eq!(t, Complex64::new(1.0, 0.0));
        assert!(matches!(
            transmission_from_sigma(Complex64::new(0.1, 0.0), 0.76, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn ideal_transparency_and_extinction() {
        let t = analytic_transmission(0.0, 0.0, 0.76, 0.38, 0.0, 0.1).unwrap();
        assert!((t - 1.0).norm() < 1e-15);
        let t = analytic_transmission(0.0, 0.0, 0.76, 0.38, 0.0, 0.0).unwrap();
        assert!(t.norm() < 1e-15);
    }

    #[test]
    fn reference_transparency_peak() {
        let t = analytic_transmission(0.0, 0.0, mhz(121.0), mhz(63.5), mhz(0.78), mhz(18.0)).unwrap();
        assert!((t.norm() - 0.777).abs() < 1e-3, "{}", t.norm());
        assert!(t.im.abs() < 1e-12);
    }

    #[test]
    fn two_level_extinction_depth() {
        let t = analytic_transmission(0.0, 0.0, mhz(121.0), mhz(63.5), mhz(0.78), 0.0).unwrap();
        assert!((t.norm() - (1.0 - 121.0 / 127.0)).abs() < 1e-12);
    }

    #[test]
    fn singular_denominator() {
        let err = analytic_transmission(0.0, 0.0, 0.76, 0.0, 0.0, 0.0).unwrap_err();
        assert_eq!(err, Error::Singularity { delta: 0.0 });
        let err = analytic_transmission(0.5, 0.0, 0.76, 0.0, 0.0, 1.0).unwrap_err();
        assert_eq!(err, Error::Singularity { delta: 0.5 });
        assert!(matches!(
            analytic_transmission(0.0, 0.0, 0.76, -0.1, 0.0, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn detunings_are_consistent() {
        let d = LambdaDetunings::new(39.31, 39.47, 34.76, 4.55);
        assert!((d.delta - (34.76 + 4.55 - 39.31)).abs() < 1e-12);
        assert!((d.delta1 - d.delta2 - d.delta).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn unmodulated_reduces_to_two_level(delta in -2.0f64..2.0, delta2 in -2.0f64..2.0,
                                            gamma_relax in 0.01f64..1.0, extra in 0.0f64..0.5,
                                            kappa in 0.0f64..0.1) {
            let gamma = gamma_relax / 2.0 + extra;
            let t = analytic_transmission(delta, delta2, gamma_relax, gamma, kappa, 0.0).unwrap();
            let delta1 = delta + delta2;
            let two_level = 1.0 + Complex64::new(0.0, gamma_relax / 2.0) / Complex64::new(delta1, -gamma);
            prop_assert!((t - two_level).norm() < 1e-12);
        }

        #[test]
        fn weak_probe_transmission_is_passive(delta in -2.0f64..2.0, delta2 in -1.0f64..1.0,
                                              gamma_relax in 0.01f64..1.0, extra in 0.0f64..0.5,
                                              kappa in 0.0f64..0.1, omega_phi in 0.0f64..0.3) {
            let gamma = gamma_relax / 2.0 + extra;
            let t = analytic_transmission(delta, delta2, gamma_relax, gamma, kappa, omega_phi).unwrap();
            prop_assert!(t.norm() <= 1.0 + 1e-12);
        }
    }
}
