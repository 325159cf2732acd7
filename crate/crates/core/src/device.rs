//! Circuit parameters and the maps from flux to model frequencies.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units::HBAR;

/// Flux step (in Φ₀) of the central difference in [`flux_slope`].
pub const FLUX_SLOPE_STEP: f64 = 1e-6;

/// Static circuit constants. Frequencies and rates in rad/ns, flux in Φ₀.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// Charging energy `E_c`.
    pub e_c: f64,
    /// Maximum Josephson energy `E_J0`.
    pub e_j0: f64,
    /// Junction asymmetry `d ∈ [0, 1)`.
    pub asymmetry: f64,
    /// Static flux bias in Φ₀.
    pub flux_bias: f64,
    /// Qubit–resonator coupling `g`.
    pub g: f64,
    /// Qubit relaxation rate `Γ`.
    pub gamma_relax: f64,
    /// Pure dephasing rate `γ_φ`.
    pub gamma_phi: f64,
    /// Resonator energy loss rate `κ`.
    pub kappa: f64,
    /// Bare resonator frequency `ω_r`.
    pub omega_r: f64,
    /// Dressed resonator frequency `ω̃_r`.
    pub omega_r_dressed: f64,
    /// Bare qubit frequency; when absent it follows the transmon formula at `flux_bias`.
    pub omega_q: Option<f64>,
    /// Dressed qubit frequency `ω̃_q`; when absent it is `ω_q + g²/(ω_q − ω_r)`.
    pub omega_q_dressed: Option<f64>,
    /// Interaction length in µm.
    pub length_um: f64,
    /// Motional shift constant: rad/ns per Φ₀².
    pub c0: Option<f64>,
    /// Sideband Rabi constant: rad/ns per Φ₀.
    pub c1: Option<f64>,
}

impl DeviceParams {
    /// Total qubit decoherence rate `γ = γ_φ + Γ/2`.
    pub fn gamma_total(&self) -> f64 {
        self.gamma_phi + self.gamma_relax / 2.0
    }

    pub fn josephson_energy(&self) -> f64 {
        josephson_energy(self.flux_bias, self.e_j0, self.asymmetry)
    }

    pub fn bare_qubit_frequency(&self) -> Result<f64> {
        match self.omega_q {
            Some(w) => Ok(w),
            None => qubit_frequency(self.flux_bias, self.e_c, self.e_j0, self.asymmetry),
        }
    }

    pub fn dressed_qubit_frequency(&self) -> Result<f64> {
        match self.omega_q_dressed {
            Some(w) => Ok(w),
            None => {
                let wq = self.bare_qubit_frequency()?;
                let detuning = wq - self.omega_r;
                if detuning == 0.0 {
                    return Err(Error::Domain(
                        "dispersive shift undefined for a resonant qubit".into(),
                    ));
                }
                Ok(wq + self.g * self.g / detuning)
            }
        }
    }

    /// `|dω_q/dΦ|` at the bias point.
    pub fn flux_slope(&self) -> Result<f64> {
        flux_slope(self.flux_bias, self.e_c, self.e_j0, self.asymmetry)
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("E_c", self.e_c),
            ("E_J0", self.e_j0),
            ("g", self.g),
            ("Gamma", self.gamma_relax),
            ("gamma_phi", self.gamma_phi),
            ("kappa", self.kappa),
            ("omega_r", self.omega_r),
            ("omega_r_dressed", self.omega_r_dressed),
            ("L", self.length_um),
        ];
        for (name, value) in non_negative {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::Domain(format!(
                    "{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        for (name, value) in [
            ("omega_q", self.omega_q),
            ("omega_q_dressed", self.omega_q_dressed),
            ("C0", self.c0),
            ("C1", self.c1),
        ] {
            if let Some(v) = value {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Domain(format!(
                        "{name} must be finite and non-negative, got {v}"
                    )));
                }
            }
        }
        if !(0.0..1.0).contains(&self.asymmetry) {
            return Err(Error::Domain(format!(
                "junction asymmetry must lie in [0, 1), got {}",
                self.asymmetry
            )));
        }
        Ok(())
    }
}

/// Probe and flux-modulation settings. Angular quantities in rad/ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    /// Probe Rabi frequency `Ω_p`.
    pub omega_p_rabi: f64,
    /// Probe frequency `ω_p`.
    pub omega_p: f64,
    /// Flux modulation amplitude `δΦ` in Φ₀.
    pub delta_phi: f64,
    /// Frequency modulation amplitude `ε_Φ`; derived from `δΦ` when absent.
    pub eps_phi: Option<f64>,
    /// Modulation frequency `ω_Φ`.
    pub omega_mod: f64,
    /// Explicit sideband Rabi frequency `Ω_Φ`, overriding `C1·δΦ` in the effective frame.
    pub omega_phi_rabi: Option<f64>,
}

/// Above this value of `ε_Φ/(2ω_Φ)` a warning is logged.
pub const MODULATION_INDEX_WARN: f64 = 0.5;

impl DriveConfig {
    /// `ε_Φ`, taking the first-order flux slope at the bias point when not given.
    pub fn eps_phi(&self, device: &DeviceParams) -> Result<f64> {
        match self.eps_phi {
            Some(e) => Ok(e),
            None => Ok(device.flux_slope()?.abs() * self.delta_phi),
        }
    }

    /// Bessel argument `ε_Φ/(2ω_Φ)`.
    pub fn modulation_index(&self, device: &DeviceParams) -> Result<f64> {
        if !(self.omega_mod > 0.0) {
            return Err(Error::Domain(format!(
                "modulation frequency must be positive, got {}",
                self.omega_mod
            )));
        }
        Ok(self.eps_phi(device)? / (2.0 * self.omega_mod))
    }

    pub fn validate(&self, device: &DeviceParams) -> Result<()> {
        for (name, value) in [
            ("Omega_p", self.omega_p_rabi),
            ("omega_p", self.omega_p),
            ("delta_Phi", self.delta_phi),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::Domain(format!(
                    "{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        if let Some(w) = self.omega_phi_rabi {
            if !(w >= 0.0) {
                return Err(Error::Domain(format!("Omega_Phi must be non-negative, got {w}")));
            }
        }
        if self.omega_mod > 0.0 {
            let index = self.modulation_index(device)?;
            if index >= 1.0 {
                return Err(Error::Domain(format!(
                    "eps_Phi/(2 omega_Phi) = {index:.3} is outside the small-argument regime"
                )));
            }
            if index > MODULATION_INDEX_WARN {
                log::warn!("eps_Phi/(2 omega_Phi) = {index:.3} exceeds {MODULATION_INDEX_WARN}");
            }
        }
        Ok(())
    }
}

/// Flux-dependent Josephson energy of an asymmetric SQUID.
///
/// `E_J0·|cos(πΦ)|·√(1 + d² tan²(πΦ))`, written as `E_J0·√(cos² + d² sin²)`
/// so that it stays finite at half flux, where it equals `E_J0·d`.
pub fn josephson_energy(phi: f64, e_j0: f64, d: f64) -> f64 {
    let (s, c) = (PI * phi).sin_cos();
    e_j0 * (c * c + d * d * s * s).sqrt()
}

/// Transmon transition frequency `√(8 E_c E_J(Φ)) − E_c`.
pub fn qubit_frequency(phi: f64, e_c: f64, e_j0: f64, d: f64) -> Result<f64> {
    let ej = josephson_energy(phi, e_j0, d);
    if !(ej > 1e-12 * e_j0.abs()) {
        return Err(Error::Domain(format!(
            "Josephson energy must be positive, got {ej} at Φ = {phi} Φ₀"
        )));
    }
    Ok((8.0 * e_c * ej).sqrt() - e_c)
}

/// `dω_q/dΦ` (rad/ns per Φ₀) by central difference.
pub fn flux_slope(phi: f64, e_c: f64, e_j0: f64, d: f64) -> Result<f64> {
    let h = FLUX_SLOPE_STEP;
    let up = qubit_frequency(phi + h, e_c, e_j0, d)?;
    let down = qubit_frequency(phi - h, e_c, e_j0, d)?;
    Ok((up - down) / (2.0 * h))
}

/// Bessel function of the first kind `J_n(x)` by its power series.
///
/// Accurate to ~1e-15 for `|x| < 2`; usable (with growing cancellation) up to `|x| ≈ 10`.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let q = -half * half;
    let mut sum = term;
    for k in 1..200u32 {
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

pub fn bessel_j1(x: f64) -> f64 {
    bessel_j(1, x)
}

/// Sideband Rabi frequency `Ω_Φ = 2g·J₁(ε_Φ/(2ω_Φ))`.
pub fn parametric_rabi(eps_phi: f64, omega_phi: f64, g: f64) -> Result<f64> {
    if !(omega_phi > 0.0) {
        return Err(Error::Domain(format!(
            "modulation frequency must be positive, got {omega_phi}"
        )));
    }
    Ok(2.0 * g * bessel_j1(eps_phi / (2.0 * omega_phi)))
}

/// Coupling from the dispersive resonator shift, `√((ω_r − ω̃_r)(ω_q − ω_r))`.
pub fn coupling_from_shift(omega_r_bare: f64, omega_r_dressed: f64, omega_q: f64) -> Result<f64> {
    let product = (omega_r_bare - omega_r_dressed) * (omega_q - omega_r_bare);
    if product < 0.0 {
        return Err(Error::Domain(format!(
            "resonator shift and qubit detuning have opposite signs (product {product})"
        )));
    }
    Ok(product.sqrt())
}

fn check_positive(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !(*v > 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// Probe power in watts, `ħ ω̃_q Ω_p² / (2Γ)`, with rad/ns inputs.
pub fn probe_power(omega_q_dressed: f64, omega_p_rabi: f64, gamma_relax: f64) -> Result<f64> {
    check_positive(&[
        ("omega_q_dressed", omega_q_dressed),
        ("Omega_p", omega_p_rabi),
        ("Gamma", gamma_relax),
    ])?;
    Ok(HBAR * omega_q_dressed * omega_p_rabi * omega_p_rabi / (2.0 * gamma_relax) * 1e18)
}

/// Inverse of [`probe_power`]: the Rabi frequency (rad/ns) for a power in watts.
pub fn probe_rabi(power: f64, omega_q_dressed: f64, gamma_relax: f64) -> Result<f64> {
    check_positive(&[
        ("power", power),
        ("omega_q_dressed", omega_q_dressed),
        ("Gamma", gamma_relax),
    ])?;
    Ok((2.0 * gamma_relax * power / (HBAR * omega_q_dressed * 1e18)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{ghz, mhz, to_ghz, to_mhz, watts_to_dbm};
    use approx::assert_relative_eq;

    const E_C: f64 = 0.29;
    const E_J0: f64 = 19.6;
    const D: f64 = 0.32;

    fn freq(phi: f64) -> f64 {
        to_ghz(qubit_frequency(phi, ghz(E_C), ghz(E_J0), D).unwrap())
    }

    #[test]
    fn josephson_energy_limits() {
        assert_eq!(josephson_energy(0.0, 2.0, D), 2.0);
        assert_relative_eq!(josephson_energy(0.5, ghz(19.6), 0.32), ghz(6.272), max_relative = 1e-12);
        for phi in [0.03, 0.11, 0.27, 0.49] {
            assert_eq!(josephson_energy(phi, 1.0, D), josephson_energy(-phi, 1.0, D));
            let shifted = josephson_energy(phi + 1.0, 1.0, D);
            assert!((shifted - josephson_energy(phi, 1.0, D)).abs() < 1e-12);
            assert!(josephson_energy(phi, 1.0, D) >= D);
        }
        // Continuity across half flux.
        let near = josephson_energy(0.5 - 1e-9, 1.0, D);
        assert!((near - D).abs() < 1e-8);
    }

    #[test]
    fn qubit_frequency_values() {
        // √(8·0.29·19.6) − 0.29
        let expected = (8.0f64 * 0.29 * 19.6).sqrt() - 0.29;
        assert_relative_eq!(freq(0.0), expected, max_relative = 1e-12);
        assert!((freq(0.0) - 6.453).abs() < 1e-3);
        let expected_half = (8.0f64 * 0.29 * 19.6 * 0.32).sqrt() - 0.29;
        assert_relative_eq!(freq(0.5), expected_half, max_relative = 1e-12);
        assert!((freq(0.5) - 3.525).abs() < 1e-3);
        let mut prev = freq(0.0);
        for k in 1..=50 {
            let f = freq(0.01 * k as f64);
            assert!(f < prev);
            prev = f;
        }
    }

    #[test]
    fn qubit_frequency_domain_error() {
        assert!(matches!(
            qubit_frequency(0.5, 1.0, 1.0, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn flux_slope_values() {
        let slope = |phi| flux_slope(phi, ghz(E_C), ghz(E_J0), D).unwrap();
        assert!(slope(0.0).abs() < 1e-6);
        assert_relative_eq!(slope(-0.11), -slope(0.11), max_relative = 1e-9);
        // Frozen from a 30-digit arbitrary-precision derivative of the transmon formula.
        let frozen_ghz_per_phi0 = 3.287_581_455_543_523;
        assert!((to_ghz(slope(-0.11)) - frozen_ghz_per_phi0).abs() < 1e-6);
    }

    #[test]
    fn flux_slope_matches_five_point_stencil() {
        for phi in [-0.37, -0.11, 0.05, 0.2, 0.41] {
            let h = 1e-3;
            let f = |p: f64| qubit_frequency(p, ghz(E_C), ghz(E_J0), D).unwrap();
            let stencil = (f(phi - 2.0 * h) - 8.0 * f(phi - h) + 8.0 * f(phi + h) - f(phi + 2.0 * h))
                / (12.0 * h);
            let slope = flux_slope(phi, ghz(E_C), ghz(E_J0), D).unwrap();
            assert_relative_eq!(slope, stencil, max_relative = 1e-6);
        }
    }

    /// Taylor series of J₁ summed with exact rational coefficients up to high order.
    fn j1_oracle(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut fact_k = 1.0;
        for k in 0..30 {
            if k > 0 {
                fact_k *= k as f64;
            }
            let fact_k1 = fact_k * (k + 1) as f64;
            sum += (-1f64).powi(k) * (x / 2.0).powi(2 * k + 1) / (fact_k * fact_k1);
        }
        sum
    }

    #[test]
    fn bessel_accuracy() {
        assert_eq!(bessel_j1(0.0), 0.0);
        assert!((bessel_j1(0.2) - 0.099_500_832_639_235_94).abs() < 1e-15);
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(2, 1.0) - 0.114_903_484_931_900_5).abs() < 1e-15);
        for k in 0..=100 {
            let x = k as f64 / 100.0;
            assert!((bessel_j1(x) - j1_oracle(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn parametric_rabi_values() {
        let g = mhz(73.3);
        assert_eq!(parametric_rabi(0.0, mhz(725.0), g).unwrap(), 0.0);
        let omega = parametric_rabi(mhz(290.0), mhz(725.0), g).unwrap();
        assert!((to_mhz(omega) - 14.6).abs() < 0.05);
        assert_relative_eq!(to_mhz(omega), 2.0 * 73.3 * 0.099_500_832_639_235_94, max_relative = 1e-12);

        // Small-argument slope g/(2ω_Φ).
        let w = mhz(725.0);
        let eps = 0.02 * 2.0 * w;
        let ratio = parametric_rabi(eps, w, g).unwrap() / eps;
        assert!((ratio / (g / (2.0 * w)) - 1.0).abs() < 5e-3);

        assert!(matches!(parametric_rabi(1.0, 0.0, g), Err(Error::Domain(_))));
        assert!(matches!(parametric_rabi(1.0, -1.0, g), Err(Error::Domain(_))));
        for eps in [0.1, 0.5, 1.3] {
            let sum = parametric_rabi(eps, w, g).unwrap() + parametric_rabi(-eps, w, g).unwrap();
            assert!(sum.abs() < 1e-12);
        }
    }

    #[test]
    fn coupling_values() {
        let wr = ghz(5.539);
        let wrd = ghz(5.532);
        let wq = wr + ghz(0.7675);
        assert!((to_mhz(coupling_from_shift(wr, wrd, wq).unwrap()) - 73.3).abs() < 0.05);
        // Back-solved gap: g²/shift.
        assert!((0.0733f64.powi(2) / 0.007 - 0.7676).abs() < 1e-3);
        assert_eq!(coupling_from_shift(wr, wr, wq).unwrap(), 0.0);
        assert!(matches!(
            coupling_from_shift(wr, wr + 0.01, wq),
            Err(Error::Domain(_))
        ));
        let g = coupling_from_shift(wr, wrd, wq).unwrap();
        let shift = g * g / (wq - wr);
        assert_relative_eq!(shift, wr - wrd, max_relative = 1e-12);
    }

    #[test]
    fn probe_power_values() {
        let p = probe_power(ghz(6.282), mhz(7.8), mhz(121.0)).unwrap();
        assert!((watts_to_dbm(p) + 141.8).abs() < 0.05);
        let back = probe_rabi(p, ghz(6.282), mhz(121.0)).unwrap();
        assert_relative_eq!(back, mhz(7.8), max_relative = 1e-12);
        let p2 = probe_power(ghz(6.282), mhz(15.6), mhz(121.0)).unwrap();
        assert_relative_eq!(p2, 4.0 * p, max_relative = 1e-12);
        assert!(probe_power(0.0, 1.0, 1.0).is_err());
        assert!(probe_rabi(-1.0, 1.0, 1.0).is_err());
    }
}
