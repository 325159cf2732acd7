//! Effective Λ-system parameters implied by a lab-frame configuration.
//!
//! The qubit–resonator single-excitation block is diagonalized exactly,
//! giving dressed states `|ẽ⟩ = c|e,0⟩ + s|g,1⟩` and `|g̃⟩ = c|g,1⟩ − s|e,0⟩`.
//! The flux modulation then couples them through the Bessel sidebands of the
//! relative phase modulation. The first sideband is the resonant `Ω_Φ`; the
//! others add level shifts at second order. The probe carrier is reduced by
//! `J₀` of the phase modulation index of `|ẽ⟩`.
//!
//! The effective relaxation rate is the emission of `|ẽ⟩` into the probe
//! carrier, `Γc²J₀²`, so that the output relation keeps its form. The rest of
//! the coherence loss of `|ẽ⟩` is carried by the effective dephasing rate.

use super::hamiltonian::{Frame, HamiltonianSpec};
use super::liouvillian::Rates;
use crate::device::bessel_j;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Highest sideband order included in the level shifts.
pub const SIDEBAND_ORDER: i32 = 6;

/// Effective-frame description of a lab-frame spec.
#[derive(Debug, Clone)]
pub struct EffectiveMapping {
    /// Equivalent effective-frame spec with explicit `Ω_Φ`.
    pub spec: HamiltonianSpec,
    /// Dissipation rates of the effective Λ system.
    pub rates: Rates,
    /// Dressed-state mixing angle `θ` with `tan 2θ = 2g/(ω_q − ω_r)`.
    pub mixing_angle: f64,
    /// Phase modulation index of the dressed pair.
    pub relative_index: f64,
    /// Probe carrier factor `J₀` of the excited dressed state.
    pub carrier_factor: f64,
    /// Phase of the resonant sideband coupling when the dressed pair is built
    /// from the non-Hermitian single-excitation block. A real `Ω_Φ` neglects
    /// it, which bounds how closely the two frames can agree.
    /// Leading order in the modulation index.
    pub coupling_phase: f64,
}

/// Map a lab-frame spec onto the effective Λ model.
pub fn effective_from_lab(lab: &HamiltonianSpec, rates: &Rates) -> Result<EffectiveMapping> {
    if lab.frame != Frame::LabRotatingAtProbe {
        return Err(Error::Config("effective_from_lab needs a lab-frame spec".into()));
    }
    rates.validate()?;
    let device = &lab.device;
    let drive = &lab.drive;
    let omega_mod = drive.omega_mod;
    if !(omega_mod > 0.0) {
        return Err(Error::Domain("modulation frequency must be positive".into()));
    }
    let omega_q = device.bare_qubit_frequency()?;
    let omega_r = device.omega_r;
    let g = device.g;
    let eps = drive.eps_phi(device)?;

    let detuning = omega_q - omega_r;
    let theta = 0.5 * (2.0 * g).atan2(detuning);
    let (s, c) = theta.sin_cos();
    let root = (detuning * detuning + 4.0 * g * g).sqrt();
    let mean = 0.5 * (omega_q + omega_r);
    let e_upper = mean + 0.5 * root;
    let e_lower = mean - 0.5 * root;
    let splitting = e_upper - e_lower;

    let x_rel = 0.5 * eps * (c * c - s * s) / omega_mod;
    let x_e = 0.5 * eps * c * c / omega_mod;
    let tan2 = (2.0 * theta).tan();
    let sideband = |k: i32| -> f64 {
        let j = bessel_j(k.unsigned_abs(), x_rel);
        0.5 * omega_mod * tan2 * f64::from(k) * j
    };
    let omega_phi = 2.0 * sideband(1).abs();
    let damped_detuning = Complex64::new(
        detuning,
        -(rates.gamma_relax / 2.0 + rates.gamma_phi - rates.kappa / 2.0),
    );
    let damped_root = (damped_detuning * damped_detuning + 4.0 * g * g).sqrt();
    let coupling_phase = if eps == 0.0 || g == 0.0 {
        0.0
    } else {
        (Complex64::new(2.0 * g, 0.0) / damped_detuning).arg() + (damped_detuning / damped_root).arg()
    };
    let mut shift = 0.0;
    for k in -SIDEBAND_ORDER..=SIDEBAND_ORDER {
        if k == 1 || k == 0 {
            continue;
        }
        let v = sideband(k);
        shift += v * v / (splitting - f64::from(k) * omega_mod);
    }

    let carrier = bessel_j(0, x_e);
    let gamma_total = rates.gamma_relax / 2.0 + rates.gamma_phi;
    let gamma_eff = rates.gamma_relax * c * c * carrier * carrier;
    let gamma_total_eff = gamma_total * c * c + 0.5 * rates.kappa * s * s;
    let gamma_phi_eff = gamma_total_eff - gamma_eff / 2.0;
    let kappa_eff = rates.kappa * c * c + 2.0 * gamma_total * s * s;
    let eff_rates = Rates::new(gamma_eff, kappa_eff, gamma_phi_eff);

    let mut eff_device = device.clone();
    eff_device.omega_q_dressed = Some(e_upper + shift);
    eff_device.omega_r_dressed = e_lower - shift;
    eff_device.gamma_relax = eff_rates.gamma_relax;
    eff_device.gamma_phi = eff_rates.gamma_phi;
    eff_device.kappa = eff_rates.kappa;
    eff_device.c0 = None;
    eff_device.c1 = None;
    let mut eff_drive = drive.clone();
    eff_drive.omega_phi_rabi = Some(omega_phi);
    eff_drive.omega_p_rabi = drive.omega_p_rabi * c * carrier;
    eff_drive.delta_phi = 0.0;

    let spec = HamiltonianSpec {
        frame: Frame::EffectiveTimeIndependent,
        device: eff_device,
        drive: eff_drive,
        n_fock: lab.n_fock,
        modulation_envelope: None,
        probe_envelope: None,
    };
    Ok(EffectiveMapping {
        spec,
        rates: eff_rates,
        mixing_angle: theta,
        relative_index: x_rel,
        carrier_factor: carrier,
        coupling_phase,
    })
}

/// Lab modulation amplitude `ε_Φ` whose mapped sideband Rabi frequency is `omega_phi`.
///
/// Searches the rising branch of the first-order Bessel sideband by bisection.
pub fn eps_for_rabi(lab: &HamiltonianSpec, rates: &Rates, omega_phi: f64) -> Result<f64> {
    if !(omega_phi >= 0.0) {
        return Err(Error::Domain(format!("target Ω_Φ must be non-negative, got {omega_phi}")));
    }
    if omega_phi == 0.0 {
        return Ok(0.0);
    }
    let rabi_at = |eps: f64| -> Result<f64> {
        let mut spec = lab.clone();
        spec.drive.eps_phi = Some(eps);
        let m = effective_from_lab(&spec, rates)?;
        Ok(m.spec.drive.omega_phi_rabi.unwrap_or(0.0))
    };
    let at_zero = effective_from_lab(lab, rates)?;
    let cos2 = (2.0 * at_zero.mixing_angle).cos();
    const J1_MAX_ARG: f64 = 1.841_183_781_340_659;
    let mut hi = 2.0 * J1_MAX_ARG * lab.drive.omega_mod / cos2.abs().max(1e-12);
    if rabi_at(hi)? < omega_phi {
        return Err(Error::Domain(format!(
            "Ω_Φ = {omega_phi} exceeds the largest reachable sideband rate {}",
            rabi_at(hi)?
        )));
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rabi_at(mid)? < omega_phi {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{parametric_rabi, DeviceParams, DriveConfig};
    use crate::units::{ghz, mhz};

    fn lab() -> HamiltonianSpec {
        let device = DeviceParams {
            e_c: 0.0,
            e_j0: 0.0,
            asymmetry: 0.0,
            flux_bias: 0.0,
            g: mhz(73.3),
            gamma_relax: mhz(121.0),
            gamma_phi: mhz(3.0),
            kappa: mhz(0.78),
            omega_r: ghz(5.539),
            omega_r_dressed: ghz(5.532),
            omega_q: Some(ghz(6.275)),
            omega_q_dressed: None,
            length_um: 340.0,
            c0: None,
            c1: None,
        };
        let drive = DriveConfig {
            omega_p_rabi: mhz(1.0),
            omega_p: ghz(6.282),
            delta_phi: 0.0,
            eps_phi: Some(mhz(290.0)),
            omega_mod: mhz(725.0),
            omega_phi_rabi: None,
        };
        HamiltonianSpec::new(Frame::LabRotatingAtProbe, device, drive, 4)
    }

    #[test]
    fn unmodulated_mapping_is_the_dressed_basis() {
        let mut spec = lab();
        spec.drive.eps_phi = Some(0.0);
        let rates = Rates::from_device(&spec.device);
        let m = effective_from_lab(&spec, &rates).unwrap();
        assert_eq!(m.spec.drive.omega_phi_rabi, Some(0.0));
        assert_eq!(m.carrier_factor, 1.0);
        let wq = spec.device.omega_q.unwrap();
        let wr = spec.device.omega_r;
        let g = spec.device.g;
        let eq = m.spec.device.omega_q_dressed.unwrap();
        let er = m.spec.device.omega_r_dressed;
        assert!((eq + er - wq - wr).abs() < 1e-12);
        assert!(((eq - wq) - g * g / (wq - wr)).abs() < 0.02 * g * g / (wq - wr));
        // Relaxation is redistributed but the total coherence loss is conserved.
        let total = rates.gamma_relax / 2.0 + rates.gamma_phi + rates.kappa / 2.0;
        let eff_total = m.rates.gamma_relax / 2.0 + m.rates.gamma_phi + m.rates.kappa / 2.0;
        assert!((total - eff_total).abs() < 1e-12);
    }

    #[test]
    fn coupling_phase_from_damped_mixing() {
        let spec = lab();
        let m = effective_from_lab(&spec, &Rates::from_device(&spec.device)).unwrap();
        let ge = mhz(121.0) / 2.0 + mhz(3.0) - mhz(0.78) / 2.0;
        let d = ghz(6.275) - ghz(5.539);
        assert!(m.coupling_phase > 0.0);
        assert!((m.coupling_phase - (ge / d).atan()).abs() < 0.1 * (ge / d).atan());
        let mut quiet = spec.clone();
        quiet.drive.eps_phi = Some(0.0);
        let m0 = effective_from_lab(&quiet, &Rates::from_device(&quiet.device)).unwrap();
        assert_eq!(m0.coupling_phase, 0.0);
    }

    #[test]
    fn inverse_modulation_amplitude() {
        let spec = lab();
        let rates = Rates::from_device(&spec.device);
        let eps = eps_for_rabi(&spec, &rates, mhz(18.0)).unwrap();
        let mut check = spec.clone();
        check.drive.eps_phi = Some(eps);
        let m = effective_from_lab(&check, &rates).unwrap();
        assert!((m.spec.drive.omega_phi_rabi.unwrap() - mhz(18.0)).abs() < 1e-10);
        assert_eq!(eps_for_rabi(&spec, &rates, 0.0).unwrap(), 0.0);
        assert!(eps_for_rabi(&spec, &rates, mhz(500.0)).is_err());
    }

    #[test]
    fn sideband_rate_close_to_bessel_formula() {
        let spec = lab();
        let m = effective_from_lab(&spec, &Rates::from_device(&spec.device)).unwrap();
        let reference = parametric_rabi(mhz(290.0), mhz(725.0), mhz(73.3)).unwrap();
        let mapped = m.spec.drive.omega_phi_rabi.unwrap();
        assert!((mapped - reference).abs() < 0.1 * reference, "{mapped} vs {reference}");
    }
}
