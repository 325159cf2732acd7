//! Reference device and drive parameters of the measured sample.

use crate::device::{flux_slope, DeviceParams, DriveConfig};
use crate::units::{ghz, mhz};

/// Charging energy `E_C/2π`, GHz.
pub const E_C_GHZ: f64 = 0.290;
/// Josephson energy at zero flux `E_J0/2π`, GHz.
pub const E_J0_GHZ: f64 = 19.6;
/// Junction asymmetry.
pub const ASYMMETRY: f64 = 0.32;
/// Static flux bias, Φ₀.
pub const FLUX_BIAS: f64 = -0.11;
/// Qubit–resonator coupling `g/2π`, MHz.
pub const G_MHZ: f64 = 73.3;
/// Qubit relaxation `Γ/2π`, MHz.
pub const GAMMA_RELAX_MHZ: f64 = 121.0;
/// Qubit pure dephasing `γ_φ/2π`, MHz.
pub const GAMMA_PHI_MHZ: f64 = 3.0;
/// Resonator loss `κ/2π`, MHz.
pub const KAPPA_MHZ: f64 = 0.78;
/// Bare resonator frequency `ω_r/2π`, GHz.
pub const OMEGA_R_GHZ: f64 = 5.539;
/// Dressed resonator frequency `ω̃_r/2π`, GHz.
pub const OMEGA_R_DRESSED_GHZ: f64 = 5.532;
/// Dressed qubit frequency `ω̃_q/2π`, GHz.
pub const OMEGA_Q_DRESSED_GHZ: f64 = 6.282;
/// Qubit length, µm.
pub const LENGTH_UM: f64 = 340.0;
/// Modulation frequency `ω_Φ/2π`, MHz.
pub const OMEGA_MOD_MHZ: f64 = 725.0;
/// Probe carrier at the two-photon resonance `ω_p⁰/2π`, GHz.
pub const OMEGA_P0_GHZ: f64 = 6.2565;
/// Spectroscopy probe Rabi frequency `Ω_p/2π`, MHz.
pub const SPECTROSCOPY_RABI_MHZ: f64 = 7.8;
/// Pulse peak Rabi frequency `Ω_p^s/2π`, MHz.
pub const PULSE_RABI_MHZ: f64 = 7.0;
/// Sideband Rabi frequency `Ω_Φ/2π` at which the motional qubit frequency reaches `ω_p⁰`, MHz.
pub const MOTIONAL_REFERENCE_RABI_MHZ: f64 = 18.0;
/// Largest sideband Rabi frequency `Ω_Φ/2π` used in the measurements, MHz.
pub const MAX_RABI_MHZ: f64 = 25.0;

/// Bare qubit frequency whose upper dressed level sits at `omega_q_dressed`.
pub fn bare_from_dressed(omega_q_dressed: f64, omega_r: f64, g: f64) -> f64 {
    let x = omega_q_dressed - omega_r;
    omega_r + x - g * g / x
}

/// `C₁ = g·|dω_q/dΦ|/(2ω_Φ)`, the small-signal slope of `Ω_Φ` in `δΦ`.
pub fn small_signal_c1(device: &DeviceParams, omega_mod: f64) -> f64 {
    let slope = flux_slope(device.flux_bias, device.e_c, device.e_j0, device.asymmetry)
        .expect("reference bias is away from the flux sweet spot singularities");
    device.g * slope.abs() / (2.0 * omega_mod)
}

/// The measured device.
///
/// `C₁` is the small-signal sideband slope. `C₀` places the motional qubit
/// frequency at `ω_p⁰` when `Ω_Φ/2π = 18 MHz`.
pub fn paper_device() -> DeviceParams {
    let g = mhz(G_MHZ);
    let omega_r = ghz(OMEGA_R_GHZ);
    let omega_q_dressed = ghz(OMEGA_Q_DRESSED_GHZ);
    let mut device = DeviceParams {
        e_c: ghz(E_C_GHZ),
        e_j0: ghz(E_J0_GHZ),
        asymmetry: ASYMMETRY,
        flux_bias: FLUX_BIAS,
        g,
        gamma_relax: mhz(GAMMA_RELAX_MHZ),
        gamma_phi: mhz(GAMMA_PHI_MHZ),
        kappa: mhz(KAPPA_MHZ),
        omega_r,
        omega_r_dressed: ghz(OMEGA_R_DRESSED_GHZ),
        omega_q: Some(bare_from_dressed(omega_q_dressed, omega_r, g)),
        omega_q_dressed: Some(omega_q_dressed),
        length_um: LENGTH_UM,
        c0: None,
        c1: None,
    };
    let c1 = small_signal_c1(&device, mhz(OMEGA_MOD_MHZ));
    let flux_at_reference = mhz(MOTIONAL_REFERENCE_RABI_MHZ) / c1;
    let shift_at_reference = omega_q_dressed - ghz(OMEGA_P0_GHZ);
    device.c1 = Some(c1);
    device.c0 = Some(shift_at_reference / (flux_at_reference * flux_at_reference));
    device
}

/// Continuous-wave spectroscopy drive at flux amplitude `delta_phi`.
pub fn paper_drive(delta_phi: f64) -> DriveConfig {
    DriveConfig {
        omega_p_rabi: mhz(SPECTROSCOPY_RABI_MHZ),
        omega_p: ghz(OMEGA_P0_GHZ),
        delta_phi,
        eps_phi: None,
        omega_mod: mhz(OMEGA_MOD_MHZ),
        omega_phi_rabi: None,
    }
}

/// Flux amplitude giving sideband Rabi frequency `omega_phi` on `device`.
pub fn delta_phi_for(device: &DeviceParams, omega_phi: f64) -> Option<f64> {
    device.c1.filter(|c| *c > 0.0).map(|c| omega_phi / c)
}
