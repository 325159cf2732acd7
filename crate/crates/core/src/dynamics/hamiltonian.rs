//! Lab-frame and effective-frame Hamiltonians of the driven qubit–resonator system.
//!
//! Both Hamiltonians are written in the frame rotating at the probe frequency
//! `ω_p`. The probe enters as `−(Ω_p/2)(σ + σ†)`; with this sign the output
//! relation `t = 1 + iΓ⟨σ⟩/Ω_p` reproduces the analytic Λ-type transmission.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::device::{DeviceParams, DriveConfig};
use crate::error::{Error, Result};
use crate::operators::{qubit_lowering, resonator_lowering, OperatorMatrix};

/// A real scalar function of time (ns).
pub type Envelope = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Frame in which the Hamiltonian is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Frame {
    /// Bare qubit and resonator with the sinusoidal flux term, rotating at `ω_p`.
    LabRotatingAtProbe,
    /// Λ-system after eliminating the modulation: time independent unless enveloped.
    EffectiveTimeIndependent,
}

/// Everything needed to build the Hamiltonian at any time.
#[derive(Clone)]
pub struct HamiltonianSpec {
    pub frame: Frame,
    pub device: DeviceParams,
    pub drive: DriveConfig,
    /// Fock-space truncation of the resonator.
    pub n_fock: usize,
    /// Dimensionless factor in `[0, 1]` scaling `ε_Φ` (lab) or `Ω_Φ` (effective).
    pub modulation_envelope: Option<Envelope>,
    /// Dimensionless factor scaling the probe Rabi frequency `Ω_p`.
    pub probe_envelope: Option<Envelope>,
}

impl fmt::Debug for HamiltonianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSpec")
            .field("frame", &self.frame)
            .field("device", &self.device)
            .field("drive", &self.drive)
            .field("n_fock", &self.n_fock)
            .field("modulation_envelope", &self.modulation_envelope.is_some())
            .field("probe_envelope", &self.probe_envelope.is_some())
            .finish()
    }
}

impl HamiltonianSpec {
    pub fn new(frame: Frame, device: DeviceParams, drive: DriveConfig, n_fock: usize) -> Self {
        Self {
            frame,
            device,
            drive,
            n_fock,
            modulation_envelope: None,
            probe_envelope: None,
        }
    }

    pub fn with_modulation_envelope(mut self, envelope: Envelope) -> Self {
        self.modulation_envelope = Some(envelope);
        self
    }

    pub fn with_probe_envelope(mut self, envelope: Envelope) -> Self {
        self.probe_envelope = Some(envelope);
        self
    }

    /// Same spec with the probe frequency replaced.
    pub fn at_probe_frequency(&self, omega_p: f64) -> Self {
        let mut spec = self.clone();
        spec.drive.omega_p = omega_p;
        spec
    }

    /// Hilbert-space dimension `2·n_fock`.
    pub fn dim(&self) -> usize {
        2 * self.n_fock
    }

    /// The modulation period `2π/ω_Φ` in ns, if the modulation frequency is positive.
    pub fn modulation_period(&self) -> Option<f64> {
        (self.drive.omega_mod > 0.0).then(|| std::f64::consts::TAU / self.drive.omega_mod)
    }

    /// Constant and time-dependent parts of the Hamiltonian.
    pub fn terms(&self) -> Result<HamiltonianTerms> {
        match self.frame {
            Frame::LabRotatingAtProbe => lab_terms(self),
            Frame::EffectiveTimeIndependent => effective_terms(self),
        }
    }

    /// Effective-frame parameters at full modulation strength.
    pub fn effective_parameters(&self) -> Result<EffectiveParameters> {
        EffectiveParameters::resolve(&self.device, &self.drive)
    }
}

/// Motional qubit frequency, sideband Rabi frequency and dressed resonator
/// frequency entering the effective Λ Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParameters {
    /// Dressed qubit frequency without modulation `ω̃_q`.
    pub omega_q_dressed: f64,
    /// Motional-averaging shift `C₀·δΦ²`.
    pub shift: f64,
    /// Sideband Rabi frequency `Ω_Φ`.
    pub omega_phi_rabi: f64,
    /// Dressed resonator frequency `ω̃_r`.
    pub omega_r_dressed: f64,
}

impl EffectiveParameters {
    /// Resolve `Ω_Φ` and the motional shift from explicit values or the `C₀`, `C₁` constants.
    ///
    /// An explicit `Ω_Φ` takes precedence over `C₁·δΦ`; the shift then uses the
    /// flux amplitude `Ω_Φ/C₁` implied by it when `C₁` is known.
    pub fn resolve(device: &DeviceParams, drive: &DriveConfig) -> Result<Self> {
        let (omega_phi, flux) = match (drive.omega_phi_rabi, device.c1) {
            (Some(w), Some(c1)) if c1 > 0.0 => (w, w / c1),
            (Some(w), _) => (w, drive.delta_phi),
            (None, Some(c1)) => (c1 * drive.delta_phi, drive.delta_phi),
            (None, None) if drive.delta_phi == 0.0 => (0.0, 0.0),
            (None, None) => {
                return Err(Error::Config(
                    "effective frame needs C1 or an explicit Omega_Phi for a nonzero delta_Phi"
                        .into(),
                ))
            }
        };
        let shift = match device.c0 {
            Some(c0) => c0 * flux * flux,
            None if flux == 0.0 || drive.omega_phi_rabi.is_some() => 0.0,
            None => {
                return Err(Error::Config(
                    "effective frame needs C0 to place the motional qubit frequency".into(),
                ))
            }
        };
        Ok(Self {
            omega_q_dressed: device.dressed_qubit_frequency()?,
            shift,
            omega_phi_rabi: omega_phi,
            omega_r_dressed: device.omega_r_dressed,
        })
    }

    /// Motional qubit frequency `ω̃_q^M = ω̃_q − C₀δΦ²`.
    pub fn omega_q_motional(&self) -> f64 {
        self.omega_q_dressed - self.shift
    }
}

/// `H(t) = H₀ + Σ cᵢ(t)·Hᵢ`.
#[derive(Clone)]
pub struct HamiltonianTerms {
    pub constant: OperatorMatrix,
    pub modulated: Vec<(OperatorMatrix, Envelope)>,
}

impl fmt::Debug for HamiltonianTerms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianTerms")
            .field("constant", &self.constant)
            .field("modulated", &self.modulated.len())
            .finish()
    }
}

impl HamiltonianTerms {
    pub fn is_time_independent(&self) -> bool {
        self.modulated.is_empty()
    }

    pub fn at(&self, t: f64) -> OperatorMatrix {
        let mut m = self.constant.matrix().clone();
        for (op, coeff) in &self.modulated {
            let c = coeff(t);
            if c != 0.0 {
                m.zip_apply(op.matrix(), |a, b| *a += b * c);
            }
        }
        OperatorMatrix::from_matrix(m).expect("terms share one dimension")
    }
}

struct Operators {
    sigma: OperatorMatrix,
    sigma_dag: OperatorMatrix,
    a: OperatorMatrix,
    a_dag: OperatorMatrix,
    n_q: OperatorMatrix,
    n_r: OperatorMatrix,
}

impl Operators {
    fn new(n_fock: usize) -> Result<Self> {
        let sigma = qubit_lowering(n_fock)?;
        let a = resonator_lowering(n_fock)?;
        let sigma_dag = sigma.adjoint();
        let a_dag = a.adjoint();
        let n_q = &sigma_dag * &sigma;
        let n_r = &a_dag * &a;
        Ok(Self {
            sigma,
            sigma_dag,
            a,
            a_dag,
            n_q,
            n_r,
        })
    }

    /// `−(σ + σ†)/2`, the probe operator per unit Rabi frequency.
    fn probe(&self) -> OperatorMatrix {
        (&self.sigma + &self.sigma_dag).scale_real(-0.5)
    }
}

fn lab_terms(spec: &HamiltonianSpec) -> Result<HamiltonianTerms> {
    let ops = Operators::new(spec.n_fock)?;
    let device = &spec.device;
    let drive = &spec.drive;
    let omega_q = device.bare_qubit_frequency()?;
    let eps = drive.eps_phi(device)?;

    let exchange = &(&ops.a_dag * &ops.sigma) + &(&ops.sigma_dag * &ops.a);
    let mut constant = &ops.n_q.scale_real(omega_q - drive.omega_p)
        + &ops.n_r.scale_real(device.omega_r - drive.omega_p);
    constant = &constant + &exchange.scale_real(device.g);

    let mut modulated: Vec<(OperatorMatrix, Envelope)> = Vec::new();
    if eps != 0.0 {
        let omega_mod = drive.omega_mod;
        let half_eps = eps / 2.0;
        let coeff: Envelope = match &spec.modulation_envelope {
            Some(env) => {
                let env = env.clone();
                Arc::new(move |t| half_eps * env(t) * (omega_mod * t).sin())
            }
            None => Arc::new(move |t| half_eps * (omega_mod * t).sin()),
        };
        modulated.push((ops.n_q.clone(), coeff));
    }
    push_probe(spec, &ops, &mut constant, &mut modulated);
    Ok(HamiltonianTerms {
        constant,
        modulated,
    })
}

fn effective_terms(spec: &HamiltonianSpec) -> Result<HamiltonianTerms> {
    let ops = Operators::new(spec.n_fock)?;
    let drive = &spec.drive;
    let params = spec.effective_parameters()?;

    // i(a†σ − aσ†)/2 per unit Ω_Φ.
    let jc = (&(&ops.a_dag * &ops.sigma) - &(&ops.a * &ops.sigma_dag)).scale(Complex64::new(0.0, 0.5));
    let mut constant = ops
        .n_r
        .scale_real(params.omega_r_dressed - drive.omega_p + drive.omega_mod);
    let mut modulated: Vec<(OperatorMatrix, Envelope)> = Vec::new();
    match &spec.modulation_envelope {
        None => {
            constant = &constant + &ops.n_q.scale_real(params.omega_q_motional() - drive.omega_p);
            constant = &constant + &jc.scale_real(params.omega_phi_rabi);
        }
        Some(env) => {
            constant = &constant + &ops.n_q.scale_real(params.omega_q_dressed - drive.omega_p);
            let shift = params.shift;
            let omega_phi = params.omega_phi_rabi;
            if shift != 0.0 {
                let env = env.clone();
                modulated.push((
                    ops.n_q.clone(),
                    Arc::new(move |t| {
                        let e = env(t);
                        -shift * e * e
                    }),
                ));
            }
            if omega_phi != 0.0 {
                let env = env.clone();
                modulated.push((jc, Arc::new(move |t| omega_phi * env(t))));
            }
        }
    }
    push_probe(spec, &ops, &mut constant, &mut modulated);
    Ok(HamiltonianTerms {
        constant,
        modulated,
    })
}

fn push_probe(
    spec: &HamiltonianSpec,
    ops: &Operators,
    constant: &mut OperatorMatrix,
    modulated: &mut Vec<(OperatorMatrix, Envelope)>,
) {
    let rabi = spec.drive.omega_p_rabi;
    if rabi == 0.0 {
        return;
    }
    match &spec.probe_envelope {
        None => *constant = &*constant + &ops.probe().scale_real(rabi),
        Some(env) => {
            let env = env.clone();
            modulated.push((ops.probe(), Arc::new(move |t| rabi * env(t))));
        }
    }
}

fn require_frame(spec: &HamiltonianSpec, frame: Frame) -> Result<()> {
    if spec.frame != frame {
        return Err(Error::Config(format!(
            "expected a {frame:?} spec, got {:?}",
            spec.frame
        )));
    }
    Ok(())
}

/// Lab-frame Hamiltonian at time `t` (ns) in the frame rotating at `ω_p`.
pub fn lab_hamiltonian(t: f64, spec: &HamiltonianSpec) -> Result<OperatorMatrix> {
    require_frame(spec, Frame::LabRotatingAtProbe)?;
    Ok(lab_terms(spec)?.at(t))
}

/// Effective Λ-system Hamiltonian with the modulation envelope, if any, at full strength.
pub fn effective_hamiltonian(spec: &HamiltonianSpec) -> Result<OperatorMatrix> {
    require_frame(spec, Frame::EffectiveTimeIndependent)?;
    let mut plain = spec.clone();
    plain.modulation_envelope = None;
    plain.probe_envelope = None;
    Ok(effective_terms(&plain)?.constant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::basis_index;
    use crate::units::mhz;

    fn device() -> DeviceParams {
        DeviceParams {
            e_c: 0.0,
            e_j0: 0.0,
            asymmetry: 0.0,
            flux_bias: 0.0,
            g: 0.0,
            gamma_relax: 0.0,
            gamma_phi: 0.0,
            kappa: 0.0,
            omega_r: 5.0,
            omega_r_dressed: 5.0,
            omega_q: Some(5.0),
            omega_q_dressed: Some(5.0),
            length_um: 0.0,
            c0: None,
            c1: None,
        }
    }

    fn drive() -> DriveConfig {
        DriveConfig {
            omega_p_rabi: 0.0,
            omega_p: 5.0,
            delta_phi: 0.0,
            eps_phi: Some(0.0),
            omega_mod: 4.0,
            omega_phi_rabi: None,
        }
    }

    #[test]
    fn lab_resonant_without_drive_keeps_only_coupling() {
        let mut dev = device();
        dev.g = 0.3;
        let spec = HamiltonianSpec::new(Frame::LabRotatingAtProbe, dev, drive(), 3);
        let h = lab_hamiltonian(0.7, &spec).unwrap();
        for r in 0..6 {
            for c in 0..6 {
                let v = h.get(r, c);
                let e0 = basis_index(3, true, 0);
                let g1 = basis_index(3, false, 1);
                let e1 = basis_index(3, true, 1);
                let g2 = basis_index(3, false, 2);
                let expected = if (r, c) == (e0, g1) || (r, c) == (g1, e0) {
                    0.3
                } else if (r, c) == (e1, g2) || (r, c) == (g2, e1) {
                    0.3 * 2f64.sqrt()
                } else {
                    0.0
                };
                assert!((v - Complex64::new(expected, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn lab_hamiltonian_is_hermitian() {
        let mut dev = device();
        dev.g = mhz(73.3);
        dev.omega_q = Some(6.3);
        let mut d = drive();
        d.omega_p_rabi = mhz(7.8);
        d.eps_phi = Some(mhz(290.0));
        let spec = HamiltonianSpec::new(Frame::LabRotatingAtProbe, dev, d, 4);
        for t in [0.0, 0.13, 1.7, 250.3] {
            assert!(lab_hamiltonian(t, &spec).unwrap().hermiticity_defect() < 1e-14);
        }
    }

    #[test]
    fn lab_qubit_frequency_averages_to_static_value() {
        let mut dev = device();
        dev.omega_q = Some(6.0);
        let mut d = drive();
        d.omega_p = 0.0;
        d.eps_phi = Some(1.3);
        let spec = HamiltonianSpec::new(Frame::LabRotatingAtProbe, dev, d, 2);
        let period = spec.modulation_period().unwrap();
        let e0 = basis_index(2, true, 0);
        let n = 4000;
        let mut acc = 0.0;
        for k in 0..n {
            let t = period * k as f64 / n as f64;
            acc += lab_hamiltonian(t, &spec).unwrap().get(e0, e0).re;
        }
        assert!((acc / n as f64 - 6.0).abs() < 1e-10 * 6.0);
    }

    #[test]
    fn effective_without_modulation_has_detuned_resonator_only() {
        let mut d = drive();
        d.omega_p = 4.9;
        let spec = HamiltonianSpec::new(Frame::EffectiveTimeIndependent, device(), d, 3);
        let h = effective_hamiltonian(&spec).unwrap();
        let g1 = basis_index(3, false, 1);
        let e0 = basis_index(3, true, 0);
        assert!((h.get(g1, g1).re - (5.0 - 4.9 + 4.0)).abs() < 1e-14);
        assert!((h.get(e0, e0).re - 0.1).abs() < 1e-14);
        assert_eq!(h.get(e0, g1), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn effective_splitting_at_two_photon_resonance() {
        let omega_phi = mhz(18.0);
        let mut d = drive();
        d.omega_p = 5.0;
        d.omega_mod = 0.0;
        d.omega_phi_rabi = Some(omega_phi);
        let spec = HamiltonianSpec::new(Frame::EffectiveTimeIndependent, device(), d, 2);
        let h = effective_hamiltonian(&spec).unwrap();
        assert!(h.hermiticity_defect() < 1e-14);
        let herm = nalgebra::DMatrix::from_fn(4, 4, |r, c| h.get(r, c));
        let eig = herm.symmetric_eigenvalues();
        let mut sorted: Vec<f64> = eig.iter().copied().collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Ground at 0, split pair at ±Ω_Φ/2, doubly excited at 0.
        let split: Vec<f64> = sorted.iter().copied().filter(|e| e.abs() > 1e-9).collect();
        assert_eq!(split.len(), 2);
        assert!((split[0] + omega_phi / 2.0).abs() < 1e-12);
        assert!((split[1] - omega_phi / 2.0).abs() < 1e-12);
    }

    #[test]
    fn effective_requires_shift_constants() {
        let mut d = drive();
        d.delta_phi = 0.1;
        let spec = HamiltonianSpec::new(Frame::EffectiveTimeIndependent, device(), d.clone(), 2);
        assert!(matches!(effective_hamiltonian(&spec), Err(Error::Config(_))));

        let mut dev = device();
        dev.c0 = Some(2.0);
        dev.c1 = Some(0.5);
        let spec = HamiltonianSpec::new(Frame::EffectiveTimeIndependent, dev, d, 2);
        let p = spec.effective_parameters().unwrap();
        assert!((p.omega_phi_rabi - 0.05).abs() < 1e-15);
        assert!((p.omega_q_motional() - (5.0 - 0.02)).abs() < 1e-14);
    }

    #[test]
    fn frame_mismatch_is_rejected() {
        let spec = HamiltonianSpec::new(Frame::EffectiveTimeIndependent, device(), drive(), 2);
        assert!(lab_hamiltonian(0.0, &spec).is_err());
    }

    #[test]
    fn envelopes_reproduce_static_hamiltonian_at_unit_level() {
        let mut dev = device();
        dev.c0 = Some(2.0);
        dev.c1 = Some(0.5);
        let mut d = drive();
        d.delta_phi = 0.1;
        d.omega_p_rabi = 0.01;
        let spec = HamiltonianSpec::new(Frame::EffectiveTimeIndependent, dev, d, 3);
        let plain = effective_hamiltonian(&spec).unwrap();
        let enveloped = spec
            .clone()
            .with_modulation_envelope(Arc::new(|_| 1.0))
            .with_probe_envelope(Arc::new(|_| 1.0))
            .terms()
            .unwrap()
            .at(3.0);
        assert!((&plain - &enveloped).max_abs() < 1e-15);
    }
}
