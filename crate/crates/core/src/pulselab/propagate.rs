//! Time-domain propagation of probe pulses through the modulated atom.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::pulse::ProbePulse;
use super::schedule::{ModulationSchedule, StorageProtocol};
use crate::device::{DeviceParams, DriveConfig};
use crate::dynamics::{
    eps_for_rabi, integrate_sampled, EvolveOptions, Frame, HamiltonianSpec, ObservableSet, Rates,
};
use crate::error::{Error, Result};
use crate::operators::{DensityMatrix, StateTolerance};
use crate::units::mhz;

/// Samples per modulation period of the lab-frame run before period averaging.
pub const LAB_SAMPLES_PER_PERIOD: usize = 32;

/// Frame used to propagate a pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseFrame {
    Effective,
    Lab,
}

/// Solver settings shared by all pulse runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSetup {
    /// Modulation frequency `ω_Φ` (rad/ns).
    pub omega_mod: f64,
    /// Resonator Fock-space truncation.
    pub n_fock: usize,
    pub evolve: EvolveOptions,
}

impl Default for PulseSetup {
    fn default() -> Self {
        Self {
            omega_mod: mhz(crate::presets::OMEGA_MOD_MHZ),
            n_fock: 3,
            evolve: EvolveOptions::default(),
        }
    }
}

/// Output of one pulse run on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTrace {
    /// Time grid (ns).
    pub times: Vec<f64>,
    /// Input amplitude `α_in(t)`.
    pub alpha_in: Vec<f64>,
    /// Output amplitude `|α_out(t)|`.
    pub alpha_out_abs: Vec<f64>,
    /// Resonator population `⟨a†a⟩`.
    pub n_res: Vec<f64>,
    /// Qubit population `⟨σ†σ⟩`.
    pub p_exc: Vec<f64>,
    /// Modulation level `Ω_Φ(t)` (rad/ns).
    pub mod_envelope: Vec<f64>,
}

impl PulseTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The undisturbed pulse, `|α_out| = α_in`, as seen with the qubit far detuned.
    pub fn reference(pulse: &ProbePulse, t_grid: &[f64], gamma_relax: f64) -> Result<Self> {
        pulse.validate()?;
        check_grid(t_grid)?;
        if !(gamma_relax > 0.0) {
            return Err(Error::Domain(format!("Γ must be positive, got {gamma_relax}")));
        }
        let alpha_in: Vec<f64> = t_grid.iter().map(|&t| pulse.alpha_in(t, gamma_relax)).collect();
        Ok(Self {
            times: t_grid.to_vec(),
            alpha_out_abs: alpha_in.clone(),
            alpha_in,
            n_res: vec![0.0; t_grid.len()],
            p_exc: vec![0.0; t_grid.len()],
            mod_envelope: vec![0.0; t_grid.len()],
        })
    }

    /// `|α_out|` divided by the peak of `reference`.
    pub fn normalized_output(&self, reference: &PulseTrace) -> Vec<f64> {
        let peak = reference.alpha_out_abs.iter().copied().fold(0.0, f64::max);
        let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
        self.alpha_out_abs.iter().map(|v| v * scale).collect()
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.len() < 2 {
        return Err(Error::Domain("pulse time grid needs at least two points".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) || !t_grid.iter().all(|t| t.is_finite()) {
        return Err(Error::Domain("pulse time grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Uniform grid from `start` to `stop` with spacing close to `step`.
pub fn pulse_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(stop > start) || !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::Domain(format!("invalid pulse grid [{start}, {stop}] with step {step}")));
    }
    let n = ((stop - start) / step).round().max(1.0) as usize;
    Ok((0..=n).map(|k| start + (stop - start) * k as f64 / n as f64).collect())
}

/// Integrate the master equation with the time-dependent probe and modulation.
///
/// The atom starts in `|g,0⟩` at `t_grid[0]`. The output amplitude is
/// `|α_in + i√(Γ/2)⟨σ⟩|` with `α_in = Ω_p(t)/√(2Γ)`. In the effective frame the
/// schedule scales `Ω_Φ` and the motional shift follows the squared envelope.
/// In the lab frame the schedule scales `ε_Φ`, calibrated so the largest level
/// gives that `Ω_Φ`, and every observable is averaged over one modulation
/// period before sampling.
pub fn propagate(
    device: &DeviceParams,
    pulse: &ProbePulse,
    schedule: &ModulationSchedule,
    frame: PulseFrame,
    t_grid: &[f64],
    setup: &PulseSetup,
) -> Result<PulseTrace> {
    device.validate()?;
    pulse.validate()?;
    schedule.validate()?;
    check_grid(t_grid)?;
    if !(device.gamma_relax > 0.0) {
        return Err(Error::Domain("pulse output needs Γ > 0".into()));
    }
    let rates = Rates::from_device(device);
    let spec = pulse_spec(device, pulse, schedule, frame, setup, &rates)?;
    let samples = match frame {
        PulseFrame::Effective => sample_direct(&spec, &rates, t_grid, setup)?,
        PulseFrame::Lab => sample_period_averaged(&spec, &rates, t_grid, setup)?,
    };
    let gamma = device.gamma_relax;
    let coupling = Complex64::new(0.0, (gamma / 2.0).sqrt());
    let evaluator = schedule.evaluator();
    let mut trace = PulseTrace {
        times: t_grid.to_vec(),
        alpha_in: Vec::with_capacity(t_grid.len()),
        alpha_out_abs: Vec::with_capacity(t_grid.len()),
        n_res: Vec::with_capacity(t_grid.len()),
        p_exc: Vec::with_capacity(t_grid.len()),
        mod_envelope: Vec::with_capacity(t_grid.len()),
    };
    for (&t, s) in t_grid.iter().zip(&samples) {
        let a_in = pulse.alpha_in(t, gamma);
        trace.alpha_in.push(a_in);
        trace.alpha_out_abs.push((a_in + coupling * s.sigma).norm());
        trace.n_res.push(s.n_res);
        trace.p_exc.push(s.p_exc);
        trace.mod_envelope.push(evaluator.at(t));
    }
    Ok(trace)
}

/// Storage run whose read-out level is replaced by `omega_retrieve`.
pub fn retrieve_shaped(
    device: &DeviceParams,
    pulse: &ProbePulse,
    protocol: &StorageProtocol,
    omega_retrieve: f64,
    frame: PulseFrame,
    t_grid: &[f64],
    setup: &PulseSetup,
) -> Result<PulseTrace> {
    let protocol = StorageProtocol {
        read_level: omega_retrieve,
        ..*protocol
    };
    propagate(device, pulse, &protocol.schedule(), frame, t_grid, setup)
}

fn pulse_spec(
    device: &DeviceParams,
    pulse: &ProbePulse,
    schedule: &ModulationSchedule,
    frame: PulseFrame,
    setup: &PulseSetup,
    rates: &Rates,
) -> Result<HamiltonianSpec> {
    let level = schedule.max_level();
    let mut drive = DriveConfig {
        omega_p_rabi: pulse.amp,
        omega_p: pulse.carrier,
        delta_phi: 0.0,
        eps_phi: Some(0.0),
        omega_mod: setup.omega_mod,
        omega_phi_rabi: None,
    };
    let hframe = match frame {
        PulseFrame::Effective => {
            drive.eps_phi = None;
            drive.omega_phi_rabi = Some(level);
            Frame::EffectiveTimeIndependent
        }
        PulseFrame::Lab => Frame::LabRotatingAtProbe,
    };
    let mut spec = HamiltonianSpec::new(hframe, device.clone(), drive, setup.n_fock);
    if frame == PulseFrame::Lab && level > 0.0 {
        spec.drive.eps_phi = Some(eps_for_rabi(&spec, rates, level)?);
    }
    spec.drive.validate(device)?;
    if level > 0.0 {
        let evaluator = schedule.evaluator();
        spec.modulation_envelope = Some(Arc::new(move |t| evaluator.at(t) / level));
    }
    if pulse.amp > 0.0 {
        let p = *pulse;
        spec.probe_envelope = Some(Arc::new(move |t| p.shape(t)));
    }
    Ok(spec)
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    sigma: Complex64,
    p_exc: f64,
    n_res: f64,
}

fn sample_direct(spec: &HamiltonianSpec, rates: &Rates, t_grid: &[f64], setup: &PulseSetup) -> Result<Vec<Sample>> {
    let obs = ObservableSet::new(spec.n_fock)?;
    let rho0 = DensityMatrix::ground(spec.n_fock)?;
    let mut out = Vec::with_capacity(t_grid.len());
    integrate_sampled(&rho0, spec, rates, t_grid, &setup.evolve, &StateTolerance::default(), |_, _, rho| {
        let o = obs.evaluate(rho.as_slice());
        out.push(Sample {
            sigma: o.sigma,
            p_exc: o.p_exc,
            n_res: o.n_res,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Sample on a fine grid and average each observable over one modulation period
/// centred on every requested time.
fn sample_period_averaged(
    spec: &HamiltonianSpec,
    rates: &Rates,
    t_grid: &[f64],
    setup: &PulseSetup,
) -> Result<Vec<Sample>> {
    let Some(period) = spec.modulation_period() else {
        return sample_direct(spec, rates, t_grid, setup);
    };
    let h = period / LAB_SAMPLES_PER_PERIOD as f64;
    let start = t_grid[0];
    let stop = t_grid[t_grid.len() - 1] + 0.5 * period;
    let n = ((stop - start) / h).ceil() as usize;
    let fine: Vec<f64> = (0..=n).map(|k| start + h * k as f64).collect();
    let fine_samples = sample_direct(spec, rates, &fine, setup)?;

    let mut cumulative = Vec::with_capacity(fine.len());
    let mut acc = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    cumulative.push(acc);
    for w in fine_samples.windows(2) {
        acc.0 += (w[0].sigma + w[1].sigma) * (0.5 * h);
        acc.1 += (w[0].p_exc + w[1].p_exc) * (0.5 * h);
        acc.2 += (w[0].n_res + w[1].n_res) * (0.5 * h);
        cumulative.push(acc);
    }
    let integral_at = |t: f64| {
        let x = ((t - start) / h).clamp(0.0, n as f64);
        let k = (x.floor() as usize).min(n.saturating_sub(1));
        let f = x - k as f64;
        let (a, b) = (cumulative[k], cumulative[k + 1]);
        (a.0 + (b.0 - a.0) * f, a.1 + (b.1 - a.1) * f, a.2 + (b.2 - a.2) * f)
    };
    Ok(t_grid
        .iter()
        .map(|&t| {
            let lo = (t - 0.5 * period).max(start);
            let hi = (t + 0.5 * period).min(fine[n]);
            let width = hi - lo;
            if width <= 0.0 {
                return fine_samples[0];
            }
            let (a, b) = (integral_at(lo), integral_at(hi));
            Sample {
                sigma: (b.0 - a.0) / width,
                p_exc: (b.1 - a.1) / width,
                n_res: (b.2 - a.2) / width,
            }
        })
        .collect())
}
