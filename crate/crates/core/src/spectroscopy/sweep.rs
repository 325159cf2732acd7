//! Transmission spectra over a probe-frequency grid.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::transmission::{analytic_transmission, transmission_from_sigma, LambdaDetunings};
use crate::device::{DeviceParams, DriveConfig};
use crate::dynamics::{
    periodic_steady_state_sigma, steady_state, Frame, HamiltonianSpec, PeriodicOptions, Rates,
};
use crate::error::{Error, Result};
use crate::operators::{expectation, qubit_lowering};
use crate::units::mhz;

/// Number of points of the default probe grid.
pub const DEFAULT_GRID_POINTS: usize = 801;

/// Half width of the default probe grid, in rad/ns.
pub fn default_half_width() -> f64 {
    mhz(50.0)
}

/// How each point of a spectrum is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Null-space steady state of the effective Λ Hamiltonian.
    Effective,
    /// Period-averaged asymptotic state of the flux-modulated lab Hamiltonian.
    LabPeriodic,
    /// Closed-form Λ transmission.
    Analytic,
}

/// Complex transmission over a probe-frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Probe angular frequencies, strictly increasing.
    pub omega_p: Vec<f64>,
    /// Transmission coefficient at each probe frequency.
    pub t_c: Vec<Complex64>,
    pub device: DeviceParams,
    pub drive: DriveConfig,
}

impl Spectrum {
    pub fn new(omega_p: Vec<f64>, t_c: Vec<Complex64>, device: DeviceParams, drive: DriveConfig) -> Result<Self> {
        validate_grid(&omega_p)?;
        if t_c.len() != omega_p.len() {
            return Err(Error::Dimension(format!(
                "{} transmission values for {} grid points",
                t_c.len(),
                omega_p.len()
            )));
        }
        Ok(Self {
            omega_p,
            t_c,
            device,
            drive,
        })
    }

    pub fn len(&self) -> usize {
        self.omega_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega_p.is_empty()
    }

    /// `|t_c|` at each point.
    pub fn magnitude(&self) -> Vec<f64> {
        self.t_c.iter().map(|t| t.norm()).collect()
    }

    /// Principal-value phase `arg t_c` at each point.
    pub fn phase(&self) -> Vec<f64> {
        self.t_c.iter().map(|t| t.arg()).collect()
    }

    /// Continuous phase obtained by removing `2π` wraps between neighbours.
    ///
    /// Fails when a wrapped increment exceeds `π/2` in magnitude, since its
    /// branch cannot then be told apart from a genuine fast phase swing.
    pub fn unwrapped_phase(&self) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.len());
        let mut offset = 0.0;
        let mut prev: Option<f64> = None;
        for (index, t) in self.t_c.iter().enumerate() {
            let raw = t.arg();
            if let Some(p) = prev {
                let step = wrap(raw + offset - p);
                if step.abs() > std::f64::consts::FRAC_PI_2 {
                    return Err(Error::Resolution {
                        index: index - 1,
                        jump: step,
                    });
                }
                let value = p + step;
                offset = value - raw;
                out.push(value);
                prev = Some(value);
            } else {
                out.push(raw);
                prev = Some(raw);
            }
        }
        Ok(out)
    }

    /// Index of the smallest `|t_c|`.
    pub fn argmin_magnitude(&self) -> Option<usize> {
        self.t_c
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(i, _)| i)
    }
}

fn wrap(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Domain("probe grid is empty".into()));
    }
    if let Some(bad) = grid.iter().position(|w| !w.is_finite()) {
        return Err(Error::Domain(format!("probe grid point {bad} is not finite")));
    }
    if let Some(k) = grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(format!(
            "probe grid is not strictly increasing at index {}",
            k + 1
        )));
    }
    Ok(())
}

/// `points` equally spaced values from `start` to `stop` inclusive.
pub fn uniform_grid(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(stop > start) {
        return Err(Error::Domain(format!(
            "grid needs at least two points and stop > start, got {points} points over [{start}, {stop}]"
        )));
    }
    let step = (stop - start) / (points - 1) as f64;
    Ok((0..points).map(|k| start + step * k as f64).collect())
}

/// The default 801-point grid spanning `center ± 2π·50 MHz`.
pub fn default_grid(center: f64) -> Vec<f64> {
    let half = default_half_width();
    uniform_grid(center - half, center + half, DEFAULT_GRID_POINTS).expect("positive width")
}

/// Compute `t_c` at every grid point with the chosen engine.
pub fn sweep_spectrum(grid: &[f64], spec: &HamiltonianSpec, engine: Engine) -> Result<Spectrum> {
    sweep_spectrum_with(grid, spec, engine, &PeriodicOptions::default())
}

/// [`sweep_spectrum`] with explicit settings for the lab-frame engine.
///
/// Points are independent and evaluated in parallel. A failing point is
/// reported with its grid index.
pub fn sweep_spectrum_with(
    grid: &[f64],
    spec: &HamiltonianSpec,
    engine: Engine,
    periodic: &PeriodicOptions,
) -> Result<Spectrum> {
    validate_grid(grid)?;
    let expected = match engine {
        Engine::LabPeriodic => Frame::LabRotatingAtProbe,
        Engine::Effective | Engine::Analytic => Frame::EffectiveTimeIndependent,
    };
    if spec.frame != expected {
        return Err(Error::Config(format!(
            "engine {engine:?} needs a {expected:?} spec, got {:?}",
            spec.frame
        )));
    }
    let rates = Rates::from_device(&spec.device);
    rates.validate()?;
    let t_c = grid
        .par_iter()
        .enumerate()
        .map(|(index, &omega_p)| {
            point(spec, &rates, engine, omega_p, periodic).map_err(|e| Error::at(index, e))
        })
        .collect::<Result<Vec<_>>>()?;
    Spectrum::new(grid.to_vec(), t_c, spec.device.clone(), spec.drive.clone())
}

fn point(
    spec: &HamiltonianSpec,
    rates: &Rates,
    engine: Engine,
    omega_p: f64,
    periodic: &PeriodicOptions,
) -> Result<Complex64> {
    let spec = spec.at_probe_frequency(omega_p);
    let gamma_relax = spec.device.gamma_relax;
    match engine {
        Engine::Effective => {
            let rho = steady_state(&spec, rates)?;
            let sigma = expectation(&rho, &qubit_lowering(spec.n_fock)?)?;
            transmission_from_sigma(sigma, gamma_relax, spec.drive.omega_p_rabi)
        }
        Engine::LabPeriodic => {
            let sigma = periodic_steady_state_sigma(&spec, rates, periodic)?.sigma;
            transmission_from_sigma(sigma, gamma_relax, spec.drive.omega_p_rabi)
        }
        Engine::Analytic => {
            let params = spec.effective_parameters()?;
            let d = LambdaDetunings::new(
                omega_p,
                params.omega_q_motional(),
                params.omega_r_dressed,
                spec.drive.omega_mod,
            );
            analytic_transmission(
                d.delta,
                d.delta2,
                gamma_relax,
                spec.device.gamma_total(),
                spec.device.kappa,
                params.omega_phi_rabi,
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::ghz;

    #[test]
    fn grid_validation() {
        assert!(uniform_grid(1.0, 1.0, 3).is_err());
        assert!(uniform_grid(0.0, 1.0, 1).is_err());
        let g = uniform_grid(0.0, 1.0, 5).unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(validate_grid(&[0.0, 1.0, 1.0]).is_err());
        assert!(validate_grid(&[]).is_err());
        let d = default_grid(ghz(6.282));
        assert_eq!(d.len(), DEFAULT_GRID_POINTS);
        assert!((d[800] - d[0] - 2.0 * default_half_width()).abs() < 1e-12);
    }

    #[test]
    fn wrap_is_principal() {
        assert!((wrap(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap(-0.5) + 0.5).abs() < 1e-15);
    }
}
