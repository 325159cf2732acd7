//! Stationary and periodic asymptotic states.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::evolve::{hermitize_vec, EvolveOptions, Generator, ObservableSet};
use super::hamiltonian::{Frame, HamiltonianSpec};
use super::liouvillian::Rates;
use crate::error::{Error, Result};
use crate::ode::DormandPrince;
use crate::operators::DensityMatrix;

type Mat = DMatrix<Complex64>;

/// Singular values below this fraction of the largest one span the null space.
pub const NULL_SPACE_THRESHOLD: f64 = 1e-10;

/// Null-space steady state of a time-independent generator.
pub fn steady_state(spec: &HamiltonianSpec, rates: &Rates) -> Result<DensityMatrix> {
    let generator = Generator::from_spec(spec, rates)?;
    if !generator.is_time_independent() {
        return Err(Error::Config(
            "steady_state needs a time-independent Hamiltonian (no envelopes or flux modulation)"
                .into(),
        ));
    }
    let dim = generator.dim();
    let mut l = generator.scratch();
    generator.at(0.0, &mut l);
    null_space_state(l, dim)
}

fn null_space_state(l: Mat, dim: usize) -> Result<DensityMatrix> {
    let svd = l.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
    let largest = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let threshold = NULL_SPACE_THRESHOLD * largest.max(f64::MIN_POSITIVE);
    let null: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= threshold)
        .map(|(i, _)| i)
        .collect();
    if null.len() != 1 {
        return Err(Error::Ambiguity { nullity: null.len() });
    }
    // Right singular vector of the zero singular value: conjugate row of Vᴴ.
    let row = v_t.row(null[0]);
    let v: Vec<Complex64> = row.iter().map(|z| z.conj()).collect();
    let mut rho = Mat::from_column_slice(dim, dim, &v);
    let tr = rho.trace();
    if tr.norm() < 1e-14 {
        return Err(Error::InvalidState("null vector has vanishing trace".into()));
    }
    rho /= tr;
    let mut state = DensityMatrix::new_unchecked(rho)?;
    state.hermitize();
    state.validate()?;
    Ok(state)
}

/// Settings of [`periodic_steady_state_sigma`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PeriodicOptions {
    /// Integration length before averaging, in units of the slowest relaxation time.
    pub relaxation_times: f64,
    /// Number of modulation periods in the averaging window.
    pub average_periods: usize,
    /// Uniform samples per period in the averaging window.
    pub samples_per_period: usize,
    /// Largest tolerated change of the averaged `⟨σ⟩` between the two checks.
    pub drift_threshold: f64,
    /// How many times the relaxation window may double when the drift check fails.
    pub max_doublings: u32,
    pub evolve: EvolveOptions,
}

impl Default for PeriodicOptions {
    fn default() -> Self {
        Self {
            relaxation_times: 30.0,
            average_periods: 1,
            samples_per_period: 64,
            drift_threshold: 1e-5,
            max_doublings: 8,
            evolve: EvolveOptions::default(),
        }
    }
}

/// Result of a periodic steady-state computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicSigma {
    /// Period-averaged `⟨σ⟩`.
    pub sigma: Complex64,
    /// Number of periods integrated before averaging.
    pub periods: u64,
    /// Change of the average between `periods` and `2·periods`.
    pub drift: f64,
}

/// One-period propagator of the column-stacked master equation.
fn monodromy(generator: &Generator, period: f64, opts: &EvolveOptions, spec: &HamiltonianSpec) -> Result<Mat> {
    let n = generator.dim() * generator.dim();
    let mut scratch = generator.scratch();
    let mut rhs = |t: f64, y: &Mat, dy: &mut Mat| generator.apply(t, y, &mut scratch, dy);
    let mut ode = DormandPrince::new(0.0, Mat::identity(n, n), opts.ode_options(spec));
    ode.advance_to(period, &mut rhs, &mut |_: &mut Mat| {})?;
    Ok(ode.state().clone())
}

fn matrix_power(base: &Mat, mut exp: u64) -> Mat {
    let n = base.nrows();
    let mut result = Mat::identity(n, n);
    let mut square = base.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            result = &square * &result;
        }
        exp >>= 1;
        if exp > 0 {
            square = &square * &square;
        }
    }
    result
}

/// Average `⟨σ⟩` over `periods` periods starting from `y` at `t = 0 mod T`.
fn period_average(
    generator: &Generator,
    y: &Mat,
    period: f64,
    opts: &PeriodicOptions,
    spec: &HamiltonianSpec,
    obs: &ObservableSet,
) -> Result<Complex64> {
    let dim = generator.dim();
    let mut scratch = generator.scratch();
    let mut rhs = |t: f64, y: &Mat, dy: &mut Mat| generator.apply(t, y, &mut scratch, dy);
    let mut post = |y: &mut Mat| hermitize_vec(y, dim);
    let mut ode = DormandPrince::new(0.0, y.clone(), opts.evolve.ode_options(spec));
    let n = opts.samples_per_period * opts.average_periods;
    let dt = period * opts.average_periods as f64 / n as f64;
    // Rectangle rule on a uniform periodic grid equals the trapezoid rule.
    let mut acc = obs.sigma_vec(y.as_slice());
    for k in 1..n {
        ode.advance_to(dt * k as f64, &mut rhs, &mut post)?;
        acc += obs.sigma_vec(ode.state().as_slice());
    }
    Ok(acc / n as f64)
}

/// Period-averaged `⟨σ⟩` in the asymptotic periodic regime of the lab frame.
///
/// The one-period propagator `P` is integrated once and raised to the number
/// of periods covering `relaxation_times` slowest relaxation times; the
/// average is compared against the one after twice as many periods. While
/// the drift exceeds the threshold the window doubles, up to
/// `max_doublings` times.
pub fn periodic_steady_state_sigma(
    spec: &HamiltonianSpec,
    rates: &Rates,
    opts: &PeriodicOptions,
) -> Result<PeriodicSigma> {
    if spec.frame != Frame::LabRotatingAtProbe {
        return Err(Error::Config(
            "periodic_steady_state_sigma needs a lab-frame spec".into(),
        ));
    }
    if spec.modulation_envelope.is_some() || spec.probe_envelope.is_some() {
        return Err(Error::Config(
            "periodic_steady_state_sigma does not accept envelopes".into(),
        ));
    }
    let period = spec
        .modulation_period()
        .ok_or_else(|| Error::Config("modulation frequency must be positive".into()))?;
    if opts.samples_per_period == 0 || opts.average_periods == 0 {
        return Err(Error::Config("averaging window must contain samples".into()));
    }
    let relax = rates
        .slowest_decay()
        .ok_or_else(|| Error::Config("periodic steady state needs nonzero dissipation".into()))?;
    let periods = ((opts.relaxation_times / relax) / period).ceil().max(1.0) as u64;

    let generator = Generator::from_spec(spec, rates)?;
    let dim = generator.dim();
    let obs = ObservableSet::new(spec.n_fock)?;
    let p = monodromy(&generator, period, &opts.evolve, spec)?;
    let p_n = matrix_power(&p, periods);
    let ground = DensityMatrix::ground(spec.n_fock)?;
    let y0 = Mat::from_column_slice(dim * dim, 1, ground.matrix().as_slice());

    let mut periods = periods;
    let mut p_n = p_n;
    let mut y1 = &p_n * &y0;
    hermitize_vec(&mut y1, dim);
    let mut s1 = checked_average(&generator, &y1, period, opts, spec, &obs)?;
    let mut doublings = 0;
    loop {
        let mut y2 = &p_n * &y1;
        hermitize_vec(&mut y2, dim);
        let s2 = checked_average(&generator, &y2, period, opts, spec, &obs)?;
        let drift = (s2 - s1).norm();
        if drift <= opts.drift_threshold {
            return Ok(PeriodicSigma {
                sigma: s2,
                periods,
                drift,
            });
        }
        if doublings == opts.max_doublings {
            return Err(Error::Convergence {
                drift,
                threshold: opts.drift_threshold,
            });
        }
        doublings += 1;
        log::debug!("periodic drift {drift:.3e} after {periods} periods, doubling the window");
        periods *= 2;
        p_n = &p_n * &p_n;
        y1 = y2;
        s1 = s2;
    }
}

fn checked_average(
    generator: &Generator,
    y: &Mat,
    period: f64,
    opts: &PeriodicOptions,
    spec: &HamiltonianSpec,
    obs: &ObservableSet,
) -> Result<Complex64> {
    let dim = generator.dim();
    let rho = DensityMatrix::new_unchecked(Mat::from_column_slice(dim, dim, y.as_slice()))?;
    rho.validate()?;
    period_average(generator, y, period, opts, spec, obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{DeviceParams, DriveConfig};
    use crate::dynamics::evolve::evolve;
    use crate::operators::{expectation, qubit_lowering};
    use crate::units::mhz;

    fn device() -> DeviceParams {
        DeviceParams {
            e_c: 0.0,
            e_j0: 0.0,
            asymmetry: 0.0,
            flux_bias: 0.0,
            g: mhz(20.0),
            gamma_relax: mhz(121.0),
            gamma_phi: mhz(3.0),
            kappa: mhz(5.0),
            omega_r: 5.0,
            omega_r_dressed: 5.0,
            omega_q: Some(5.4),
            omega_q_dressed: Some(5.4),
            length_um: 0.0,
            c0: None,
            c1: None,
        }
    }

    fn drive(rabi: f64) -> DriveConfig {
        DriveConfig {
            omega_p_rabi: rabi,
            omega_p: 5.4,
            delta_phi: 0.0,
            eps_phi: Some(0.0),
            omega_mod: 0.4,
            omega_phi_rabi: None,
        }
    }

    #[test]
    fn undriven_steady_state_is_ground() {
        let spec = HamiltonianSpec::new(Frame::EffectiveTimeIndependent, device(), drive(0.0), 3);
        let rho = steady_state(&spec, &Rates::from_device(&spec.device)).unwrap();
        let ground = DensityMatrix::ground(3).unwrap();
        assert!(rho.trace_distance(&ground).unwrap() < 1e-10);
    }

    #[test]
    fn dissipationless_generator_is_ambiguous() {
        let spec = HamiltonianSpec::new(Frame::EffectiveTimeIndependent, device(), drive(0.0), 2);
        let err = steady_state(&spec, &Rates::zero()).unwrap_err();
        assert!(matches!(err, Error::Ambiguity { nullity } if nullity > 1));
    }

    #[test]
    fn steady_state_matches_long_integration() {
        let spec = HamiltonianSpec::new(Frame::LabRotatingAtProbe, device(), drive(mhz(8.0)), 3);
        let rates = Rates::from_device(&spec.device);
        let ss = steady_state(&spec, &rates).unwrap();
        let t_end = 50.0 / rates.gamma_relax.min(rates.kappa);
        let traj = evolve(
            &DensityMatrix::ground(3).unwrap(),
            &spec,
            &[0.0, t_end],
            &rates,
            &EvolveOptions::default(),
        )
        .unwrap();
        assert!(traj.states[1].trace_distance(&ss).unwrap() < 1e-6);
    }

    #[test]
    fn periodic_without_modulation_equals_steady_state() {
        let spec = HamiltonianSpec::new(Frame::LabRotatingAtProbe, device(), drive(mhz(2.0)), 3);
        let rates = Rates::from_device(&spec.device);
        let ss = steady_state(&spec, &rates).unwrap();
        let sigma_ss = expectation(&ss, &qubit_lowering(3).unwrap()).unwrap();
        let periodic = periodic_steady_state_sigma(&spec, &rates, &PeriodicOptions::default()).unwrap();
        assert!((periodic.sigma - sigma_ss).norm() < 1e-8);
    }

    #[test]
    fn periodic_average_is_window_independent() {
        let mut d = drive(mhz(2.0));
        d.eps_phi = Some(0.3);
        let spec = HamiltonianSpec::new(Frame::LabRotatingAtProbe, device(), d, 3);
        let rates = Rates::from_device(&spec.device);
        let one = periodic_steady_state_sigma(&spec, &rates, &PeriodicOptions::default()).unwrap();
        let two = periodic_steady_state_sigma(
            &spec,
            &rates,
            &PeriodicOptions {
                average_periods: 2,
                ..PeriodicOptions::default()
            },
        )
        .unwrap();
        assert!((one.sigma - two.sigma).norm() < 1e-6);
    }

    #[test]
    fn matrix_power_by_squaring() {
        let m = Mat::from_fn(3, 3, |r, c| Complex64::new(0.1 * (r + 2 * c) as f64, 0.05 * r as f64));
        let mut direct = Mat::identity(3, 3);
        for _ in 0..13 {
            direct = &m * &direct;
        }
        let fast = matrix_power(&m, 13);
        assert!((direct - fast).iter().all(|z| z.norm() < 1e-12));
    }
}
