//! Time integration of the master equation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::hamiltonian::{Envelope, Frame, HamiltonianSpec, HamiltonianTerms};
use super::liouvillian::{dissipator_superoperator, hamiltonian_superoperator, Rates};
use crate::error::{Error, Result};
use crate::ode::{DormandPrince, OdeOptions};
use crate::operators::{qubit_lowering, qubit_number, resonator_number, DensityMatrix, StateTolerance};

type Mat = DMatrix<Complex64>;

/// Fraction of the modulation period used as the lab-frame step cap.
pub const LAB_STEPS_PER_PERIOD: f64 = 20.0;

/// Integrator settings for master-equation runs.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EvolveOptions {
    /// Relative tolerance of the adaptive step control.
    pub rtol: f64,
    /// Absolute tolerance of the adaptive step control.
    pub atol: f64,
    /// Optional extra cap on the step size (ns).
    pub h_max: Option<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-12,
            h_max: None,
        }
    }
}

impl EvolveOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        Self {
            rtol,
            ..Self::default()
        }
    }

    pub(crate) fn ode_options(&self, spec: &HamiltonianSpec) -> OdeOptions {
        let mut h_max = self.h_max.unwrap_or(f64::INFINITY);
        if spec.frame == Frame::LabRotatingAtProbe {
            if let Some(period) = spec.modulation_period() {
                h_max = h_max.min(period / LAB_STEPS_PER_PERIOD);
            }
        }
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            h_max,
            ..OdeOptions::default()
        }
    }
}

/// Generator superoperator `L(t) = L₀ + Σ cᵢ(t)·Lᵢ` on column-stacked states.
pub struct Generator {
    constant: Mat,
    modulated: Vec<(Mat, Envelope)>,
    dim: usize,
}

impl Generator {
    pub fn new(terms: &HamiltonianTerms, rates: &Rates) -> Result<Self> {
        let dim = terms.constant.dim();
        let n_fock = dim / 2;
        let constant = hamiltonian_superoperator(&terms.constant) + dissipator_superoperator(n_fock, rates)?;
        let modulated = terms
            .modulated
            .iter()
            .map(|(op, c)| (hamiltonian_superoperator(op), c.clone()))
            .collect();
        Ok(Self {
            constant,
            modulated,
            dim,
        })
    }

    pub fn from_spec(spec: &HamiltonianSpec, rates: &Rates) -> Result<Self> {
        Self::new(&spec.terms()?, rates)
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_time_independent(&self) -> bool {
        self.modulated.is_empty()
    }

    /// The generator matrix at time `t`.
    pub fn at(&self, t: f64, out: &mut Mat) {
        out.copy_from(&self.constant);
        for (op, c) in &self.modulated {
            let v = c(t);
            if v != 0.0 {
                out.zip_apply(op, |a, b| *a += b * v);
            }
        }
    }

    /// `out = L(t)·y` for a state or a stack of states.
    pub fn apply(&self, t: f64, y: &Mat, scratch: &mut Mat, out: &mut Mat) {
        if self.modulated.is_empty() {
            out.gemm(Complex64::new(1.0, 0.0), &self.constant, y, Complex64::new(0.0, 0.0));
        } else {
            self.at(t, scratch);
            out.gemm(Complex64::new(1.0, 0.0), scratch, y, Complex64::new(0.0, 0.0));
        }
    }

    pub(crate) fn scratch(&self) -> Mat {
        let n = self.dim * self.dim;
        Mat::zeros(n, n)
    }
}

/// Replace a column-stacked state by `(ρ + ρ†)/2`.
pub(crate) fn hermitize_vec(y: &mut Mat, dim: usize) {
    let s = y.as_mut_slice();
    for j in 0..dim {
        let jj = j * dim + j;
        s[jj] = Complex64::new(s[jj].re, 0.0);
        for i in 0..j {
            let upper = j * dim + i;
            let lower = i * dim + j;
            let avg = (s[upper] + s[lower].conj()) * 0.5;
            s[upper] = avg;
            s[lower] = avg.conj();
        }
    }
}

/// Sampled observables of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    /// `⟨σ⟩`.
    pub sigma: Complex64,
    /// `⟨σ†σ⟩`.
    pub p_exc: f64,
    /// `⟨a†a⟩`.
    pub n_res: f64,
}

pub(crate) struct ObservableSet {
    sigma: Mat,
    n_q: Mat,
    n_r: Mat,
}

impl ObservableSet {
    pub(crate) fn new(n_fock: usize) -> Result<Self> {
        Ok(Self {
            sigma: qubit_lowering(n_fock)?.into_matrix(),
            n_q: qubit_number(n_fock)?.into_matrix(),
            n_r: resonator_number(n_fock)?.into_matrix(),
        })
    }

    /// `Tr(ρ·O)` for a column-stacked `ρ`.
    fn trace_vec(rho: &[Complex64], op: &Mat) -> Complex64 {
        let d = op.nrows();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            for k in 0..d {
                let o = op[(k, i)];
                if o != Complex64::new(0.0, 0.0) {
                    acc += rho[k * d + i] * o;
                }
            }
        }
        acc
    }

    pub(crate) fn sigma_vec(&self, rho: &[Complex64]) -> Complex64 {
        Self::trace_vec(rho, &self.sigma)
    }

    pub(crate) fn evaluate(&self, rho: &[Complex64]) -> Observables {
        Observables {
            sigma: Self::trace_vec(rho, &self.sigma),
            p_exc: Self::trace_vec(rho, &self.n_q).re,
            n_res: Self::trace_vec(rho, &self.n_r).re,
        }
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Domain("time grid is empty".into()));
    }
    for (i, w) in t_grid.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::Domain(format!(
                "time grid must be strictly increasing (index {i}: {} then {})",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Integrate from `rho0` at `t_grid[0]` and hand every sampled state to `sample`.
///
/// States are re-Hermitized after every accepted step and validated against
/// `tol` before they are sampled.
pub(crate) fn integrate_sampled<F>(
    rho0: &DensityMatrix,
    spec: &HamiltonianSpec,
    rates: &Rates,
    t_grid: &[f64],
    opts: &EvolveOptions,
    tol: &StateTolerance,
    mut sample: F,
) -> Result<()>
where
    F: FnMut(usize, f64, &Mat) -> Result<()>,
{
    check_grid(t_grid)?;
    if rho0.dim() != spec.dim() {
        return Err(Error::Dimension(format!(
            "initial state has dimension {}, spec needs {}",
            rho0.dim(),
            spec.dim()
        )));
    }
    rho0.validate_with(tol)?;
    let generator = Generator::from_spec(spec, rates)?;
    let dim = generator.dim();
    let mut scratch = generator.scratch();
    let mut rhs = |t: f64, y: &Mat, dy: &mut Mat| generator.apply(t, y, &mut scratch, dy);
    let mut post = |y: &mut Mat| hermitize_vec(y, dim);
    let mut ode = DormandPrince::new(
        t_grid[0],
        Mat::from_column_slice(dim * dim, 1, rho0.matrix().as_slice()),
        opts.ode_options(spec),
    );
    for (i, &t) in t_grid.iter().enumerate() {
        ode.advance_to(t, &mut rhs, &mut post)?;
        let state = DensityMatrix::new_unchecked(Mat::from_column_slice(dim, dim, ode.state().as_slice()))?;
        state
            .validate_with(tol)
            .map_err(|e| Error::Integration {
                time: t,
                reason: e.to_string(),
            })?;
        sample(i, t, state.matrix())?;
    }
    Ok(())
}

/// States and observables sampled on a time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// `⟨σ⟩(t)`.
    pub sigma: Vec<Complex64>,
    /// `⟨σ†σ⟩(t)`.
    pub p_exc: Vec<f64>,
    /// `⟨a†a⟩(t)`.
    pub n_res: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Real-valued observable series by name: `p_exc`, `n_res`, `re_sigma`, `im_sigma`.
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        match name {
            "p_exc" => Some(self.p_exc.clone()),
            "n_res" => Some(self.n_res.clone()),
            "re_sigma" => Some(self.sigma.iter().map(|z| z.re).collect()),
            "im_sigma" => Some(self.sigma.iter().map(|z| z.im).collect()),
            _ => None,
        }
    }
}

/// Integrate the master equation and record the state on every grid point.
pub fn evolve(
    rho0: &DensityMatrix,
    spec: &HamiltonianSpec,
    t_grid: &[f64],
    rates: &Rates,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let obs = ObservableSet::new(spec.n_fock)?;
    let n = t_grid.len();
    let mut traj = Trajectory {
        times: t_grid.to_vec(),
        states: Vec::with_capacity(n),
        sigma: Vec::with_capacity(n),
        p_exc: Vec::with_capacity(n),
        n_res: Vec::with_capacity(n),
    };
    integrate_sampled(
        rho0,
        spec,
        rates,
        t_grid,
        opts,
        &StateTolerance::default(),
        |_, _, rho| {
            let o = obs.evaluate(rho.as_slice());
            traj.sigma.push(o.sigma);
            traj.p_exc.push(o.p_exc);
            traj.n_res.push(o.n_res);
            traj.states.push(DensityMatrix::new_unchecked(rho.clone())?);
            Ok(())
        },
    )?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{DeviceParams, DriveConfig};

    fn device(g: f64) -> DeviceParams {
        DeviceParams {
            e_c: 0.0,
            e_j0: 0.0,
            asymmetry: 0.0,
            flux_bias: 0.0,
            g,
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

    fn drive(rabi: f64) -> DriveConfig {
        DriveConfig {
            omega_p_rabi: rabi,
            omega_p: 5.0,
            delta_phi: 0.0,
            eps_phi: Some(0.0),
            omega_mod: 4.0,
            omega_phi_rabi: None,
        }
    }

    fn grid(end: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| end * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn free_decay_is_exponential() {
        let spec = HamiltonianSpec::new(Frame::LabRotatingAtProbe, device(0.0), drive(0.0), 3);
        let rates = Rates::new(0.76, 0.0, 0.0);
        let rho0 = DensityMatrix::basis(3, true, 0).unwrap();
        let ts = grid(10.0, 41);
        let traj = evolve(&rho0, &spec, &ts, &rates, &EvolveOptions::default()).unwrap();
        for (t, p) in traj.times.iter().zip(&traj.p_exc) {
            let exact = (-0.76 * t).exp();
            assert!((p - exact).abs() <= 1e-6 * exact, "t={t}: {p} vs {exact}");
        }
    }

    #[test]
    fn ground_state_is_stationary_without_drive() {
        let spec = HamiltonianSpec::new(Frame::LabRotatingAtProbe, device(0.3), drive(0.0), 3);
        let rates = Rates::new(0.76, 0.005, 0.02);
        let rho0 = DensityMatrix::ground(3).unwrap();
        let traj = evolve(&rho0, &spec, &grid(20.0, 11), &rates, &EvolveOptions::default()).unwrap();
        for s in &traj.states {
            assert!(s.trace_distance(&rho0).unwrap() < 1e-14);
        }
    }

    #[test]
    fn resonant_rabi_oscillation() {
        let rabi = 0.4;
        let spec = HamiltonianSpec::new(Frame::LabRotatingAtProbe, device(0.0), drive(rabi), 2);
        let rho0 = DensityMatrix::ground(2).unwrap();
        let ts = grid(40.0, 81);
        let traj = evolve(&rho0, &spec, &ts, &Rates::zero(), &EvolveOptions::default()).unwrap();
        for (t, p) in traj.times.iter().zip(&traj.p_exc) {
            let exact = (rabi * t / 2.0).sin().powi(2);
            assert!((p - exact).abs() < 1e-6, "t={t}: {p} vs {exact}");
        }
    }

    #[test]
    fn rejects_non_increasing_grid() {
        let spec = HamiltonianSpec::new(Frame::LabRotatingAtProbe, device(0.0), drive(0.0), 2);
        let rho0 = DensityMatrix::ground(2).unwrap();
        let err = evolve(&rho0, &spec, &[0.0, 1.0, 1.0], &Rates::zero(), &EvolveOptions::default());
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn hermitize_vec_symmetrizes() {
        let m = Mat::from_fn(3, 3, |r, c| Complex64::new((r * 3 + c) as f64, (r as f64) - (c as f64) * 0.5));
        let mut v = Mat::from_column_slice(9, 1, m.as_slice());
        hermitize_vec(&mut v, 3);
        let h = Mat::from_column_slice(3, 3, v.as_slice());
        let expected = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        assert!((h - expected).iter().all(|z| z.norm() < 1e-15));
    }
}
