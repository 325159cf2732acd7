//! Nonlinear least-squares fits of transmission spectra.
//!
//! Residuals are the real and imaginary parts of `t_model − t_data` stacked
//! into one vector. The minimizer is Levenberg–Marquardt with central
//! difference Jacobians.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt, TerminationReason};
use nalgebra::{storage::Owned, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::sweep::Spectrum;
use super::transmission::{analytic_transmission, LambdaDetunings};
use crate::error::{Error, Result};

/// Evaluation budget of the minimizer, in units of `n + 1` residual evaluations.
pub const MAX_ITERATIONS: usize = 200;

/// Termination threshold on the relative parameter step.
pub const STEP_TOLERANCE: f64 = 1e-10;

/// Result of [`fit_two_level`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelFit {
    /// Dressed qubit frequency `ω̃_q`.
    pub omega_q: f64,
    /// Radiative relaxation rate `Γ`.
    pub gamma_relax: f64,
    /// Pure dephasing rate `γ_φ`.
    pub gamma_phi: f64,
    /// Euclidean norm of the stacked residuals.
    pub residual_norm: f64,
    /// Parameter covariance, ordered as `(ω̃_q, Γ, γ_φ)`.
    pub covariance: Vec<Vec<f64>>,
    pub evaluations: usize,
}

impl TwoLevelFit {
    /// Model transmission at one probe frequency.
    pub fn model(&self, omega_p: f64) -> Complex64 {
        two_level_model(&[self.omega_q, self.gamma_relax, self.gamma_phi], omega_p)
    }

    /// One-standard-deviation uncertainties from the covariance diagonal.
    pub fn uncertainties(&self) -> Vec<f64> {
        diagonal_sqrt(&self.covariance)
    }
}

/// Parameters held fixed in [`fit_eit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EitFixed {
    /// Radiative relaxation rate `Γ`.
    pub gamma_relax: f64,
    /// Total qubit decoherence `γ = Γ/2 + γ_φ`.
    pub gamma: f64,
    /// Resonator loss `κ`.
    pub kappa: f64,
    /// Dressed resonator frequency `ω̃_r`.
    pub omega_r_dressed: f64,
    /// Modulation frequency `ω_Φ`.
    pub omega_mod: f64,
}

/// Result of [`fit_eit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaFit {
    /// Motional qubit frequency `ω̃_q^M`.
    pub omega_q_motional: f64,
    /// Sideband Rabi frequency `Ω_Φ ≥ 0`.
    pub omega_phi: f64,
    /// Euclidean norm of the stacked residuals.
    pub residual_norm: f64,
    /// Parameter covariance, ordered as `(ω̃_q^M, Ω_Φ)`.
    pub covariance: Vec<Vec<f64>>,
    pub evaluations: usize,
}

impl LambdaFit {
    /// Model transmission at one probe frequency.
    pub fn model(&self, fixed: &EitFixed, omega_p: f64) -> Result<Complex64> {
        eit_model(fixed, self.omega_q_motional, self.omega_phi, omega_p)
    }

    /// One-standard-deviation uncertainties from the covariance diagonal.
    pub fn uncertainties(&self) -> Vec<f64> {
        diagonal_sqrt(&self.covariance)
    }

    /// Root-mean-square difference of `|t_c|` between the data and the fit.
    pub fn magnitude_rms(&self, spectrum: &Spectrum, fixed: &EitFixed) -> Result<f64> {
        let mut acc = 0.0;
        for (w, t) in spectrum.omega_p.iter().zip(&spectrum.t_c) {
            let d = self.model(fixed, *w)?.norm() - t.norm();
            acc += d * d;
        }
        Ok((acc / spectrum.len() as f64).sqrt())
    }
}

fn diagonal_sqrt(cov: &[Vec<f64>]) -> Vec<f64> {
    cov.iter().enumerate().map(|(i, row)| row[i].max(0.0).sqrt()).collect()
}

fn two_level_model(p: &[f64], omega_p: f64) -> Complex64 {
    let (omega_q, gamma_relax, gamma_phi) = (p[0], p[1], p[2]);
    let gamma = gamma_relax / 2.0 + gamma_phi;
    1.0 + Complex64::new(0.0, gamma_relax / 2.0) / Complex64::new(omega_q - omega_p, -gamma)
}

fn eit_model(fixed: &EitFixed, omega_q_motional: f64, omega_phi: f64, omega_p: f64) -> Result<Complex64> {
    let d = LambdaDetunings::new(omega_p, omega_q_motional, fixed.omega_r_dressed, fixed.omega_mod);
    analytic_transmission(d.delta, d.delta2, fixed.gamma_relax, fixed.gamma, fixed.kappa, omega_phi)
}

/// Fit `(ω̃_q, Γ, γ_φ)` of the unmodulated two-level response.
///
/// Starting values: `ω̃_q` at the deepest point of the dip, `Γ` from the full
/// width at half maximum of `|1 − t|²`, and `γ_φ = 0`.
pub fn fit_two_level(spectrum: &Spectrum) -> Result<TwoLevelFit> {
    require_points(spectrum, 3)?;
    let k = spectrum.argmin_magnitude().expect("non-empty spectrum");
    let omega_q0 = spectrum.omega_p[k];
    let gamma0 = reflection_fwhm(spectrum, k);
    let omega = spectrum.omega_p.clone();
    let data = spectrum.t_c.clone();
    let outcome = minimize(
        vec![omega_q0, gamma0, 0.0],
        move |p: &[f64]| {
            Ok(omega
                .iter()
                .zip(&data)
                .map(|(w, t)| two_level_model(p, *w) - t)
                .collect())
        },
    )?;
    Ok(TwoLevelFit {
        omega_q: outcome.params[0],
        gamma_relax: outcome.params[1],
        gamma_phi: outcome.params[2],
        residual_norm: outcome.residual_norm,
        covariance: outcome.covariance,
        evaluations: outcome.evaluations,
    })
}

fn reflection_fwhm(spectrum: &Spectrum, peak: usize) -> f64 {
    let r2: Vec<f64> = spectrum.t_c.iter().map(|t| (1.0 - t).norm_sqr()).collect();
    let half = r2[peak] / 2.0;
    let w = &spectrum.omega_p;
    let mut lo = peak;
    while lo > 0 && r2[lo] > half {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < r2.len() && r2[hi] > half {
        hi += 1;
    }
    let width = w[hi] - w[lo];
    if width > 0.0 {
        width
    } else {
        (w[w.len() - 1] - w[0]) / 4.0
    }
}

/// Fit `(ω̃_q^M, Ω_Φ)` of a modulated spectrum with the remaining Λ parameters fixed.
///
/// The starting point is the best node of a coarse grid over the probe span
/// for `ω̃_q^M` and `[0, span]` for `Ω_Φ`.
pub fn fit_eit(spectrum: &Spectrum, fixed: &EitFixed) -> Result<LambdaFit> {
    require_points(spectrum, 3)?;
    let omega = spectrum.omega_p.clone();
    let data = spectrum.t_c.clone();
    let fixed = *fixed;
    let residuals = move |p: &[f64]| -> Result<Vec<Complex64>> {
        omega
            .iter()
            .zip(&data)
            .map(|(w, t)| Ok(eit_model(&fixed, p[0], p[1], *w)? - t))
            .collect()
    };
    let start = coarse_start(spectrum, &residuals);
    let outcome = minimize(start, residuals)?;
    Ok(LambdaFit {
        omega_q_motional: outcome.params[0],
        omega_phi: outcome.params[1].abs(),
        residual_norm: outcome.residual_norm,
        covariance: outcome.covariance,
        evaluations: outcome.evaluations,
    })
}

fn coarse_start<F>(spectrum: &Spectrum, residuals: &F) -> Vec<f64>
where
    F: Fn(&[f64]) -> Result<Vec<Complex64>>,
{
    const NODES: usize = 41;
    let lo = spectrum.omega_p[0];
    let hi = spectrum.omega_p[spectrum.len() - 1];
    let span = hi - lo;
    let mut best = (f64::INFINITY, vec![0.5 * (lo + hi), 0.1 * span]);
    for i in 0..NODES {
        let wq = lo + span * i as f64 / (NODES - 1) as f64;
        for j in 0..NODES {
            let om = span * j as f64 / (NODES - 1) as f64;
            if let Ok(r) = residuals(&[wq, om]) {
                let cost: f64 = r.iter().map(|z| z.norm_sqr()).sum();
                if cost < best.0 {
                    best = (cost, vec![wq, om]);
                }
            }
        }
    }
    best.1
}

fn require_points(spectrum: &Spectrum, n: usize) -> Result<()> {
    if spectrum.len() < n {
        return Err(Error::Domain(format!(
            "fit needs more points than parameters, got {}",
            spectrum.len()
        )));
    }
    Ok(())
}

struct Outcome {
    params: Vec<f64>,
    residual_norm: f64,
    covariance: Vec<Vec<f64>>,
    evaluations: usize,
}

struct Problem<F> {
    x: DVector<f64>,
    f: F,
    m: usize,
}

impl<F> Problem<F>
where
    F: Fn(&[f64]) -> Result<Vec<Complex64>>,
{
    fn stacked(&self, x: &[f64]) -> Option<DVector<f64>> {
        let r = (self.f)(x).ok()?;
        let mut out = DVector::zeros(2 * r.len());
        for (k, z) in r.iter().enumerate() {
            out[2 * k] = z.re;
            out[2 * k + 1] = z.im;
        }
        out.iter().all(|v| v.is_finite()).then_some(out)
    }

    fn numeric_jacobian(&self) -> Option<DMatrix<f64>> {
        let n = self.x.len();
        let mut jac = DMatrix::zeros(self.m, n);
        let mut x = self.x.as_slice().to_vec();
        for j in 0..n {
            let h = 1e-7 * self.x[j].abs().max(1e-3);
            x[j] = self.x[j] + h;
            let plus = self.stacked(&x)?;
            x[j] = self.x[j] - h;
            let minus = self.stacked(&x)?;
            x[j] = self.x[j];
            jac.set_column(j, &((plus - minus) / (2.0 * h)));
        }
        Some(jac)
    }
}

impl<F> LeastSquaresProblem<f64, Dyn, Dyn> for Problem<F>
where
    F: Fn(&[f64]) -> Result<Vec<Complex64>>,
{
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.x.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.x.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        self.stacked(self.x.as_slice())
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        self.numeric_jacobian()
    }
}

fn minimize<F>(x0: Vec<f64>, f: F) -> Result<Outcome>
where
    F: Fn(&[f64]) -> Result<Vec<Complex64>>,
{
    let n = x0.len();
    let m = 2 * f(&x0)?.len();
    let problem = Problem {
        x: DVector::from_vec(x0),
        f,
        m,
    };
    let (problem, report) = LevenbergMarquardt::new()
        .with_xtol(STEP_TOLERANCE)
        .with_ftol(1e-15)
        .with_gtol(1e-15)
        .with_patience(MAX_ITERATIONS)
        .minimize(problem);
    let residuals = problem.residuals();
    let residual_norm = residuals.as_ref().map_or(f64::INFINITY, |r| r.norm());
    let converged = match report.termination {
        TerminationReason::LostPatience
        | TerminationReason::User(_)
        | TerminationReason::Numerical(_) => false,
        TerminationReason::NoImprovementPossible(_) => residual_norm.is_finite(),
        ref t => t.was_successful(),
    };
    if !converged {
        log::warn!("fit stopped: {:?}", report.termination);
        return Err(Error::Fit {
            iterations: report.number_of_evaluations,
            residual_norm,
        });
    }
    let covariance = covariance(&problem, residual_norm, m, n);
    Ok(Outcome {
        params: problem.x.as_slice().to_vec(),
        residual_norm,
        covariance,
        evaluations: report.number_of_evaluations,
    })
}

fn covariance<F>(problem: &Problem<F>, residual_norm: f64, m: usize, n: usize) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<Complex64>>,
{
    let nan = vec![vec![f64::NAN; n]; n];
    let Some(jac) = problem.numeric_jacobian() else {
        return nan;
    };
    let dof = m.saturating_sub(n).max(1) as f64;
    let s2 = residual_norm * residual_norm / dof;
    match (jac.transpose() * &jac).try_inverse() {
        Some(inv) => (0..n)
            .map(|i| (0..n).map(|j| inv[(i, j)] * s2).collect())
            .collect(),
        None => nan,
    }
}
