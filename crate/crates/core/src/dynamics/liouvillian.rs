//! Lindblad generator and its column-stacked superoperator form.
//!
//! The dissipator is `𝒟[O]ρ = 2OρO† − ρO†O − O†Oρ` and the generator is
//! `−i[H, ρ] + (Γ/2)𝒟[σ]ρ + (κ/2)𝒟[a]ρ + γ_φ𝒟[σ†σ]ρ`.
//!
//! Superoperators act on `vec(ρ)`, the columns of `ρ` stacked top to bottom,
//! so that `vec(AXB) = (Bᵀ ⊗ A)·vec(X)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::operators::{qubit_lowering, resonator_lowering, DensityMatrix, OperatorMatrix};

type Mat = DMatrix<Complex64>;

/// Dissipation rates in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    /// Qubit relaxation `Γ`.
    pub gamma_relax: f64,
    /// Resonator loss `κ`.
    pub kappa: f64,
    /// Qubit pure dephasing `γ_φ`.
    pub gamma_phi: f64,
}

impl Rates {
    pub fn new(gamma_relax: f64, kappa: f64, gamma_phi: f64) -> Self {
        Self {
            gamma_relax,
            kappa,
            gamma_phi,
        }
    }

    pub fn from_device(device: &DeviceParams) -> Self {
        Self::new(device.gamma_relax, device.kappa, device.gamma_phi)
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("Gamma", self.gamma_relax),
            ("kappa", self.kappa),
            ("gamma_phi", self.gamma_phi),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "rate {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Slowest nonzero decay rate among the qubit coherence `Γ/2 + γ_φ` and
    /// the resonator amplitude `κ/2`.
    pub fn slowest_decay(&self) -> Option<f64> {
        [self.gamma_relax / 2.0 + self.gamma_phi, self.kappa / 2.0]
            .into_iter()
            .filter(|r| *r > 0.0)
            .reduce(f64::min)
    }

    /// Collapse operators with their prefactors in front of `𝒟`.
    fn channels(&self, n_fock: usize) -> Result<Vec<(f64, OperatorMatrix)>> {
        let sigma = qubit_lowering(n_fock)?;
        let a = resonator_lowering(n_fock)?;
        let n_q = &sigma.adjoint() * &sigma;
        Ok([
            (self.gamma_relax / 2.0, sigma),
            (self.kappa / 2.0, a),
            (self.gamma_phi, n_q),
        ]
        .into_iter()
        .filter(|(r, _)| *r > 0.0)
        .collect())
    }
}

fn n_fock_of(dim: usize) -> Result<usize> {
    if !dim.is_multiple_of(2) || dim < 4 {
        return Err(Error::Dimension(format!(
            "dimension {dim} is not 2·n_fock with n_fock ≥ 2"
        )));
    }
    Ok(dim / 2)
}

/// Apply the Lindblad generator to an arbitrary square matrix.
pub fn liouvillian_apply_matrix(h: &OperatorMatrix, rho: &Mat, rates: &Rates) -> Result<Mat> {
    rates.validate()?;
    let dim = h.dim();
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::Dimension(format!(
            "state is {}×{}, Hamiltonian is {dim}×{dim}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let n_fock = n_fock_of(dim)?;
    let hm = h.matrix();
    let minus_i = Complex64::new(0.0, -1.0);
    let mut out = (hm * rho - rho * hm) * minus_i;
    for (rate, op) in rates.channels(n_fock)? {
        let o = op.matrix();
        let od = o.adjoint();
        let odo = &od * o;
        let term = (o * rho * &od) * Complex64::new(2.0, 0.0) - rho * &odo - &odo * rho;
        out += term * Complex64::new(rate, 0.0);
    }
    Ok(out)
}

/// Apply the Lindblad generator `L(ρ)`.
pub fn liouvillian_apply(h: &OperatorMatrix, rho: &DensityMatrix, rates: &Rates) -> Result<Mat> {
    liouvillian_apply_matrix(h, rho.matrix(), rates)
}

/// Superoperator of `X ↦ −i[H, X]`.
pub fn hamiltonian_superoperator(h: &OperatorMatrix) -> Mat {
    let d = h.dim();
    let id = Mat::identity(d, d);
    let hm = h.matrix();
    let left = id.kronecker(hm);
    let right = hm.transpose().kronecker(&id);
    (left - right) * Complex64::new(0.0, -1.0)
}

/// Superoperator of the dissipative part of the generator.
pub fn dissipator_superoperator(n_fock: usize, rates: &Rates) -> Result<Mat> {
    rates.validate()?;
    let d = 2 * n_fock;
    let id = Mat::identity(d, d);
    let mut out = Mat::zeros(d * d, d * d);
    for (rate, op) in rates.channels(n_fock)? {
        let o = op.matrix();
        let odo = o.adjoint() * o;
        let jump = o.conjugate().kronecker(o) * Complex64::new(2.0, 0.0);
        let anti = odo.transpose().kronecker(&id) + id.kronecker(&odo);
        out += (jump - anti) * Complex64::new(rate, 0.0);
    }
    Ok(out)
}

/// Full generator superoperator for a fixed Hamiltonian.
pub fn superoperator(h: &OperatorMatrix, rates: &Rates) -> Result<Mat> {
    let n_fock = n_fock_of(h.dim())?;
    Ok(hamiltonian_superoperator(h) + dissipator_superoperator(n_fock, rates)?)
}

/// Column-stack a square matrix.
pub fn vectorize(m: &Mat) -> Mat {
    let n = m.nrows() * m.ncols();
    Mat::from_column_slice(n, 1, m.as_slice())
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &[Complex64], dim: usize) -> Mat {
    Mat::from_column_slice(dim, dim, v)
}
