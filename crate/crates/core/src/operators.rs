//! Operators and states on the truncated qubit ⊗ resonator space.
//!
//! Basis ordering is qubit-major: the basis state `|q, n⟩` (qubit level
//! `q ∈ {g = 0, e = 1}`, Fock number `n < n_fock`) sits at index
//! `q * n_fock + n`. Matrix literals in tests rely on this layout.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Default Fock-space truncation.
pub const DEFAULT_N_FOCK: usize = 4;

/// Largest operator dimension [`kron`] will build.
pub const DEFAULT_MAX_DIM: usize = 64;

const HERMITIAN_TOL: f64 = 1e-12;

/// Dense complex square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    data: DMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn from_matrix(data: DMatrix<Complex64>) -> Result<Self> {
        if !data.is_square() || data.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "operator must be square and non-empty, got {}×{}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            data: DMatrix::identity(dim, dim),
        }
    }

    /// Build from a row-major slice of `dim * dim` entries.
    pub fn from_row_slice(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {dim}×{dim} operator, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Fock truncation implied by the qubit-major layout, if the dimension is `2·n` with `n ≥ 2`.
    pub fn n_fock(&self) -> Option<usize> {
        let d = self.dim();
        (d.is_multiple_of(2) && d >= 4).then_some(d / 2)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.adjoint(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            data: &self.data * factor,
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self {
            data: &self.data * &other.data - &other.data * &self.data,
        })
    }

    /// Largest elementwise deviation from Hermiticity, `max |M − M†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.data)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() < HERMITIAN_TOL
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "operator dimensions differ: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }
}

impl<'a> Mul<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;

    fn mul(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        OperatorMatrix {
            data: &self.data * &rhs.data,
        }
    }
}

impl<'a> Add<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;

    fn add(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        OperatorMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl<'a> Sub<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;

    fn sub(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        OperatorMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn check_n_fock(n_fock: usize) -> Result<()> {
    if n_fock < 2 {
        return Err(Error::Dimension(format!(
            "n_fock must be at least 2, got {n_fock}"
        )));
    }
    Ok(())
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// The 2×2 qubit lowering operator `|g⟩⟨e|`.
pub fn two_level_lowering() -> OperatorMatrix {
    let mut m = DMatrix::zeros(2, 2);
    m[(0, 1)] = one();
    OperatorMatrix { data: m }
}

/// Truncated annihilation operator on `n_fock` Fock states.
pub fn annihilation(n_fock: usize) -> Result<OperatorMatrix> {
    check_n_fock(n_fock)?;
    let mut m = DMatrix::zeros(n_fock, n_fock);
    for n in 1..n_fock {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    Ok(OperatorMatrix { data: m })
}

/// `σ ⊗ I_{n_fock}`.
pub fn qubit_lowering(n_fock: usize) -> Result<OperatorMatrix> {
    check_n_fock(n_fock)?;
    kron(&two_level_lowering(), &OperatorMatrix::identity(n_fock))
}

/// `I_2 ⊗ a`.
pub fn resonator_lowering(n_fock: usize) -> Result<OperatorMatrix> {
    kron(&OperatorMatrix::identity(2), &annihilation(n_fock)?)
}

/// Qubit excitation number `σ†σ`.
pub fn qubit_number(n_fock: usize) -> Result<OperatorMatrix> {
    let s = qubit_lowering(n_fock)?;
    Ok(&s.adjoint() * &s)
}

/// Resonator photon number `a†a`.
pub fn resonator_number(n_fock: usize) -> Result<OperatorMatrix> {
    let a = resonator_lowering(n_fock)?;
    Ok(&a.adjoint() * &a)
}

/// Kronecker product with the default size limit.
pub fn kron(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    kron_with_limit(a, b, DEFAULT_MAX_DIM)
}

pub fn kron_with_limit(
    a: &OperatorMatrix,
    b: &OperatorMatrix,
    max_dim: usize,
) -> Result<OperatorMatrix> {
    let dim = a
        .dim()
        .checked_mul(b.dim())
        .ok_or(Error::Size { dim: usize::MAX, max: max_dim })?;
    if dim > max_dim {
        return Err(Error::Size { dim, max: max_dim });
    }
    Ok(OperatorMatrix {
        data: a.data.kronecker(&b.data),
    })
}

/// Index of `|q, n⟩` in the qubit-major layout.
pub fn basis_index(n_fock: usize, qubit_excited: bool, fock: usize) -> usize {
    usize::from(qubit_excited) * n_fock + fock
}

/// Density matrix on the truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: DMatrix<Complex64>,
}

/// Tolerances used by [`DensityMatrix::validate`].
#[derive(Debug, Clone, Copy)]
pub struct StateTolerance {
    pub trace: f64,
    pub trace_imag: f64,
    pub hermitian: f64,
    pub min_eigenvalue: f64,
}

impl Default for StateTolerance {
    fn default() -> Self {
        Self {
            trace: 1e-9,
            trace_imag: 1e-12,
            hermitian: 1e-12,
            min_eigenvalue: -1e-9,
        }
    }
}

impl DensityMatrix {
    /// Wrap a matrix and check it against the default tolerances.
    pub fn new(data: DMatrix<Complex64>) -> Result<Self> {
        let rho = Self::new_unchecked(data)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Wrap a square matrix without validating the state conditions.
    pub fn new_unchecked(data: DMatrix<Complex64>) -> Result<Self> {
        if !data.is_square() || data.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "density matrix must be square, got {}×{}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { data })
    }

    /// Projector onto the basis state `|q, n⟩`.
    pub fn basis(n_fock: usize, qubit_excited: bool, fock: usize) -> Result<Self> {
        check_n_fock(n_fock)?;
        if fock >= n_fock {
            return Err(Error::Dimension(format!(
                "Fock index {fock} outside truncation {n_fock}"
            )));
        }
        let dim = 2 * n_fock;
        let k = basis_index(n_fock, qubit_excited, fock);
        let mut m = DMatrix::zeros(dim, dim);
        m[(k, k)] = one();
        Ok(Self { data: m })
    }

    /// `|g, 0⟩⟨g, 0|`.
    pub fn ground(n_fock: usize) -> Result<Self> {
        Self::basis(n_fock, false, 0)
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) state vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm <= 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let n = psi.len();
        let m = DMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / norm);
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    /// Replace the state by `(ρ + ρ†)/2`.
    pub fn hermitize(&mut self) {
        let adj = self.data.adjoint();
        self.data = (&self.data + adj) * Complex64::new(0.5, 0.0);
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.data)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(&StateTolerance::default())
    }

    /// Check trace normalization, Hermiticity and positivity.
    pub fn validate_with(&self, tol: &StateTolerance) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol.trace {
            return Err(Error::InvalidState(format!("trace {} differs from 1", tr.re)));
        }
        if tr.im.abs() > tol.trace_imag {
            return Err(Error::InvalidState(format!(
                "trace has imaginary part {:e}",
                tr.im
            )));
        }
        let herm = hermiticity_defect(&self.data);
        if herm > tol.hermitian {
            return Err(Error::InvalidState(format!(
                "not Hermitian: max |ρ − ρ†| = {herm:e}"
            )));
        }
        let min_eig = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min_eig < tol.min_eigenvalue {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "state dimensions differ: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        let diff = &self.data - &other.data;
        Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|v| v.abs()).sum::<f64>())
    }
}

fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut eig: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    eig
}

/// `Tr(ρ · op)`.
pub fn expectation(rho: &DensityMatrix, op: &OperatorMatrix) -> Result<Complex64> {
    if rho.dim() != op.dim() {
        return Err(Error::Dimension(format!(
            "state dimension {} does not match operator dimension {}",
            rho.dim(),
            op.dim()
        )));
    }
    Ok(trace_of_product(rho.matrix(), op.matrix()))
}

/// `Tr(A·B)` without forming the product.
pub(crate) fn trace_of_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}
