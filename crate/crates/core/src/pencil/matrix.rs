//! Dense square complex matrices and their Hermitian restriction.
//!
//! Storage is row-major. Sizes in this crate are small (the pencil dimension
//! `N`), so everything is done in place on a flat `Vec<Complex64>`; only the
//! Hermitian eigenvalue problem is handed to `faer`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use faer::MatRef;
use num_complex::Complex64;
use thiserror::Error;

/// Relative tolerance used when classifying a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix dimension must be positive")]
    EmptyMatrix,
    #[error("expected {expected} entries for a {dim}x{dim} matrix, got {actual}")]
    WrongEntryCount {
        dim: usize,
        expected: usize,
        actual: usize,
    },
    #[error("row {row} has {actual} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is singular to working precision (pivot {pivot:e} at column {col})")]
    Singular { col: usize, pivot: f64 },
    #[error("matrix is not Hermitian: max |M - M*| = {deviation:e} exceeds tolerance {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },
    #[error("eigenvalue computation failed to converge")]
    EigenFailure,
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for row in self.data.chunks(self.dim) {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting empty or non-finite input.
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self, MatrixError> {
        if dim == 0 {
            return Err(MatrixError::EmptyMatrix);
        }
        if data.len() != dim * dim {
            return Err(MatrixError::WrongEntryCount {
                dim,
                expected: dim * dim,
                actual: data.len(),
            });
        }
        if let Some(idx) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(MatrixError::NonFinite {
                row: idx / dim,
                col: idx % dim,
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, MatrixError> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(MatrixError::RaggedRow {
                    row: i,
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    /// Real-valued convenience constructor, mostly for tests and fixtures.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        let data = (0..dim * dim).map(|k| f(k / dim, k % dim)).collect();
        Self { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, Complex64::new(1.0, 0.0))
    }

    /// `z * 1`.
    pub fn scalar(dim: usize, z: Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = z;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks(self.dim)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| self.data[j * n + i].conj())
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * z).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// `tr_N(M) = Tr(M) / N`, the normalized trace.
    pub fn normalized_trace(&self) -> Complex64 {
        self.trace() / self.dim as f64
    }

    /// `(M + M*) / 2`, returned unchecked as a Hermitian matrix.
    pub fn real_part(&self) -> HermitianMatrix {
        let n = self.dim;
        let m = Self::from_fn(n, |i, j| (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5);
        HermitianMatrix { inner: m }
    }

    /// `(M - M*) / (2i)`.
    pub fn imag_part(&self) -> HermitianMatrix {
        let n = self.dim;
        let half_i = Complex64::new(0.0, -0.5);
        let m = Self::from_fn(n, |i, j| (self.data[i * n + j] - self.data[j * n + i].conj()) * half_i);
        HermitianMatrix { inner: m }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value, computed as the square root of the largest
    /// eigenvalue of `M* M`.
    pub fn op_norm(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let gram = HermitianMatrix::from_unchecked(self.adjoint().matmul(self));
        gram.max_eigenvalue().max(0.0).sqrt()
    }

    /// Decides `‖M‖ <= bound` while avoiding the eigenvalue solve whenever the
    /// Frobenius norm already settles it (`‖M‖_F / √N <= ‖M‖ <= ‖M‖_F`).
    /// Returns the decision together with the norm value when it was computed.
    pub fn op_norm_within(&self, bound: f64) -> (bool, Option<f64>) {
        let fro = self.frobenius_norm();
        if fro <= bound {
            return (true, None);
        }
        if fro / (self.dim as f64).sqrt() > bound {
            return (false, None);
        }
        let exact = self.op_norm();
        (exact <= bound, Some(exact))
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        let mut out = Self::zeros(self.dim);
        self.matmul_into(rhs, &mut out);
        out
    }

    /// `out = self * rhs`; `out` must not alias either operand.
    pub fn matmul_into(&self, rhs: &Self, out: &mut Self) {
        let n = self.dim;
        assert_eq!(n, rhs.dim);
        assert_eq!(n, out.dim);
        for z in out.data.iter_mut() {
            *z = Complex64::new(0.0, 0.0);
        }
        for i in 0..n {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (o, r) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * r;
                }
            }
        }
    }

    pub fn add_assign_scaled(&mut self, other: &Self, z: Complex64) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * z;
        }
    }

    /// Inverse via LU factorization with partial pivoting.
    pub fn inverse(&self) -> Result<Self, MatrixError> {
        let n = self.dim;
        let mut lu = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);

        for col in 0..n {
            let (pivot_row, pivot_abs) = (col..n)
                .map(|r| (r, lu[r * n + col].norm()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot_abs > scale * f64::EPSILON * 1e-3) {
                return Err(MatrixError::Singular {
                    col,
                    pivot: pivot_abs,
                });
            }
            if pivot_row != col {
                for j in 0..n {
                    lu.swap(col * n + j, pivot_row * n + j);
                }
                perm.swap(col, pivot_row);
            }
            let pivot = lu[col * n + col];
            for r in col + 1..n {
                let factor = lu[r * n + col] / pivot;
                lu[r * n + col] = factor;
                if factor.re == 0.0 && factor.im == 0.0 {
                    continue;
                }
                for j in col + 1..n {
                    let u = lu[col * n + j];
                    lu[r * n + j] -= factor * u;
                }
            }
        }

        // Solve L U X = P for each column of the identity.
        let mut inv = vec![Complex64::new(0.0, 0.0); n * n];
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            for i in 0..n {
                let mut s = if perm[i] == c {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                for k in 0..i {
                    s -= lu[i * n + k] * x[k];
                }
                x[i] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[i];
                for k in i + 1..n {
                    s -= lu[i * n + k] * x[k];
                }
                x[i] = s / lu[i * n + i];
            }
            for i in 0..n {
                inv[i * n + c] = x[i];
            }
        }
        Ok(Self { dim: n, data: inv })
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.dim, rhs.dim);
        Self::from_fn(n * m, |i, j| {
            self.data[(i / m) * n + j / m] * rhs.data[(i % m) * m + j % m]
        })
    }

    pub(crate) fn as_faer(&self) -> MatRef<'_, Complex64> {
        MatRef::from_row_major_slice(&self.data, self.dim, self.dim)
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(i < self.dim && j < self.dim, "index ({i}, {j}) out of range");
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        assert!(i < self.dim && j < self.dim, "index ({i}, {j}) out of range");
        &mut self.data[i * self.dim + j]
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// A complex matrix equal to its conjugate transpose.
///
/// Construction through [`HermitianMatrix::try_from_matrix`] accepts inputs
/// within `1e-12 * max(1, max|entry|)` of Hermitian and stores the exact
/// symmetrization `(M + M*) / 2`.
#[derive(Clone, PartialEq)]
pub struct HermitianMatrix {
    inner: ComplexMatrix,
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hermitian{:?}", self.inner)
    }
}

impl HermitianMatrix {
    pub fn try_from_matrix(m: ComplexMatrix) -> Result<Self, MatrixError> {
        let deviation = hermitian_deviation(&m);
        let tolerance = HERMITIAN_TOL * m.max_abs().max(1.0);
        if deviation > tolerance {
            return Err(MatrixError::NotHermitian {
                deviation,
                tolerance,
            });
        }
        Ok(m.real_part())
    }

    pub(crate) fn from_unchecked(m: ComplexMatrix) -> Self {
        Self { inner: m }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            inner: ComplexMatrix::zeros(dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            inner: ComplexMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.inner
    }

    pub fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    /// Eigenvalues in nondecreasing order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, MatrixError> {
        self.inner
            .as_faer()
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|_| MatrixError::EigenFailure)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self.eigenvalues() {
            Ok(ev) => ev[0],
            Err(_) => f64::NAN,
        }
    }

    pub fn max_eigenvalue(&self) -> f64 {
        match self.eigenvalues() {
            Ok(ev) => ev[ev.len() - 1],
            Err(_) => f64::NAN,
        }
    }

    /// `max |λ|`, the operator norm of a Hermitian matrix.
    pub fn op_norm(&self) -> f64 {
        match self.eigenvalues() {
            Ok(ev) => ev.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
            Err(_) => f64::NAN,
        }
    }
}

impl AsRef<ComplexMatrix> for HermitianMatrix {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.inner
    }
}

impl TryFrom<ComplexMatrix> for HermitianMatrix {
    type Error = MatrixError;
    fn try_from(m: ComplexMatrix) -> Result<Self, MatrixError> {
        Self::try_from_matrix(m)
    }
}

/// `max |M_ij - conj(M_ji)|`.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    let n = m.dim;
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m.data[i * n + j] - m.data[j * n + i].conj()).norm());
        }
    }
    dev
}
