//! Linear matrix pencils `A = a₁⊗x₁ + … + aₙ⊗xₙ` and their covariance maps.

mod covariance;
mod format;
mod matrix;

pub use covariance::CovarianceMap;
pub use format::{parse_pencil, pencil_to_json};
pub use matrix::{hermitian_deviation, ComplexMatrix, HermitianMatrix, MatrixError, HERMITIAN_TOL};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PencilError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("a pencil needs at least one coefficient")]
    NoCoefficients,
    #[error("coefficient {index} has dimension {actual}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("mean has dimension {actual}, expected {expected}")]
    MeanDimensionMismatch { expected: usize, actual: usize },
    #[error("all coefficients vanish; use LinearPencil::zero for the zero pencil")]
    AllZero,
    #[error("operand has dimension {actual}, pencil has dimension {expected}")]
    OperandDimension { expected: usize, actual: usize },
    #[error("parse error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid field `{path}`: {message}")]
    Field { path: String, message: String },
}

/// A pencil with Hermitian coefficients and an optional Hermitian mean shift.
///
/// The mean `a₀` turns `A` into the affine pencil `a₀ + Σ aᵢ⊗xᵢ`; it only enters
/// through the evaluation point `b = iy·1 − a₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPencil {
    dim: usize,
    coeffs: Vec<HermitianMatrix>,
    mean: Option<HermitianMatrix>,
}

impl LinearPencil {
    pub fn new(coeffs: Vec<HermitianMatrix>) -> Result<Self, PencilError> {
        Self::with_mean(coeffs, None)
    }

    pub fn with_mean(
        coeffs: Vec<HermitianMatrix>,
        mean: Option<HermitianMatrix>,
    ) -> Result<Self, PencilError> {
        let pencil = Self::assemble(coeffs, mean)?;
        if pencil.coeffs.iter().all(HermitianMatrix::is_zero) {
            return Err(PencilError::AllZero);
        }
        Ok(pencil)
    }

    /// The zero pencil with `num_vars` vanishing `dim × dim` coefficients.
    pub fn zero(dim: usize, num_vars: usize) -> Self {
        assert!(dim > 0 && num_vars > 0, "zero pencil needs positive sizes");
        Self {
            dim,
            coeffs: vec![HermitianMatrix::zeros(dim); num_vars],
            mean: None,
        }
    }

    /// Builds from real-valued symmetric rows; convenient for fixtures.
    pub fn from_real_coeffs(coeffs: &[Vec<Vec<f64>>]) -> Result<Self, PencilError> {
        let hs = coeffs
            .iter()
            .map(|rows| {
                let m = ComplexMatrix::from_real_rows(rows)?;
                HermitianMatrix::try_from_matrix(m)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(hs)
    }

    /// Validation shared by all constructors; does not reject the zero pencil.
    pub(crate) fn assemble(
        coeffs: Vec<HermitianMatrix>,
        mean: Option<HermitianMatrix>,
    ) -> Result<Self, PencilError> {
        let first = coeffs.first().ok_or(PencilError::NoCoefficients)?;
        let dim = first.dim();
        for (index, c) in coeffs.iter().enumerate() {
            if c.dim() != dim {
                return Err(PencilError::DimensionMismatch {
                    index,
                    expected: dim,
                    actual: c.dim(),
                });
            }
        }
        if let Some(m) = &mean {
            if m.dim() != dim {
                return Err(PencilError::MeanDimensionMismatch {
                    expected: dim,
                    actual: m.dim(),
                });
            }
        }
        let mean = mean.filter(|m| !m.is_zero());
        Ok(Self { dim, coeffs, mean })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vars(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[HermitianMatrix] {
        &self.coeffs
    }

    /// The mean shift; `None` when absent or identically zero.
    pub fn mean(&self) -> Option<&HermitianMatrix> {
        self.mean.as_ref()
    }

    pub fn is_centered(&self) -> bool {
        self.mean.is_none()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(HermitianMatrix::is_zero)
    }

    pub fn covariance(&self) -> CovarianceMap<'_> {
        CovarianceMap::new(self)
    }

    /// `iy·1 − mean`, the evaluation point used for θ.
    pub fn imaginary_axis_point(&self, y: f64) -> ComplexMatrix {
        self.shifted_point(Complex64::new(0.0, y))
    }

    /// `z·1 − mean`.
    pub fn shifted_point(&self, z: Complex64) -> ComplexMatrix {
        let b = ComplexMatrix::scalar(self.dim, z);
        match &self.mean {
            Some(m) => &b - m.as_matrix(),
            None => b,
        }
    }

    pub(crate) fn coefficient_matrices(&self) -> Vec<&ComplexMatrix> {
        let mut out: Vec<&ComplexMatrix> = self.coeffs.iter().map(|c| c.as_matrix()).collect();
        if let Some(m) = &self.mean {
            out.push(m.as_matrix());
        }
        out
    }
}

/// A square pencil with arbitrary complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralPencil {
    dim: usize,
    coeffs: Vec<ComplexMatrix>,
}

impl GeneralPencil {
    pub fn new(coeffs: Vec<ComplexMatrix>) -> Result<Self, PencilError> {
        let first = coeffs.first().ok_or(PencilError::NoCoefficients)?;
        let dim = first.dim();
        for (index, c) in coeffs.iter().enumerate() {
            if c.dim() != dim {
                return Err(PencilError::DimensionMismatch {
                    index,
                    expected: dim,
                    actual: c.dim(),
                });
            }
        }
        Ok(Self { dim, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vars(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[ComplexMatrix] {
        &self.coeffs
    }
}

/// Either kind of pencil, as produced by the file loader.
#[derive(Debug, Clone, PartialEq)]
pub enum Pencil {
    Hermitian(LinearPencil),
    General(GeneralPencil),
}

impl Pencil {
    pub fn dim(&self) -> usize {
        match self {
            Pencil::Hermitian(p) => p.dim(),
            Pencil::General(p) => p.dim(),
        }
    }

    /// Coefficients (and the mean, if any) whose common zero pattern bounds the rank.
    pub fn coefficient_matrices(&self) -> Vec<&ComplexMatrix> {
        match self {
            Pencil::Hermitian(p) => p.coefficient_matrices(),
            Pencil::General(p) => p.coeffs.iter().collect(),
        }
    }
}

impl From<LinearPencil> for Pencil {
    fn from(p: LinearPencil) -> Self {
        Pencil::Hermitian(p)
    }
}

impl From<GeneralPencil> for Pencil {
    fn from(p: GeneralPencil) -> Self {
        Pencil::General(p)
    }
}

/// Embeds `A` into the selfadjoint `2N × 2N` pencil with blocks `[[0, aᵢ], [aᵢ*, 0]]`.
/// Its inner rank is twice that of `A`.
pub fn hermitize(p: &GeneralPencil) -> LinearPencil {
    let n = p.dim;
    let coeffs: Vec<HermitianMatrix> = p
        .coeffs
        .iter()
        .map(|a| {
            let block = ComplexMatrix::from_fn(2 * n, |i, j| match (i < n, j < n) {
                (true, false) => a[(i, j - n)],
                (false, true) => a[(j, i - n)].conj(),
                _ => Complex64::new(0.0, 0.0),
            });
            HermitianMatrix::from_unchecked(block)
        })
        .collect();
    LinearPencil::assemble(coeffs, None).expect("blocks share one dimension")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hermitize_scalar_cases() {
        let p = GeneralPencil::new(vec![ComplexMatrix::scalar(1, c(1.0, 0.0))]).unwrap();
        let h = hermitize(&p);
        let a = h.coeffs()[0].as_matrix();
        assert_eq!(a[(0, 1)], c(1.0, 0.0));
        assert_eq!(a[(1, 0)], c(1.0, 0.0));
        assert_eq!(a[(0, 0)], c(0.0, 0.0));

        let p = GeneralPencil::new(vec![ComplexMatrix::scalar(1, c(0.0, 1.0))]).unwrap();
        let a = hermitize(&p).coeffs()[0].as_matrix().clone();
        assert_eq!(a[(0, 1)], c(0.0, 1.0));
        assert_eq!(a[(1, 0)], c(0.0, -1.0));
    }

    #[test]
    fn rejects_mismatched_and_all_zero_coefficients() {
        let a = HermitianMatrix::identity(2);
        let b = HermitianMatrix::identity(3);
        assert!(matches!(
            LinearPencil::new(vec![a.clone(), b]),
            Err(PencilError::DimensionMismatch { index: 1, .. })
        ));
        assert_eq!(
            LinearPencil::new(vec![HermitianMatrix::zeros(2)]),
            Err(PencilError::AllZero)
        );
        assert!(LinearPencil::zero(2, 1).is_zero());
        assert_eq!(LinearPencil::new(vec![]), Err(PencilError::NoCoefficients));
    }

    #[test]
    fn zero_mean_is_dropped() {
        let p = LinearPencil::with_mean(
            vec![HermitianMatrix::identity(2)],
            Some(HermitianMatrix::zeros(2)),
        )
        .unwrap();
        assert!(p.is_centered());
    }

    #[test]
    fn shifted_point_subtracts_mean() {
        let mean = HermitianMatrix::try_from_matrix(
            ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0, -1.0]]).unwrap(),
        )
        .unwrap();
        let p = LinearPencil::with_mean(vec![HermitianMatrix::identity(2)], Some(mean)).unwrap();
        let b = p.imaginary_axis_point(0.5);
        assert_eq!(b[(0, 0)], c(-1.0, 0.5));
        assert_eq!(b[(0, 1)], c(-2.0, 0.0));
    }
}
