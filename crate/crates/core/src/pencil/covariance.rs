use num_complex::Complex64;

use super::{ComplexMatrix, HermitianMatrix, LinearPencil, PencilError};

/// The completely positive map `η(b) = Σ aᵢ b aᵢ` of a pencil.
#[derive(Debug, Clone)]
pub struct CovarianceMap<'a> {
    source: &'a LinearPencil,
    norm_eta: f64,
}

impl<'a> CovarianceMap<'a> {
    pub fn new(source: &'a LinearPencil) -> Self {
        let mut map = Self {
            source,
            norm_eta: 0.0,
        };
        // A positive map attains its norm at the identity.
        map.norm_eta = map.eta_of_identity().op_norm();
        map
    }

    pub fn source(&self) -> &'a LinearPencil {
        self.source
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    /// `‖η‖ = ‖η(1)‖`.
    pub fn norm(&self) -> f64 {
        self.norm_eta
    }

    /// `η(1) = Σ aᵢ²`.
    pub fn eta_of_identity(&self) -> HermitianMatrix {
        let n = self.dim();
        let mut acc = ComplexMatrix::zeros(n);
        for a in self.source.coeffs() {
            let a = a.as_matrix();
            acc.add_assign_scaled(&a.matmul(a), Complex64::new(1.0, 0.0));
        }
        acc.real_part()
    }

    pub fn apply(&self, b: &ComplexMatrix) -> Result<ComplexMatrix, PencilError> {
        if b.dim() != self.dim() {
            return Err(PencilError::OperandDimension {
                expected: self.dim(),
                actual: b.dim(),
            });
        }
        let mut out = ComplexMatrix::zeros(self.dim());
        let mut scratch = [ComplexMatrix::zeros(self.dim()), ComplexMatrix::zeros(self.dim())];
        self.apply_into(b, &mut out, &mut scratch);
        Ok(out)
    }

    /// `out = η(b)`; allocation-free form used in solver loops.
    pub fn apply_into(
        &self,
        b: &ComplexMatrix,
        out: &mut ComplexMatrix,
        scratch: &mut [ComplexMatrix; 2],
    ) {
        debug_assert_eq!(b.dim(), self.dim());
        for z in out.data_mut() {
            *z = Complex64::new(0.0, 0.0);
        }
        let [left, full] = scratch;
        for a in self.source.coeffs() {
            let a = a.as_matrix();
            if a.is_zero() {
                continue;
            }
            a.matmul_into(b, left);
            left.matmul_into(a, full);
            for (o, v) in out.data_mut().iter_mut().zip(full.as_slice()) {
                *o += v;
            }
        }
    }

    pub fn apply_hermitian(&self, b: &HermitianMatrix) -> HermitianMatrix {
        let out = self.apply(b.as_matrix()).expect("dimension checked by pencil");
        out.real_part()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_coefficient_is_identity_map() {
        let p = LinearPencil::new(vec![HermitianMatrix::identity(3)]).unwrap();
        let eta = p.covariance();
        let b = ComplexMatrix::from_fn(3, |i, j| Complex64::new(i as f64, j as f64 - 1.0));
        assert_eq!(eta.apply(&b).unwrap(), b);
        assert!((eta.norm() - 1.0).abs() < 1e-15);
        assert!(eta.apply(&ComplexMatrix::zeros(3)).unwrap().is_zero());
    }

    #[test]
    fn zero_pencil_has_zero_norm() {
        let p = LinearPencil::zero(2, 3);
        assert_eq!(p.covariance().norm(), 0.0);
    }

    #[test]
    fn operand_dimension_is_checked() {
        let p = LinearPencil::new(vec![HermitianMatrix::identity(2)]).unwrap();
        assert!(matches!(
            p.covariance().apply(&ComplexMatrix::zeros(3)),
            Err(PencilError::OperandDimension { expected: 2, actual: 3 })
        ));
    }
}
