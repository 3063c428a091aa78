//! Pencils shared by the integration tests, built in code independently of `data/`.
#![allow(dead_code)]

use ncrank_core::pencil::{ComplexMatrix, HermitianMatrix, LinearPencil};
use ncrank_core::Complex64;
use rand::Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn herm(rows: &[Vec<Complex64>]) -> HermitianMatrix {
    HermitianMatrix::try_from_matrix(ComplexMatrix::from_rows(rows).unwrap()).unwrap()
}

pub fn real_herm(rows: &[Vec<f64>]) -> HermitianMatrix {
    HermitianMatrix::try_from_matrix(ComplexMatrix::from_real_rows(rows).unwrap()).unwrap()
}

/// `i` times a real antisymmetric matrix.
fn i_antisymmetric(rows: &[Vec<f64>]) -> HermitianMatrix {
    let rows: Vec<Vec<Complex64>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| c(0.0, x)).collect())
        .collect();
    herm(&rows)
}

/// The 3×3 full pencil `i·[[0, 2x₁−x₃, x₂], [−2x₁+x₃, 0, x₃], [−x₂, −x₃, 0]]`.
pub fn full3() -> LinearPencil {
    LinearPencil::new(vec![
        i_antisymmetric(&[vec![0.0, 2.0, 0.0], vec![-2.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]]),
        i_antisymmetric(&[vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]]),
        i_antisymmetric(&[vec![0.0, -1.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, -1.0, 0.0]]),
    ])
    .unwrap()
}

fn arrow(last: [f64; 4], corner: f64, d: [f64; 4]) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; 5]; 5];
    for k in 0..4 {
        m[k][4] = last[k];
        m[4][k] = last[k];
        m[k][k] = d[k];
    }
    m[4][4] = corner;
    m
}

/// The 5×5 pencil with a 4×4 zero block; `p1` and `p2` perturb the
/// `(1,1)` entry of the first and the `(2,2)` entry of the second coefficient.
pub fn arrow_pencil(p1: f64, p2: f64) -> LinearPencil {
    LinearPencil::new(vec![
        real_herm(&arrow([1.0, -4.0, -10.0, -2.0], -1.0, [p1, 0.0, 0.0, 0.0])),
        real_herm(&arrow([7.0, -4.0, 7.0, -6.0], -7.0, [0.0, p2, 0.0, 0.0])),
    ])
    .unwrap()
}

pub fn a0() -> LinearPencil {
    arrow_pencil(0.0, 0.0)
}

pub fn a1() -> LinearPencil {
    arrow_pencil(0.1, 0.0)
}

pub fn a2() -> LinearPencil {
    arrow_pencil(0.1, 0.001)
}

/// Three-variable pencil whose covariance is
/// `b ↦ [[b₃₃ + t b₁₁, 0, b₃₁], [0, b₃₃, b₃₂], [b₁₃, b₂₃, b₁₁ + b₂₂]]`.
pub fn eta_t_pencil(t: f64) -> LinearPencil {
    LinearPencil::new(vec![
        real_herm(&[vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]),
        real_herm(&[vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]),
        real_herm(&[vec![t.sqrt(), 0.0, 0.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]]),
    ])
    .unwrap()
}

pub fn semicircle() -> LinearPencil {
    LinearPencil::new(vec![HermitianMatrix::identity(1)]).unwrap()
}

/// Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng>(n: usize, scale: f64, rng: &mut R) -> HermitianMatrix {
    let m = ComplexMatrix::from_fn(n, |_, _| {
        c(rng.random_range(-1.0..1.0) * scale, rng.random_range(-1.0..1.0) * scale)
    });
    m.real_part()
}

pub fn random_matrix<R: Rng>(n: usize, scale: f64, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, |_, _| {
        c(rng.random_range(-1.0..1.0) * scale, rng.random_range(-1.0..1.0) * scale)
    })
}

/// `X X* + floor·1`, positive definite with smallest eigenvalue ≥ `floor`.
pub fn random_positive<R: Rng>(n: usize, scale: f64, floor: f64, rng: &mut R) -> ComplexMatrix {
    let x = random_matrix(n, scale, rng);
    let mut m = x.matmul(&x.adjoint());
    m.add_assign_scaled(&ComplexMatrix::identity(n), c(floor, 0.0));
    m.real_part().into_matrix()
}

/// Hermitian pencil with integer entries in `[−3, 3]`.
pub fn random_integer_pencil<R: Rng>(n: usize, vars: usize, rng: &mut R) -> LinearPencil {
    loop {
        let coeffs: Vec<HermitianMatrix> = (0..vars)
            .map(|_| {
                let mut m = ComplexMatrix::zeros(n);
                for i in 0..n {
                    m[(i, i)] = c(rng.random_range(-3..=3) as f64, 0.0);
                    for j in i + 1..n {
                        let z = c(rng.random_range(-3..=3) as f64, rng.random_range(-3..=3) as f64);
                        m[(i, j)] = z;
                        m[(j, i)] = z.conj();
                    }
                }
                HermitianMatrix::try_from_matrix(m).unwrap()
            })
            .collect();
        if let Ok(p) = LinearPencil::new(coeffs) {
            return p;
        }
    }
}

/// `X + iY` with `X` Hermitian and `Y ≥ floor·1`.
pub fn random_upper_point<R: Rng>(n: usize, floor: f64, rng: &mut R) -> ComplexMatrix {
    let x = random_hermitian(n, 2.0, rng).into_matrix();
    let y = random_positive(n, 0.7, floor, rng);
    &x + &y.scale(c(0.0, 1.0))
}
