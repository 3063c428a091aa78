//! Inner rank of linear matrix pencils.
//!
//! A Hermitian pencil `A = a₁⊗x₁ + … + aₙ⊗xₙ` is evaluated on a tuple of free
//! semicircular elements; the resulting operator-valued semicircular element has
//! a spectral measure whose mass at zero is `1 − rank(A)/N`. This crate solves the
//! matrix-valued fixed-point equation for its Cauchy transform with certified
//! error bounds and turns those solutions into rank certificates.

pub mod atom_rank;
pub mod cauchy_solver;
pub mod density;
pub mod mc_oracle;
pub mod pencil;

pub use num_complex::Complex64;
