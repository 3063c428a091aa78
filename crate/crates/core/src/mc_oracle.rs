//! Random-matrix oracle: `S_d = a₀⊗1 + Σ aᵢ⊗Xᵢ` with independent GUE matrices `Xᵢ`
//! approximates `S` in distribution as `d → ∞`.

use std::fmt::Write as _;

use faer::MatRef;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::density::{stieltjes_density_with, DensityError, DensityGrid, DensityOptions, GridSpec};
use crate::pencil::LinearPencil;

/// Recorded in spectrum metadata; sample `k` uses stream `k` of the seeded generator.
pub const GENERATOR_NAME: &str = "ChaCha8Rng (rand_chacha 0.9), stream = sample index";

#[derive(Debug, Error, Clone)]
pub enum McError {
    #[error("invalid Monte-Carlo configuration: {0}")]
    InvalidConfig(String),
    #[error("spectrum is empty")]
    EmptySpectrum,
    #[error("symmetric eigensolver failed on sample {sample}")]
    Eigen { sample: usize },
    #[error(transparent)]
    Density(#[from] DensityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    #[serde(rename = "d")]
    pub matrix_dim: usize,
    pub samples: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(matrix_dim: usize, samples: usize, seed: u64) -> Result<Self, McError> {
        if matrix_dim < 2 {
            return Err(McError::InvalidConfig(format!("matrix dimension {matrix_dim} < 2")));
        }
        if samples < 1 {
            return Err(McError::InvalidConfig("need at least one sample".into()));
        }
        Ok(Self {
            matrix_dim,
            samples,
            seed,
        })
    }
}

/// GUE matrix (row-major) normalized to the semicircle on `[−2, 2]`:
/// off-diagonal `E|x_kl|² = 1/d`, diagonal real with variance `1/d`.
pub fn gue_matrix<R: Rng>(d: usize, rng: &mut R) -> Vec<Complex64> {
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    let diag_scale = (1.0 / d as f64).sqrt();
    let off_scale = (1.0 / (2.0 * d as f64)).sqrt();
    for k in 0..d {
        let x: f64 = rng.sample(StandardNormal);
        m[k * d + k] = Complex64::new(x * diag_scale, 0.0);
        for l in k + 1..d {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = Complex64::new(re * off_scale, im * off_scale);
            m[k * d + l] = z;
            m[l * d + k] = z.conj();
        }
    }
    m
}

fn sample_once(p: &LinearPencil, cfg: &McConfig, sample: usize) -> Result<Vec<f64>, McError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(sample as u64);
    let (n, d) = (p.dim(), cfg.matrix_dim);
    let size = n * d;
    let mut s = vec![Complex64::new(0.0, 0.0); size * size];
    // Entry ((i, k), (j, l)) sits at row i·d + k, column j·d + l.
    let mut accumulate = |a: &crate::pencil::ComplexMatrix, x: Option<&[Complex64]>| {
        for i in 0..n {
            for j in 0..n {
                let aij = a[(i, j)];
                if aij.re == 0.0 && aij.im == 0.0 {
                    continue;
                }
                for k in 0..d {
                    let row = (i * d + k) * size + j * d;
                    match x {
                        Some(x) => {
                            for l in 0..d {
                                s[row + l] += aij * x[k * d + l];
                            }
                        }
                        None => s[row + k] += aij,
                    }
                }
            }
        }
    };
    for a in p.coeffs() {
        let x = gue_matrix(d, &mut rng);
        accumulate(a.as_matrix(), Some(&x));
    }
    if let Some(m) = p.mean() {
        accumulate(m.as_matrix(), None);
    }
    MatRef::from_row_major_slice(&s, size, size)
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|_| McError::Eigen { sample })
}

/// Eigenvalues of `cfg.samples` independent draws of `S_d`, pooled and sorted.
/// Deterministic for a fixed seed.
pub fn sample_spectrum(p: &LinearPencil, cfg: &McConfig) -> Result<Vec<f64>, McError> {
    let cfg = McConfig::new(cfg.matrix_dim, cfg.samples, cfg.seed)?;
    let per_sample: Vec<Vec<f64>> = (0..cfg.samples)
        .into_par_iter()
        .map(|k| sample_once(p, &cfg, k))
        .collect::<Result<_, _>>()?;
    let mut all: Vec<f64> = per_sample.into_iter().flatten().collect();
    all.sort_by(f64::total_cmp);
    Ok(all)
}

/// `(1/n) Σ λ^{2k}` for `k = 1, 2, 3`.
pub fn empirical_even_moments(spectrum: &[f64]) -> [f64; 3] {
    let n = spectrum.len() as f64;
    let mut m = [0.0; 3];
    for &l in spectrum {
        let l2 = l * l;
        m[0] += l2;
        m[1] += l2 * l2;
        m[2] += l2 * l2 * l2;
    }
    m.map(|x| x / n)
}

/// Fraction of eigenvalues with `|λ| ≤ half_width`.
pub fn zero_window_fraction(spectrum: &[f64], half_width: f64) -> f64 {
    let inside = spectrum.iter().filter(|l| l.abs() <= half_width).count();
    inside as f64 / spectrum.len() as f64
}

/// Kolmogorov–Smirnov distance between the spectrum and the Stieltjes density of `p`.
///
/// The density at height `ε` is the law of `S` convolved with the Cauchy kernel of
/// width `ε`, so the empirical law is convolved with the same kernel before the
/// comparison. Both distribution functions are measured from `t_min`.
pub fn ks_distance(spectrum: &[f64], p: &LinearPencil, grid: &GridSpec) -> Result<f64, McError> {
    if spectrum.is_empty() {
        return Err(McError::EmptySpectrum);
    }
    let density = stieltjes_density_with(p, grid, DensityOptions::default());
    ks_distance_to_density(spectrum, &density)
}

/// [`ks_distance`] against precomputed density samples.
pub fn ks_distance_to_density(spectrum: &[f64], density: &DensityGrid) -> Result<f64, McError> {
    if spectrum.is_empty() {
        return Err(McError::EmptySpectrum);
    }
    let model = density.cumulative()?;
    let eps = density.eps_im;
    let t0 = density.t_values[0];
    let n = spectrum.len() as f64;
    let base: Vec<f64> = spectrum.iter().map(|&l| ((t0 - l) / eps).atan()).collect();
    let dist = density
        .t_values
        .par_iter()
        .zip(model.par_iter())
        .map(|(&t, &f)| {
            let smoothed: f64 = spectrum
                .iter()
                .zip(&base)
                .map(|(&l, &b)| ((t - l) / eps).atan() - b)
                .sum::<f64>()
                / (std::f64::consts::PI * n);
            (smoothed - f).abs()
        })
        .reduce(|| 0.0, f64::max);
    Ok(dist)
}

pub fn spectrum_csv(spectrum: &[f64]) -> String {
    let mut s = String::from("eigenvalue\n");
    for l in spectrum {
        writeln!(s, "{l:.16e}").expect("writing to a String cannot fail");
    }
    s
}

#[derive(Serialize)]
struct Metadata<'a> {
    seed: u64,
    d: usize,
    samples: usize,
    generator: &'a str,
    #[serde(rename = "N")]
    pencil_dim: usize,
    eigenvalues: usize,
}

pub fn metadata_json(cfg: &McConfig, pencil_dim: usize) -> String {
    serde_json::to_string_pretty(&Metadata {
        seed: cfg.seed,
        d: cfg.matrix_dim,
        samples: cfg.samples,
        generator: GENERATOR_NAME,
        pencil_dim,
        eigenvalues: cfg.samples * cfg.matrix_dim * pencil_dim,
    })
    .expect("metadata is serializable")
}
