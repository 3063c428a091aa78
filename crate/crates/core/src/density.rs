//! Spectral density of `S` on a real grid via Stieltjes inversion:
//! `ρ_ε(t) = −(1/π) Im tr_N(G((t + iε)·1 − mean))`.

use std::fmt::Write as _;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::cauchy_solver::{
    solve_from, EvaluationPoint, SolverConfig, SolverError, TerminationMode, DEFAULT_MAX_ITERATIONS,
};
use crate::pencil::{ComplexMatrix, CovarianceMap, LinearPencil};

/// Residual tolerance in units of the height above the axis.
const RELATIVE_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_EPS_IM: f64 = 1e-3;

#[derive(Debug, Error, Clone)]
pub enum DensityError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("density missing at {count} grid points (first at t = {first})")]
    MissingValues { count: usize, first: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub eps_im: f64,
}

impl GridSpec {
    pub fn new(t_min: f64, t_max: f64, points: usize, eps_im: f64) -> Result<Self, DensityError> {
        if !(t_min < t_max) || !t_min.is_finite() || !t_max.is_finite() {
            return Err(DensityError::InvalidGrid(format!("need t_min < t_max, got [{t_min}, {t_max}]")));
        }
        if points < 2 {
            return Err(DensityError::InvalidGrid(format!("need at least 2 points, got {points}")));
        }
        if !(eps_im > 0.0 && eps_im.is_finite()) {
            return Err(DensityError::InvalidGrid(format!("eps_im = {eps_im} must be positive")));
        }
        Ok(Self {
            t_min,
            t_max,
            points,
            eps_im,
        })
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = (self.t_max - self.t_min) / (self.points - 1) as f64;
        (0..self.points)
            .map(|k| if k + 1 == self.points { self.t_max } else { self.t_min + k as f64 * h })
            .collect()
    }
}

/// Densities on an ascending grid; `None` marks a failed solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub t_values: Vec<f64>,
    pub eps_im: f64,
    pub densities: Vec<Option<f64>>,
}

impl DensityGrid {
    pub fn missing(&self) -> usize {
        self.densities.iter().filter(|d| d.is_none()).count()
    }

    /// All densities, or an error naming the missing points.
    pub fn complete(&self) -> Result<Vec<f64>, DensityError> {
        if let Some(k) = self.densities.iter().position(Option::is_none) {
            return Err(DensityError::MissingValues {
                count: self.missing(),
                first: self.t_values[k],
            });
        }
        Ok(self.densities.iter().map(|d| d.expect("checked")).collect())
    }

    /// Trapezoidal running integral from `t_min`, starting at 0.
    pub fn cumulative(&self) -> Result<Vec<f64>, DensityError> {
        let d = self.complete()?;
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(d.len());
        out.push(0.0);
        for k in 1..d.len() {
            acc += 0.5 * (d[k] + d[k - 1]) * (self.t_values[k] - self.t_values[k - 1]);
            out.push(acc);
        }
        Ok(out)
    }

    /// Total trapezoidal mass over the grid.
    pub fn mass(&self) -> Result<f64, DensityError> {
        Ok(*self.cumulative()?.last().expect("grid has >= 2 points"))
    }

    /// CSV with header `t,density`; failed points are written as `NaN`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,density\n");
        for (t, d) in self.t_values.iter().zip(&self.densities) {
            let d = d.unwrap_or(f64::NAN);
            writeln!(s, "{t:.16e},{d:.16e}").expect("writing to a String cannot fail");
        }
        s
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DensityOptions {
    /// Seed each solve with its left neighbour's solution (sequential).
    pub warm_start: bool,
    pub max_iterations: u64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self {
            warm_start: true,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

fn density_at(
    eta: &CovarianceMap<'_>,
    t: f64,
    eps_im: f64,
    start: Option<&ComplexMatrix>,
    max_iterations: u64,
) -> Result<(f64, ComplexMatrix), SolverError> {
    let p = eta.source();
    let ep = EvaluationPoint::new(p.shifted_point(Complex64::new(t, eps_im)))?;
    // Stop at ‖Δ‖ ≤ eps_im·1e-4, i.e. σ = 1e-4 and ‖w̃ − w*‖ ≤ 1e-4·‖Im(b)⁻¹‖/(1 − 1e-4).
    let sigma = RELATIVE_TOLERANCE * eps_im * ep.im_inv_norm();
    let delta = ep.im_inv_norm() * sigma / (1.0 - sigma);
    let cfg = SolverConfig::with_default_radius(&ep, eta, delta, TerminationMode::APosterioriResidual)?
    .with_max_iterations(max_iterations);
    let start = start.cloned().unwrap_or_else(|| cfg.start_point(p.dim()));
    let out = solve_from(&ep, eta, &cfg, &start)?;
    let density = -out.w.normalized_trace().im / std::f64::consts::PI;
    Ok((density, out.w))
}

pub fn stieltjes_density(
    p: &LinearPencil,
    t_min: f64,
    t_max: f64,
    points: usize,
    eps_im: f64,
) -> Result<DensityGrid, DensityError> {
    let spec = GridSpec::new(t_min, t_max, points, eps_im)?;
    Ok(stieltjes_density_with(p, &spec, DensityOptions::default()))
}

pub fn stieltjes_density_with(p: &LinearPencil, spec: &GridSpec, opts: DensityOptions) -> DensityGrid {
    let eta = p.covariance();
    let t_values = spec.nodes();
    let densities = if opts.warm_start {
        let mut start: Option<ComplexMatrix> = None;
        t_values
            .iter()
            .map(|&t| match density_at(&eta, t, spec.eps_im, start.as_ref(), opts.max_iterations) {
                Ok((d, w)) => {
                    start = Some(w);
                    Some(d)
                }
                Err(e) => {
                    warn!("density at t = {t}: {e}");
                    None
                }
            })
            .collect()
    } else {
        t_values
            .par_iter()
            .map(|&t| match density_at(&eta, t, spec.eps_im, None, opts.max_iterations) {
                Ok((d, _)) => Some(d),
                Err(e) => {
                    warn!("density at t = {t}: {e}");
                    None
                }
            })
            .collect()
    };
    DensityGrid {
        t_values,
        eps_im: spec.eps_im,
        densities,
    }
}
