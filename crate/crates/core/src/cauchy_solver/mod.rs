//! Picard iteration for `w = (b − η(w))⁻¹` on the lower half-plane of `M_N(ℂ)`.
//!
//! For `b` with `Im(b) > 0` the map `h_b(w) = (b − η(w))⁻¹` is a strict
//! contraction of the ball `D_r = {‖w‖ < r}` (any `r > ‖Im(b)⁻¹‖`) in a
//! hyperbolic-type metric, with explicit constants
//!
//! ```text
//! m_r = ‖b‖ + r‖η‖
//! ε   = min{ r − ‖Im(b)⁻¹‖, 1/(m_r² ‖Im(b)⁻¹‖) }
//! q   = (1 + ε/(2r))⁻¹
//! ```
//!
//! Three stopping rules are offered; each yields a certified bound on the
//! distance of the returned iterate to the unique fixed point.

mod scalar;

pub use scalar::{
    scalar_closed_form_iterate, scalar_closed_form_residual, scalar_closed_form_step,
    scalar_fixed_point, scalar_residual_termination, scalar_step_termination,
};

use std::fmt;
use std::str::FromStr;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pencil::{ComplexMatrix, CovarianceMap, MatrixError};

/// Beyond this `‖Im(b)⁻¹‖` the inversions in each step become ill-conditioned.
const CONDITIONING_WARNING: f64 = 1e8;

#[derive(Debug, Error, Clone)]
pub enum SolverError {
    #[error("Im(b) is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotInUpperHalfPlane { min_eigenvalue: f64 },
    #[error("operand has dimension {actual}, expected {expected}")]
    Dimension { expected: usize, actual: usize },
    #[error("radius r = {radius} must exceed ‖Im(b)⁻¹‖ = {im_inv_norm}")]
    RadiusTooSmall { radius: f64, im_inv_norm: f64 },
    #[error("invalid solver parameter: {0}")]
    InvalidParameter(String),
    #[error("precondition violated, matrix not invertible: {0}")]
    Singular(MatrixError),
    #[error("a priori iteration count exceeds the 64-bit range (estimate {estimate:e})")]
    CountOverflow { estimate: f64 },
    #[error("non-finite iterate at step {iteration}")]
    NumericalInstability { iteration: u64 },
    #[error("no convergence within {} iterations (residual {:e})", .0.iterations, .0.residual_norm)]
    IterationLimit(Box<SolveOutcome>),
}

impl SolverError {
    /// The partial outcome carried by an iteration-limit failure.
    pub fn partial_outcome(&self) -> Option<&SolveOutcome> {
        match self {
            SolverError::IterationLimit(o) => Some(o),
            _ => None,
        }
    }
}

/// A point `b` of the matrix upper half-plane together with its norms.
#[derive(Debug, Clone)]
pub struct EvaluationPoint {
    b: ComplexMatrix,
    im_inv_norm: f64,
    b_norm: f64,
}

impl EvaluationPoint {
    pub fn new(b: ComplexMatrix) -> Result<Self, SolverError> {
        let min_eigenvalue = b.imag_part().min_eigenvalue();
        if !(min_eigenvalue > 0.0) {
            return Err(SolverError::NotInUpperHalfPlane { min_eigenvalue });
        }
        let im_inv_norm = 1.0 / min_eigenvalue;
        if im_inv_norm > CONDITIONING_WARNING {
            warn!("‖Im(b)⁻¹‖ = {im_inv_norm:e}; inversions in the iteration are ill-conditioned");
        }
        let b_norm = b.op_norm();
        Ok(Self {
            b,
            im_inv_norm,
            b_norm,
        })
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    /// `‖Im(b)⁻¹‖`, which also bounds the norm of the solution.
    pub fn im_inv_norm(&self) -> f64 {
        self.im_inv_norm
    }

    pub fn b_norm(&self) -> f64 {
        self.b_norm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TerminationMode {
    /// Run the a priori iteration count.
    APriori,
    /// Stop once `‖Δ_b(w)‖` certifies the target error.
    #[default]
    APosterioriResidual,
    /// Stop once consecutive iterates are close enough.
    APosterioriStep,
}

impl fmt::Display for TerminationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminationMode::APriori => "apriori",
            TerminationMode::APosterioriResidual => "residual",
            TerminationMode::APosterioriStep => "step",
        })
    }
}

impl FromStr for TerminationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "apriori" => Ok(TerminationMode::APriori),
            "residual" => Ok(TerminationMode::APosterioriResidual),
            "step" => Ok(TerminationMode::APosterioriStep),
            other => Err(format!("unknown termination mode `{other}` (apriori|residual|step)")),
        }
    }
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ResidualCondition,
    StepCondition,
    APrioriCount,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub radius_r: f64,
    pub epsilon_dom: f64,
    pub contraction_q: f64,
    pub max_iterations: u64,
    pub target_delta: f64,
    pub termination_mode: TerminationMode,
    /// The iteration starts from `−iω·1`, so its first iterate is `h_b(−iω·1)`.
    pub start_omega: f64,
}

pub const DEFAULT_MAX_ITERATIONS: u64 = 100_000_000;

impl SolverConfig {
    pub fn new(
        ep: &EvaluationPoint,
        eta: &CovarianceMap<'_>,
        radius_r: f64,
        target_delta: f64,
        termination_mode: TerminationMode,
    ) -> Result<Self, SolverError> {
        if !(radius_r > ep.im_inv_norm) || !radius_r.is_finite() {
            return Err(SolverError::RadiusTooSmall {
                radius: radius_r,
                im_inv_norm: ep.im_inv_norm,
            });
        }
        if !(target_delta > 0.0) || !target_delta.is_finite() {
            return Err(SolverError::InvalidParameter(format!(
                "target delta must be positive, got {target_delta}"
            )));
        }
        let (epsilon_dom, contraction_q) = contraction_constants(ep, eta.norm(), radius_r);
        Ok(Self {
            radius_r,
            epsilon_dom,
            contraction_q,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            target_delta,
            termination_mode,
            start_omega: 1.0,
        })
    }

    /// Uses [`default_radius`] for the starting point `−i·1`.
    pub fn with_default_radius(
        ep: &EvaluationPoint,
        eta: &CovarianceMap<'_>,
        target_delta: f64,
        termination_mode: TerminationMode,
    ) -> Result<Self, SolverError> {
        Self::new(ep, eta, default_radius(ep, eta, 1.0), target_delta, termination_mode)
    }

    pub fn with_max_iterations(mut self, max_iterations: u64) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_start_omega(mut self, omega: f64) -> Self {
        self.start_omega = omega;
        self
    }

    /// `σ = (δ/‖Im(b)⁻¹‖) / (1 + δ/‖Im(b)⁻¹‖)`.
    pub fn sigma(&self, ep: &EvaluationPoint) -> f64 {
        let s = self.target_delta / ep.im_inv_norm;
        s / (1.0 + s)
    }

    /// Residual level that certifies `target_delta`: `σ / ‖Im(b)⁻¹‖`.
    pub fn residual_threshold(&self, ep: &EvaluationPoint) -> f64 {
        self.sigma(ep) / ep.im_inv_norm
    }

    /// Step level that certifies `target_delta`: `ε²δ / (4r²‖η‖‖Im(b)⁻¹‖²)`.
    pub fn step_threshold(&self, ep: &EvaluationPoint, eta_norm: f64) -> f64 {
        let ii = ep.im_inv_norm;
        let r = self.radius_r;
        self.epsilon_dom.powi(2) * self.target_delta / (4.0 * r * r * eta_norm * ii * ii)
    }

    pub fn start_point(&self, dim: usize) -> ComplexMatrix {
        ComplexMatrix::scalar(dim, Complex64::new(0.0, -self.start_omega))
    }
}

/// `k = 2r/ε` evaluated branch-wise, so that no quotient by a tiny `ε` occurs.
fn inverse_margin(ii: f64, m_r: f64, r: f64) -> f64 {
    (2.0 * r / (r - ii)).max(2.0 * r * m_r * m_r * ii)
}

/// Returns `(ε, q)` for radius `r`.
pub fn contraction_constants(ep: &EvaluationPoint, eta_norm: f64, r: f64) -> (f64, f64) {
    let ii = ep.im_inv_norm;
    let m_r = ep.b_norm + r * eta_norm;
    let eps = (r - ii).min(1.0 / (m_r * m_r * ii));
    let k = inverse_margin(ii, m_r, r);
    (eps, k / (k + 1.0))
}

/// `r = 1/β + (1/√2 − 1/2)β`, the closed-form radius for `b = iβ`, `‖η‖ = 1`.
pub fn explicit_radius(beta: f64) -> f64 {
    1.0 / beta + (std::f64::consts::FRAC_1_SQRT_2 - 0.5) * beta
}

/// Matrix analogue of [`explicit_radius`]: `‖Im(b)⁻¹‖ + (1/√2 − 1/2)/(‖Im(b)⁻¹‖·‖η‖)`,
/// enlarged when needed so that the start point `−iω·1` lies inside `D_r`.
pub fn default_radius(ep: &EvaluationPoint, eta: &CovarianceMap<'_>, omega: f64) -> f64 {
    let ii = ep.im_inv_norm;
    let eta_norm = if eta.norm() > 0.0 { eta.norm() } else { 1.0 };
    let margin = (std::f64::consts::FRAC_1_SQRT_2 - 0.5) / (ii * eta_norm);
    let r = ii + margin;
    if r > omega {
        r
    } else {
        omega + margin
    }
}

/// Root `r > 1/β` of `(β + r)²(r − 1/β) = β`, which minimizes the a priori
/// count for `b = iβ`, `‖η‖ = 1`.
pub fn optimal_radius(beta: f64) -> f64 {
    assert!(beta > 0.0 && beta.is_finite(), "beta must be positive");
    let f = |r: f64| (beta + r).powi(2) * (r - 1.0 / beta) - beta;
    let df = |r: f64| 2.0 * (beta + r) * (r - 1.0 / beta) + (beta + r).powi(2);
    // f is increasing and convex on (1/β, ∞) with f(1/β) < 0 < f(1/β + β).
    let (mut lo, mut hi) = (1.0 / beta, 1.0 / beta + beta);
    let mut r = hi;
    for _ in 0..200 {
        let fr = f(r);
        if fr > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let mut next = r - fr / df(r);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - r).abs() <= 1e-15 * r;
        r = next;
        if done || hi - lo <= 1e-15 * hi {
            break;
        }
    }
    r
}

fn check_dim(ep: &EvaluationPoint, w: &ComplexMatrix) -> Result<(), SolverError> {
    if w.dim() != ep.dim() {
        return Err(SolverError::Dimension {
            expected: ep.dim(),
            actual: w.dim(),
        });
    }
    Ok(())
}

/// `h_b(w) = (b − η(w))⁻¹`.
pub fn apply_h(
    ep: &EvaluationPoint,
    eta: &CovarianceMap<'_>,
    w: &ComplexMatrix,
) -> Result<ComplexMatrix, SolverError> {
    check_dim(ep, w)?;
    let eta_w = eta.apply(w).map_err(|_| SolverError::Dimension {
        expected: eta.dim(),
        actual: w.dim(),
    })?;
    (ep.b() - &eta_w).inverse().map_err(SolverError::Singular)
}

/// `Δ_b(w) = b − w⁻¹ − η(w)`.
pub fn residual_matrix(
    ep: &EvaluationPoint,
    eta: &CovarianceMap<'_>,
    w: &ComplexMatrix,
) -> Result<ComplexMatrix, SolverError> {
    check_dim(ep, w)?;
    let w_inv = w.inverse().map_err(SolverError::Singular)?;
    let eta_w = eta.apply(w).map_err(|_| SolverError::Dimension {
        expected: eta.dim(),
        actual: w.dim(),
    })?;
    Ok(&(ep.b() - &w_inv) - &eta_w)
}

/// `‖Δ_b(w)‖`.
pub fn residual_delta(
    ep: &EvaluationPoint,
    eta: &CovarianceMap<'_>,
    w: &ComplexMatrix,
) -> Result<f64, SolverError> {
    Ok(residual_matrix(ep, eta, w)?.op_norm())
}

/// Minimal `n ≥ 1` with `(‖Im(b)⁻¹‖·2r/ε)² ‖η‖ ‖h_b(w₀) − w₀‖ qⁿ⁻¹ ≤ δ`,
/// evaluated in log space.
pub fn a_priori_iteration_count(
    ep: &EvaluationPoint,
    eta: &CovarianceMap<'_>,
    cfg: &SolverConfig,
    w0: &ComplexMatrix,
) -> Result<u64, SolverError> {
    let hw0 = apply_h(ep, eta, w0)?;
    let first_step = (&hw0 - w0).op_norm();
    a_priori_count_from_step(ep, eta.norm(), cfg, first_step)
}

fn a_priori_count_from_step(
    ep: &EvaluationPoint,
    eta_norm: f64,
    cfg: &SolverConfig,
    first_step: f64,
) -> Result<u64, SolverError> {
    let ii = ep.im_inv_norm;
    let r = cfg.radius_r;
    let k = inverse_margin(ii, ep.b_norm + r * eta_norm, r);
    let prefactor = (ii * k).powi(2) * eta_norm * first_step;
    if !(prefactor > cfg.target_delta) {
        return Ok(1);
    }
    let q = k / (k + 1.0);
    let estimate = 1.0 + (cfg.target_delta / prefactor).ln() / q.ln();
    let n = estimate.ceil();
    if !n.is_finite() || n >= u64::MAX as f64 {
        return Err(SolverError::CountOverflow { estimate });
    }
    Ok(n.max(1.0) as u64)
}

/// Fixed-point approximation with its certificate.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub w: ComplexMatrix,
    pub iterations: u64,
    /// `‖Δ_b(w)‖` at the returned `w`.
    pub residual_norm: f64,
    /// Bound on `‖w − w*‖`.
    pub certified_error: f64,
    pub terminated_by: Termination,
}

impl SolveOutcome {
    pub fn converged(&self) -> bool {
        self.terminated_by != Termination::IterationLimit
    }
}

/// One line of the per-iteration trace. Quantities not evaluated by the active
/// stopping rule are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: u64,
    pub residual: Option<f64>,
    pub step_norm: Option<f64>,
}

/// Solves from the configured start `−iω·1`.
pub fn solve_fixed_point(
    ep: &EvaluationPoint,
    eta: &CovarianceMap<'_>,
    cfg: &SolverConfig,
) -> Result<SolveOutcome, SolverError> {
    solve_from(ep, eta, cfg, &cfg.start_point(ep.dim()))
}

/// Solves from an arbitrary start `u₀` with `Im(u₀) ≤ 0`; the first iterate is `h_b(u₀)`.
pub fn solve_from(
    ep: &EvaluationPoint,
    eta: &CovarianceMap<'_>,
    cfg: &SolverConfig,
    start: &ComplexMatrix,
) -> Result<SolveOutcome, SolverError> {
    solve_traced(ep, eta, cfg, start, None)
}

struct Workspace {
    eta_out: ComplexMatrix,
    scratch: [ComplexMatrix; 2],
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            eta_out: ComplexMatrix::zeros(n),
            scratch: [ComplexMatrix::zeros(n), ComplexMatrix::zeros(n)],
        }
    }

    /// `b − η(w)`.
    fn shifted(&mut self, ep: &EvaluationPoint, eta: &CovarianceMap<'_>, w: &ComplexMatrix) -> ComplexMatrix {
        eta.apply_into(w, &mut self.eta_out, &mut self.scratch);
        ep.b() - &self.eta_out
    }
}

/// [`solve_from`] with an optional per-iteration trace sink.
///
/// Iterates are `u₀ = start`, `uₙ₊₁ = h_b(uₙ)`. At step `n ≥ 1` the residual
/// rule tests `Δ_b(uₙ)` and returns `uₙ`; the step rule tests `uₙ₊₁ − uₙ` and
/// returns `uₙ₊₁ = hⁿ(u₁)`; the a priori rule returns `hⁿ(u₁)` for the
/// a priori `n`. The reported iteration count is `n` in each case.
pub fn solve_traced(
    ep: &EvaluationPoint,
    eta: &CovarianceMap<'_>,
    cfg: &SolverConfig,
    start: &ComplexMatrix,
    mut sink: Option<&mut dyn FnMut(&TraceRecord)>,
) -> Result<SolveOutcome, SolverError> {
    check_dim(ep, start)?;
    let n_dim = ep.dim();
    let mut ws = Workspace::new(n_dim);
    let eta_norm = eta.norm();

    let mut mode = cfg.termination_mode;
    let mut a_priori_target = 0u64;
    let prev0 = start.clone();
    let mut u = ws.shifted(ep, eta, start).inverse().map_err(SolverError::Singular)?;
    if !u.is_finite() {
        return Err(SolverError::NumericalInstability { iteration: 1 });
    }
    if mode == TerminationMode::APriori {
        let hu = apply_h(ep, eta, &u)?;
        match a_priori_count_from_step(ep, eta_norm, cfg, (&hu - &u).op_norm()) {
            Ok(n) => a_priori_target = n,
            Err(SolverError::CountOverflow { estimate }) => {
                warn!("a priori count {estimate:e} overflows; switching to residual termination");
                mode = TerminationMode::APosterioriResidual;
            }
            Err(e) => return Err(e),
        }
    }

    let residual_threshold = cfg.residual_threshold(ep);
    let step_threshold = cfg.step_threshold(ep, eta_norm);
    let sigma = cfg.sigma(ep);
    // uₙ − uₙ₋₁, tracked by the recursion dₙ = uₙ₊₁ η(dₙ₋₁) uₙ to avoid cancellation.
    let mut diff = &u - &prev0;
    let mut n: u64 = 1;

    loop {
        let m = ws.shifted(ep, eta, &u);
        let next = m.inverse().map_err(SolverError::Singular)?;
        if !next.is_finite() {
            return Err(SolverError::NumericalInstability { iteration: n + 1 });
        }

        let want_residual = mode == TerminationMode::APosterioriResidual || sink.is_some();
        let want_step = mode == TerminationMode::APosterioriStep || sink.is_some();

        let residual = if want_residual {
            let u_inv = u.inverse().map_err(SolverError::Singular)?;
            Some(&m - &u_inv)
        } else {
            None
        };
        let step = if want_step {
            eta.apply_into(&diff, &mut ws.eta_out, &mut ws.scratch);
            let d = next.matmul(&ws.eta_out).matmul(&u);
            Some(d)
        } else {
            None
        };

        if let Some(sink) = sink.as_deref_mut() {
            sink(&TraceRecord {
                iteration: n,
                residual: residual.as_ref().map(ComplexMatrix::op_norm),
                step_norm: step.as_ref().map(ComplexMatrix::op_norm),
            });
        }

        match mode {
            TerminationMode::APosterioriResidual => {
                let delta = residual.as_ref().expect("residual evaluated in residual mode");
                if delta.op_norm_within(residual_threshold).0 {
                    let residual_norm = delta.op_norm();
                    return Ok(SolveOutcome {
                        w: u,
                        iterations: n,
                        residual_norm,
                        certified_error: ep.im_inv_norm.powi(2) * residual_norm / (1.0 - sigma),
                        terminated_by: Termination::ResidualCondition,
                    });
                }
            }
            TerminationMode::APosterioriStep => {
                let d = step.as_ref().expect("step evaluated in step mode");
                if d.op_norm_within(step_threshold).0 {
                    return finish(ep, eta, next, n, cfg.target_delta, Termination::StepCondition);
                }
            }
            TerminationMode::APriori => {
                if n >= a_priori_target {
                    return finish(ep, eta, next, n, cfg.target_delta, Termination::APrioriCount);
                }
            }
        }

        if n >= cfg.max_iterations {
            let residual_norm = residual_delta(ep, eta, &u).unwrap_or(f64::NAN);
            let certified_error = if residual_norm <= residual_threshold {
                ep.im_inv_norm.powi(2) * residual_norm / (1.0 - sigma)
            } else {
                f64::INFINITY
            };
            return Err(SolverError::IterationLimit(Box::new(SolveOutcome {
                w: u,
                iterations: n,
                residual_norm,
                certified_error,
                terminated_by: Termination::IterationLimit,
            })));
        }

        diff = match step {
            Some(d) => d,
            None => {
                if mode == TerminationMode::APosterioriStep {
                    unreachable!("step mode always evaluates the step");
                }
                ComplexMatrix::zeros(n_dim)
            }
        };
        u = next;
        n += 1;
    }
}

fn finish(
    ep: &EvaluationPoint,
    eta: &CovarianceMap<'_>,
    w: ComplexMatrix,
    iterations: u64,
    delta: f64,
    terminated_by: Termination,
) -> Result<SolveOutcome, SolverError> {
    let residual_norm = residual_delta(ep, eta, &w)?;
    Ok(SolveOutcome {
        w,
        iterations,
        residual_norm,
        certified_error: delta,
        terminated_by,
    })
}

/// Endless iterator over `h_b(u₀), h_b²(u₀), …`.
pub struct Iterates<'a, 'p> {
    ep: &'a EvaluationPoint,
    eta: &'a CovarianceMap<'p>,
    current: ComplexMatrix,
    failed: bool,
}

impl Iterator for Iterates<'_, '_> {
    type Item = Result<ComplexMatrix, SolverError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match apply_h(self.ep, self.eta, &self.current) {
            Ok(next) => {
                self.current = next.clone();
                Some(Ok(next))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

pub fn iterates<'a, 'p>(
    ep: &'a EvaluationPoint,
    eta: &'a CovarianceMap<'p>,
    start: ComplexMatrix,
) -> Iterates<'a, 'p> {
    Iterates {
        ep,
        eta,
        current: start,
        failed: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pencil::{HermitianMatrix, LinearPencil};

    fn scalar_pencil() -> LinearPencil {
        LinearPencil::new(vec![HermitianMatrix::identity(1)]).unwrap()
    }

    fn scalar_point(z: Complex64) -> EvaluationPoint {
        EvaluationPoint::new(ComplexMatrix::scalar(1, z)).unwrap()
    }

    #[test]
    fn apply_h_scalar_cases() {
        let p = scalar_pencil();
        let eta = p.covariance();
        let ep = scalar_point(Complex64::new(0.0, 1.0));
        let w = apply_h(&ep, &eta, &ComplexMatrix::scalar(1, Complex64::new(0.0, -1.0))).unwrap();
        assert!((w[(0, 0)] - Complex64::new(0.0, -0.5)).norm() < 1e-15);

        let beta = 0.37;
        let ep = scalar_point(Complex64::new(0.0, beta));
        let w = apply_h(&ep, &eta, &ComplexMatrix::scalar(1, Complex64::new(0.0, -1.0))).unwrap();
        assert!((w[(0, 0)] - Complex64::new(0.0, -1.0 / (beta + 1.0))).norm() < 1e-15);
    }

    #[test]
    fn scalar_fixed_point_is_stationary() {
        let p = scalar_pencil();
        let eta = p.covariance();
        let ep = scalar_point(Complex64::new(0.0, 1.0));
        let w = ComplexMatrix::scalar(1, Complex64::new(0.0, -0.6180339887498949));
        let hw = apply_h(&ep, &eta, &w).unwrap();
        assert!((&hw - &w).max_abs() < 1e-9);
        assert!(residual_delta(&ep, &eta, &w).unwrap() < 1e-9);
    }

    #[test]
    fn rejects_lower_half_plane_point() {
        let b = ComplexMatrix::scalar(2, Complex64::new(1.0, -0.1));
        assert!(matches!(
            EvaluationPoint::new(b),
            Err(SolverError::NotInUpperHalfPlane { .. })
        ));
    }

    #[test]
    fn radius_must_exceed_im_inverse_norm() {
        let p = scalar_pencil();
        let eta = p.covariance();
        let ep = scalar_point(Complex64::new(0.0, 0.5));
        assert!(matches!(
            SolverConfig::new(&ep, &eta, 2.0, 0.1, TerminationMode::APriori),
            Err(SolverError::RadiusTooSmall { .. })
        ));
    }

    #[test]
    fn default_radius_reduces_to_explicit_radius() {
        let p = scalar_pencil();
        let eta = p.covariance();
        for beta in [1.0, 0.1, 0.01] {
            let ep = scalar_point(Complex64::new(0.0, beta));
            let r = default_radius(&ep, &eta, 1.0);
            assert!((r - explicit_radius(beta)).abs() < 1e-12 * r);
        }
    }

    #[test]
    fn optimal_radius_solves_cubic() {
        for beta in [1.0, 0.1, 0.01, 3.0] {
            let r = optimal_radius(beta);
            assert!(r > 1.0 / beta);
            let f = (beta + r).powi(2) * (r - 1.0 / beta);
            assert!((f - beta).abs() < 1e-10 * beta.max(1.0), "beta {beta}: {f}");
        }
    }

    #[test]
    fn large_imaginary_part_gives_reciprocal() {
        let p = scalar_pencil();
        let eta = p.covariance();
        let ep = scalar_point(Complex64::new(0.0, 1e6));
        let cfg = SolverConfig::with_default_radius(&ep, &eta, 1e-14, TerminationMode::APosterioriResidual).unwrap();
        let out = solve_fixed_point(&ep, &eta, &cfg).unwrap();
        let expected = Complex64::new(0.0, -scalar_fixed_point(1e6));
        assert!((out.w[(0, 0)] - expected).norm() <= 1e-18);
        assert!((out.w[(0, 0)] - Complex64::new(0.0, -1e-6)).norm() <= 1e-12);
    }

    #[test]
    fn zero_covariance_converges_to_inverse_of_b() {
        let p = LinearPencil::zero(2, 1);
        let eta = p.covariance();
        let ep = EvaluationPoint::new(ComplexMatrix::scalar(2, Complex64::new(0.0, 0.25))).unwrap();
        for mode in [
            TerminationMode::APriori,
            TerminationMode::APosterioriResidual,
            TerminationMode::APosterioriStep,
        ] {
            let cfg = SolverConfig::with_default_radius(&ep, &eta, 1e-8, mode).unwrap();
            let out = solve_fixed_point(&ep, &eta, &cfg).unwrap();
            assert!((out.w[(0, 0)] - Complex64::new(0.0, -4.0)).norm() < 1e-12, "{mode}");
            assert_eq!(out.iterations, 1);
        }
    }

    #[test]
    fn iteration_limit_returns_partial_outcome() {
        let p = scalar_pencil();
        let eta = p.covariance();
        let ep = scalar_point(Complex64::new(0.0, 0.01));
        let cfg = SolverConfig::with_default_radius(&ep, &eta, 1e-6, TerminationMode::APosterioriResidual)
            .unwrap()
            .with_max_iterations(5);
        match solve_fixed_point(&ep, &eta, &cfg) {
            Err(SolverError::IterationLimit(o)) => {
                assert_eq!(o.iterations, 5);
                assert_eq!(o.terminated_by, Termination::IterationLimit);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn trace_sink_sees_every_iteration() {
        let p = scalar_pencil();
        let eta = p.covariance();
        let ep = scalar_point(Complex64::new(0.0, 1.0));
        let cfg = SolverConfig::with_default_radius(&ep, &eta, 0.01, TerminationMode::APosterioriResidual).unwrap();
        let mut records = Vec::new();
        let mut sink = |r: &TraceRecord| records.push(*r);
        let out = solve_traced(&ep, &eta, &cfg, &cfg.start_point(1), Some(&mut sink)).unwrap();
        assert_eq!(records.len() as u64, out.iterations);
        for (k, r) in records.iter().enumerate() {
            assert_eq!(r.iteration, k as u64 + 1);
            let expected = scalar_closed_form_step(1.0, 1.0, r.iteration).norm();
            assert!((r.step_norm.unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in [
            TerminationMode::APriori,
            TerminationMode::APosterioriResidual,
            TerminationMode::APosterioriStep,
        ] {
            assert_eq!(mode.to_string().parse::<TerminationMode>().unwrap(), mode);
        }
        assert!("fast".parse::<TerminationMode>().is_err());
    }
}
