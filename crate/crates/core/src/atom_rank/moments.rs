//! Rank lower bound from the second, fourth and sixth moments of `S`.

use serde::Serialize;

use super::RankError;
use crate::pencil::{CovarianceMap, LinearPencil};

/// Slack on the Cauchy–Schwarz check `a₄² ≤ a₂a₆` and on the equality case.
const MOMENT_TOL: f64 = 1e-12;

/// Even moments `tr_N(S²)`, `tr_N(S⁴)`, `tr_N(S⁶)` of a centered pencil.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentTriple {
    pub a2: f64,
    pub a4: f64,
    pub a6: f64,
}

impl MomentTriple {
    pub fn new(a2: f64, a4: f64, a6: f64) -> Result<Self, RankError> {
        let positive = a2 > 0.0 && a4 > 0.0 && a6 > 0.0;
        let finite = a2.is_finite() && a4.is_finite() && a6.is_finite();
        if !positive || !finite || a4 * a4 > a2 * a6 * (1.0 + MOMENT_TOL) {
            return Err(RankError::InconsistentMoments { a2, a4, a6 });
        }
        Ok(Self { a2, a4, a6 })
    }
}

/// `a₂ = tr_N(η(1))`, `a₄ = 2 tr_N(η(1)²)`, `a₆ = 2 tr_N(η(1)³) + 3 tr_N(η(η(η(1))))`.
pub fn moment_triple(eta: &CovarianceMap<'_>) -> Result<MomentTriple, RankError> {
    if !eta.source().is_centered() {
        return Err(RankError::UnsupportedMean);
    }
    let e1 = eta.eta_of_identity().into_matrix();
    let e1_sq = e1.matmul(&e1);
    let e1_cube = e1_sq.matmul(&e1);
    let nested = eta.apply(&eta.apply(&e1)?)?;
    let a2 = e1.normalized_trace().re;
    let a4 = 2.0 * e1_sq.normalized_trace().re;
    let a6 = 2.0 * e1_cube.normalized_trace().re + 3.0 * nested.normalized_trace().re;
    MomentTriple::new(a2, a4, a6)
}

/// Upper bound on `μ({0})`:
/// `1 − (a₂²/a₄) ρ (π/2 − arctan ρ)` with `ρ = (a₆a₂/a₄² − 1)^{−1/2}`,
/// and `1 − a₂²/a₄` when `a₆a₂ = a₄²`.
pub fn moment_atom_bound(m: &MomentTriple) -> Result<f64, RankError> {
    let m = MomentTriple::new(m.a2, m.a4, m.a6)?;
    let base = m.a2 * m.a2 / m.a4;
    let excess = m.a6 * m.a2 / (m.a4 * m.a4) - 1.0;
    if excess <= MOMENT_TOL {
        return Ok(1.0 - base);
    }
    let rho = excess.powf(-0.5);
    // π/2 − arctan ρ = arctan(1/ρ) for ρ > 0, without cancellation at large ρ.
    Ok(1.0 - base * rho * (1.0 / rho).atan())
}

/// `⌈N (1 − moment_atom_bound)⌉`; `0` for the zero pencil.
pub fn moment_rank_lower_bound(p: &LinearPencil) -> Result<usize, RankError> {
    if p.is_zero() {
        if !p.is_centered() {
            return Err(RankError::UnsupportedMean);
        }
        return Ok(0);
    }
    let m = moment_triple(&p.covariance())?;
    let bound = moment_atom_bound(&m)?;
    let n = p.dim();
    // The slack keeps the ceiling sound when N(1 − bound) sits on an integer.
    let raw = (n as f64 * (1.0 - bound) - 1e-9).ceil();
    Ok((raw.max(0.0) as usize).min(n))
}
