//! Atom mass at zero and rank certificates.
//!
//! For a Hermitian pencil `A` of size `N`, the distribution `μ` of the
//! operator-valued semicircular element `S = Σ aᵢ⊗sᵢ` with respect to `tr_N`
//! satisfies `rank(A) = N(1 − μ({0}))`. The function
//! `θ(y) = −y Im tr_N(G(iy))` decreases to `μ({0})` as `y ↓ 0` and bounds it
//! from above at every `y`.

mod blocks;
mod certificate;
mod moments;

pub use blocks::{find_zero_block, zero_block_upper_bound, ZeroBlock, MAX_BLOCK_SEARCH_DIM};
pub use certificate::{MethodTag, RankCertificate, RegularityInfo};
pub use moments::{moment_atom_bound, moment_rank_lower_bound, moment_triple, MomentTriple};

use log::{debug, warn};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cauchy_solver::{
    solve_from, EvaluationPoint, SolverConfig, SolverError, TerminationMode, DEFAULT_MAX_ITERATIONS,
};
use crate::pencil::{hermitize, ComplexMatrix, CovarianceMap, LinearPencil, Pencil, PencilError};

/// Keeps the solver tolerance strictly inside the requested θ accuracy.
const STRICTNESS: f64 = 1.0 - 1e-12;
/// Guards floors and nearest-integer rounding against representation error.
const ROUNDING_SLACK: f64 = 1e-9;
/// Halvings of `y` attempted when `N·θ̃` lands on a half-integer.
const TIE_RETRIES: u32 = 8;

pub const MEAN_WARNING: &str =
    "pencil has a nonzero constant term; the rank-atom correspondence is only established for homogeneous pencils";

#[derive(Debug, Error, Clone)]
pub enum RankError {
    #[error(transparent)]
    Pencil(#[from] PencilError),
    #[error("solver failed at y = {y:e}: {source}")]
    Solver {
        y: f64,
        #[source]
        source: SolverError,
    },
    #[error("moment formulas require a pencil without constant term")]
    UnsupportedMean,
    #[error("moments violate a4^2 <= a2*a6: a2 = {a2}, a4 = {a4}, a6 = {a6}")]
    InconsistentMoments { a2: f64, a4: f64, a6: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("y grid must be strictly decreasing (position {index})")]
    NotDescending { index: usize },
    #[error("threshold y = {y:e} is not representable as a positive double; regularity parameters are infeasible")]
    Infeasible { y: f64 },
    #[error("N·θ̃ stayed at a half-integer down to y = {y:e}")]
    Indeterminate { y: f64 },
    #[error("coefficient {variable} is nonzero at ({row}, {col}) inside the claimed zero block")]
    BlockNotZero { variable: usize, row: usize, col: usize },
    #[error("exhaustive zero-block search is limited to N <= 12 (N = {dim})")]
    BlockSearchTooLarge { dim: usize },
}

/// Certified approximation `θ̃` of `θ(y)` with `|θ(y) − θ̃| < eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaSample {
    pub y: f64,
    pub theta_tilde: f64,
    pub eps: f64,
    pub solver_iterations: u64,
    /// `Re tr_N(w̃)`; zero for centered pencils up to the certified error.
    pub real_trace: f64,
    /// Certified `‖w̃ − G(iy·1 − mean)‖`.
    pub certified_error: f64,
}

fn check_theta_params(y: f64, eps: f64) -> Result<(), RankError> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(RankError::InvalidParameter(format!("y = {y} must be positive")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(RankError::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    Ok(())
}

/// θ at `y` together with the solution, optionally warm-started.
fn theta_solve(
    eta: &CovarianceMap<'_>,
    y: f64,
    eps: f64,
    start: Option<&ComplexMatrix>,
    max_iterations: u64,
) -> Result<(ThetaSample, ComplexMatrix), RankError> {
    check_theta_params(y, eps)?;
    let p = eta.source();
    let wrap = |source| RankError::Solver { y, source };
    let ep = EvaluationPoint::new(p.imaginary_axis_point(y)).map_err(wrap)?;
    // Residual ≤ σ/‖Im(b)⁻¹‖ with δ = eps/y gives ‖w̃ − w*‖ < eps/y.
    let delta = eps / y * STRICTNESS;
    let cfg = SolverConfig::with_default_radius(&ep, eta, delta, TerminationMode::APosterioriResidual)
        .map_err(wrap)?
        .with_max_iterations(max_iterations);
    let start = start.cloned().unwrap_or_else(|| cfg.start_point(p.dim()));
    let out = solve_from(&ep, eta, &cfg, &start).map_err(wrap)?;
    let tr = out.w.normalized_trace();
    let sample = ThetaSample {
        y,
        theta_tilde: -y * tr.im,
        eps,
        solver_iterations: out.iterations,
        real_trace: tr.re,
        certified_error: out.certified_error,
    };
    debug!("theta({y:e}) = {} after {} iterations", sample.theta_tilde, out.iterations);
    Ok((sample, out.w))
}

/// `θ̃ = −y Im tr_N(w̃)` where `w̃` approximates `G(iy·1 − mean)`.
pub fn theta_at(p: &LinearPencil, y: f64, eps: f64) -> Result<ThetaSample, RankError> {
    theta_at_with_limit(p, y, eps, DEFAULT_MAX_ITERATIONS)
}

pub fn theta_at_with_limit(
    p: &LinearPencil,
    y: f64,
    eps: f64,
    max_iterations: u64,
) -> Result<ThetaSample, RankError> {
    theta_solve(&p.covariance(), y, eps, None, max_iterations).map(|(s, _)| s)
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    /// Seed each solve with the previous solution (forces sequential evaluation).
    pub warm_start: bool,
    pub max_iterations: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            warm_start: true,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// A scan point whose solve failed.
#[derive(Debug, Clone)]
pub struct ScanFailure {
    pub y: f64,
    pub error: RankError,
}

#[derive(Debug, Clone, Default)]
pub struct ThetaScan {
    pub samples: Vec<ThetaSample>,
    pub failures: Vec<ScanFailure>,
}

fn check_descending(y_values: &[f64]) -> Result<(), RankError> {
    for (index, pair) in y_values.windows(2).enumerate() {
        if !(pair[1] < pair[0]) {
            return Err(RankError::NotDescending { index: index + 1 });
        }
    }
    Ok(())
}

/// θ̃ on a strictly decreasing grid, warm-started.
pub fn theta_scan(p: &LinearPencil, y_values: &[f64], eps: f64) -> Result<ThetaScan, RankError> {
    theta_scan_with(p, y_values, eps, ScanOptions::default())
}

pub fn theta_scan_with(
    p: &LinearPencil,
    y_values: &[f64],
    eps: f64,
    opts: ScanOptions,
) -> Result<ThetaScan, RankError> {
    check_descending(y_values)?;
    for &y in y_values {
        check_theta_params(y, eps)?;
    }
    let eta = p.covariance();
    let mut scan = ThetaScan::default();
    if opts.warm_start {
        let mut start: Option<ComplexMatrix> = None;
        for &y in y_values {
            match theta_solve(&eta, y, eps, start.as_ref(), opts.max_iterations) {
                Ok((s, w)) => {
                    scan.samples.push(s);
                    start = Some(w);
                }
                Err(error) => {
                    warn!("theta scan: {error}");
                    scan.failures.push(ScanFailure { y, error });
                }
            }
        }
    } else {
        let results: Vec<_> = y_values
            .par_iter()
            .map(|&y| (y, theta_solve(&eta, y, eps, None, opts.max_iterations)))
            .collect();
        for (y, r) in results {
            match r {
                Ok((s, _)) => scan.samples.push(s),
                Err(error) => scan.failures.push(ScanFailure { y, error }),
            }
        }
    }
    Ok(scan)
}

/// `N − ⌊N(θ̃ + eps)⌋`, clamped to `[0, N]`.
pub fn lower_bound_from_sample(dim: usize, s: &ThetaSample) -> usize {
    let deficit = (dim as f64 * (s.theta_tilde + s.eps) + ROUNDING_SLACK).floor();
    dim - (deficit.max(0.0) as usize).min(dim)
}

/// Lower bound from a single θ evaluation; certifies fullness when it reaches `N`.
pub fn rank_lower_bound_scan(p: &LinearPencil, y: f64, eps: f64) -> Result<RankCertificate, RankError> {
    let sample = theta_at(p, y, eps)?;
    let mut cert = RankCertificate::empty(p.dim());
    if !p.is_centered() {
        cert.warn(MEAN_WARNING);
    }
    cert.lower_bound = lower_bound_from_sample(p.dim(), &sample);
    cert.samples.push(sample);
    cert.tag(MethodTag::ThetaScan);
    cert.settle();
    Ok(cert)
}

/// Exact rank when the non-atomic part is regular near zero.
///
/// Evaluates θ̃ with `eps = 1/(4N)` at half the admissible `y`; then
/// `|N·θ̃ − N·μ({0})| < 1/2` and the rank is `N − [N·θ̃]`.
pub fn rank_exact_regular(p: &LinearPencil, reg: &RegularityInfo) -> Result<RankCertificate, RankError> {
    rank_exact_regular_with_limit(p, reg, DEFAULT_MAX_ITERATIONS)
}

pub fn rank_exact_regular_with_limit(
    p: &LinearPencil,
    reg: &RegularityInfo,
    max_iterations: u64,
) -> Result<RankCertificate, RankError> {
    let reg = RegularityInfo::new(reg.c, reg.beta, reg.r0)?;
    let n = p.dim();
    let mut y = 0.5 * reg.y_threshold(n);
    if !(y >= f64::MIN_POSITIVE) || !y.is_finite() {
        return Err(RankError::Infeasible { y });
    }
    let eps = 1.0 / (4.0 * n as f64);
    let mut cert = RankCertificate::empty(n);
    if !p.is_centered() {
        cert.warn(MEAN_WARNING);
    }
    for attempt in 0..=TIE_RETRIES {
        let sample = theta_at_with_limit(p, y, eps, max_iterations)?;
        cert.samples.push(sample);
        let scaled = n as f64 * sample.theta_tilde;
        if ((scaled - scaled.floor()) - 0.5).abs() < ROUNDING_SLACK {
            cert.warn(format!("N·θ̃ = {scaled} is a half-integer tie at y = {y:e}; retried at y/2"));
            if attempt == TIE_RETRIES {
                return Err(RankError::Indeterminate { y });
            }
            y *= 0.5;
            if !(y >= f64::MIN_POSITIVE) {
                return Err(RankError::Infeasible { y });
            }
            continue;
        }
        let atoms = (scaled.round().max(0.0) as usize).min(n);
        let rank = n - atoms;
        cert.lower_bound = rank;
        cert.upper_bound = Some(rank);
        cert.exact = Some(rank);
        cert.tag(MethodTag::ExactRegular);
        return Ok(cert);
    }
    unreachable!("loop returns on every path")
}

/// Default θ grid: `10⁰, 10⁻¹, …, 10⁻⁷`.
pub fn default_y_grid() -> Vec<f64> {
    (0..=7).map(|k| 10f64.powi(-k)).collect()
}

#[derive(Debug, Clone)]
pub struct CertifyOptions {
    /// Single θ evaluation point; `None` scans [`default_y_grid`].
    pub y: Option<f64>,
    /// θ accuracy; defaults to `1/(4N)` for the (hermitized) dimension.
    pub eps: Option<f64>,
    pub regularity: Option<RegularityInfo>,
    /// User-supplied zero block on the original pencil (0-based).
    pub block: Option<ZeroBlock>,
    pub auto_block: bool,
    pub max_iterations: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            y: None,
            eps: None,
            regularity: None,
            block: None,
            auto_block: false,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Combines all available bounds into a single certificate.
///
/// General pencils are hermitized; bounds computed on the `2N` pencil are halved
/// (lower rounded up, upper rounded down). Zero blocks are searched on the original.
pub fn certify_rank(p: &Pencil, opts: &CertifyOptions) -> Result<RankCertificate, RankError> {
    let (work, factor) = match p {
        Pencil::Hermitian(lp) => (lp.clone(), 1usize),
        Pencil::General(gp) => (hermitize(gp), 2usize),
    };
    let n = work.dim();
    let mut cert = RankCertificate::empty(n);

    if work.is_centered() {
        cert.lower_bound = moment_rank_lower_bound(&work)?;
        cert.tag(MethodTag::MomentBound);
    } else {
        cert.warn(MEAN_WARNING);
        cert.warn("moment bound skipped: constant term present");
    }

    let mut block_bound: Option<usize> = None;
    if let Some(b) = &opts.block {
        block_bound = Some(zero_block_upper_bound(p, &b.rows, &b.cols)? * factor);
    }
    if opts.auto_block {
        match find_zero_block(p) {
            Ok(b) => {
                let u = zero_block_upper_bound(p, &b.rows, &b.cols)? * factor;
                block_bound = Some(block_bound.map_or(u, |v| v.min(u)));
            }
            Err(RankError::BlockSearchTooLarge { dim }) => {
                cert.warn(format!("automatic zero-block search skipped for N = {dim} > {MAX_BLOCK_SEARCH_DIM}"));
            }
            Err(e) => return Err(e),
        }
    }
    if let Some(u) = block_bound {
        if u < n {
            cert.upper_bound = Some(u);
            cert.tag(MethodTag::ZeroBlock);
        }
    }

    let eps = opts.eps.unwrap_or(1.0 / (4.0 * n as f64));
    let eta = work.covariance();
    // An explicit y is always evaluated; the default grid stops once the bounds meet.
    let (grid, early_stop) = match opts.y {
        Some(y) => (vec![y], false),
        None => (default_y_grid(), true),
    };
    let mut start: Option<ComplexMatrix> = None;
    for y in grid {
        let done = cert.lower_bound >= n || cert.upper_bound.is_some_and(|u| cert.lower_bound >= u);
        if early_stop && done {
            break;
        }
        match theta_solve(&eta, y, eps, start.as_ref(), opts.max_iterations) {
            Ok((s, w)) => {
                cert.lower_bound = cert.lower_bound.max(lower_bound_from_sample(n, &s));
                cert.samples.push(s);
                cert.tag(MethodTag::ThetaScan);
                start = Some(w);
            }
            Err(e) => {
                warn!("{e}");
                cert.warn(format!("theta evaluation failed: {e}"));
            }
        }
    }

    if let Some(reg) = &opts.regularity {
        let exact = rank_exact_regular_with_limit(&work, reg, opts.max_iterations)?;
        let rank = exact.exact.expect("exact procedure always sets the rank");
        cert.samples.extend(exact.samples);
        for w in exact.warning_flags {
            cert.warn(w);
        }
        let consistent = rank >= cert.lower_bound && cert.upper_bound.is_none_or(|u| rank <= u);
        if consistent {
            cert.exact = Some(rank);
            cert.lower_bound = rank;
            cert.upper_bound = Some(rank);
            cert.tag(MethodTag::ExactRegular);
        } else {
            cert.warn(format!(
                "regularity procedure gave {rank}, outside the certified bounds; regularity parameters are likely invalid"
            ));
        }
    }

    if let Some(u) = cert.upper_bound {
        if cert.lower_bound > u {
            cert.warn(format!("lower bound {} exceeds upper bound {u}", cert.lower_bound));
        }
    }
    cert.settle();

    if factor == 2 {
        cert = halve(cert, p.dim());
    }
    Ok(cert)
}

fn halve(mut cert: RankCertificate, dim: usize) -> RankCertificate {
    cert.dim = dim;
    cert.lower_bound = cert.lower_bound.div_ceil(2);
    cert.upper_bound = cert.upper_bound.map(|u| u / 2);
    cert.exact = match cert.exact {
        Some(e) if e % 2 == 0 => Some(e / 2),
        Some(e) => {
            cert.warn(format!("hermitized rank {e} is odd"));
            None
        }
        None => None,
    };
    cert.settle();
    cert
}
