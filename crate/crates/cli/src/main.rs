//! `ncrank`: inner rank certificates, θ scans, spectral densities and random-matrix
//! spectra for linear matrix pencils.
//!
//! Machine output goes to stdout, diagnostics to stderr. Exit codes: 0 success,
//! 1 invalid input, 2 rank bounds without an exact value, 3 solver nonconvergence.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use ncrank_core::atom_rank::{
    certify_rank, moment_atom_bound, moment_rank_lower_bound, moment_triple, theta_scan, CertifyOptions,
    RankError, RegularityInfo, ZeroBlock,
};
use ncrank_core::cauchy_solver::{
    a_priori_iteration_count, apply_h, explicit_radius, optimal_radius, solve_fixed_point, EvaluationPoint,
    SolverConfig, SolverError, TerminationMode,
};
use ncrank_core::density::stieltjes_density;
use ncrank_core::mc_oracle::{metadata_json, sample_spectrum, spectrum_csv, McConfig};
use ncrank_core::pencil::{hermitize, parse_pencil, ComplexMatrix, HermitianMatrix, LinearPencil, Pencil};
use ncrank_core::Complex64;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "ncrank", version, about = "Inner rank of linear matrix pencils")]
struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "NCRANK_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rank certificate as JSON.
    Rank(RankArgs),
    /// Moment-based atom bound and rank lower bound as JSON.
    Bound { file: PathBuf },
    /// θ̃ on a log-spaced grid from `ymax` down to `ymin`, as CSV.
    Theta(ThetaArgs),
    /// Spectral density on a uniform grid, as CSV.
    Density(DensityArgs),
    /// Solver iteration count for the scalar semicircle at `b = i·beta`.
    Iterations(IterationArgs),
    /// Pooled eigenvalues of random-matrix samples, as CSV; metadata JSON on stderr.
    Mc(McArgs),
}

#[derive(Args, Debug)]
struct RankArgs {
    file: PathBuf,
    #[arg(long)]
    y: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Regularity constants `c,beta,r0`.
    #[arg(long, value_parser = parse_regularity)]
    reg: Option<RegularityInfo>,
    /// Zero block `rows:cols`, comma-separated 1-based indices, e.g. `1,2:3,4`.
    #[arg(long, value_parser = parse_block)]
    block: Option<ZeroBlock>,
    #[arg(long)]
    auto_block: bool,
}

#[derive(Args, Debug)]
struct ThetaArgs {
    file: PathBuf,
    #[arg(long)]
    ymin: f64,
    #[arg(long)]
    ymax: f64,
    #[arg(long)]
    points: usize,
    /// Defaults to `1/(4N)`.
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Args, Debug)]
struct DensityArgs {
    file: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    tmin: f64,
    #[arg(long, allow_hyphen_values = true)]
    tmax: f64,
    #[arg(long)]
    points: usize,
    /// Height of the evaluation line above the real axis.
    #[arg(long = "imag", default_value_t = ncrank_core::density::DEFAULT_EPS_IM)]
    eps_im: f64,
}

#[derive(Args, Debug)]
struct IterationArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// A number, `optimal` or `explicit`.
    #[arg(long, default_value = "explicit")]
    radius: RadiusChoice,
    #[arg(long, default_value = "residual")]
    mode: TerminationMode,
}

#[derive(Args, Debug)]
struct McArgs {
    file: PathBuf,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    samples: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Debug, Clone, Copy)]
enum RadiusChoice {
    Optimal,
    Explicit,
    Fixed(f64),
}

impl FromStr for RadiusChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "optimal" => Ok(RadiusChoice::Optimal),
            "explicit" => Ok(RadiusChoice::Explicit),
            _ => s
                .parse::<f64>()
                .map(RadiusChoice::Fixed)
                .map_err(|_| format!("expected a number, `optimal` or `explicit`, got `{s}`")),
        }
    }
}

fn parse_regularity(s: &str) -> Result<RegularityInfo, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [c, beta, r0] = parts[..] else {
        return Err(format!("expected c,beta,r0, got {} values", parts.len()));
    };
    RegularityInfo::new(c, beta, r0).map_err(|e| e.to_string())
}

fn parse_indices(s: &str) -> Result<Vec<usize>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| match x.trim().parse::<usize>() {
            Ok(0) => Err("indices are 1-based".to_string()),
            Ok(i) => Ok(i - 1),
            Err(e) => Err(format!("`{x}`: {e}")),
        })
        .collect()
}

fn parse_block(s: &str) -> Result<ZeroBlock, String> {
    let (rows, cols) = s.split_once(':').ok_or("expected rows:cols")?;
    Ok(ZeroBlock {
        rows: parse_indices(rows)?,
        cols: parse_indices(cols)?,
    })
}

/// A failure mapped to its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl ToString) -> Self {
        Self {
            code: 1,
            message: message.to_string(),
        }
    }

    fn nonconvergence(message: impl ToString) -> Self {
        Self {
            code: 3,
            message: message.to_string(),
        }
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::IterationLimit(_) | SolverError::NumericalInstability { .. } => Self::nonconvergence(e),
            _ => Self::invalid(e),
        }
    }
}

impl From<RankError> for Failure {
    fn from(e: RankError) -> Self {
        match e {
            RankError::Solver { source, y } => {
                let mut f = Failure::from(source);
                f.message = format!("at y = {y}: {}", f.message);
                f
            }
            RankError::Indeterminate { .. } | RankError::Infeasible { .. } => Self::nonconvergence(e),
            _ => Self::invalid(e),
        }
    }
}

fn read_pencil(path: &Path) -> Result<Pencil, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    parse_pencil(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

/// The selfadjoint pencil the spectral commands work on.
fn read_linear(path: &Path) -> Result<LinearPencil, Failure> {
    match read_pencil(path)? {
        Pencil::Hermitian(p) => Ok(p),
        Pencil::General(g) => {
            warn!("{}: coefficients are not Hermitian; using the 2N×2N hermitization", path.display());
            Ok(hermitize(&g))
        }
    }
}

fn require(cond: bool, message: impl FnOnce() -> String) -> Result<(), Failure> {
    if cond {
        Ok(())
    } else {
        Err(Failure::invalid(message()))
    }
}

fn positive(name: &str, x: f64) -> Result<(), Failure> {
    require(x > 0.0 && x.is_finite(), || format!("--{name} must be positive, got {x}"))
}

fn run_rank(args: &RankArgs) -> Result<(String, u8), Failure> {
    if let Some(y) = args.y {
        positive("y", y)?;
    }
    if let Some(eps) = args.eps {
        positive("eps", eps)?;
    }
    let p = read_pencil(&args.file)?;
    let opts = CertifyOptions {
        y: args.y,
        eps: args.eps,
        regularity: args.reg,
        block: args.block.clone(),
        auto_block: args.auto_block,
        ..CertifyOptions::default()
    };
    let cert = certify_rank(&p, &opts)?;
    for w in &cert.warning_flags {
        warn!("{w}");
    }
    let code = if cert.is_exact() { 0 } else { 2 };
    Ok((cert.to_json() + "\n", code))
}

#[derive(Serialize)]
struct BoundReport {
    #[serde(rename = "N")]
    dim: usize,
    a2: f64,
    a4: f64,
    a6: f64,
    atom_bound: f64,
    lower: usize,
}

fn run_bound(file: &Path) -> Result<String, Failure> {
    let p = read_linear(file)?;
    require(!p.is_zero(), || "the zero pencil has no moment bound".into())?;
    let m = moment_triple(&p.covariance())?;
    let report = BoundReport {
        dim: p.dim(),
        a2: m.a2,
        a4: m.a4,
        a6: m.a6,
        atom_bound: moment_atom_bound(&m)?,
        lower: moment_rank_lower_bound(&p)?,
    };
    Ok(serde_json::to_string_pretty(&report).expect("report is serializable") + "\n")
}

/// `points` values from `ymax` down to `ymin`, equally spaced in `log y`.
fn log_grid(ymin: f64, ymax: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![ymax];
    }
    let (lo, hi) = (ymin.ln(), ymax.ln());
    (0..points)
        .map(|k| match k {
            0 => ymax,
            k if k + 1 == points => ymin,
            k => (hi + (lo - hi) * k as f64 / (points - 1) as f64).exp(),
        })
        .collect()
}

fn run_theta(args: &ThetaArgs) -> Result<(String, u8), Failure> {
    positive("ymin", args.ymin)?;
    positive("ymax", args.ymax)?;
    require(args.points >= 1, || "--points must be at least 1".into())?;
    require(args.ymin < args.ymax || (args.points == 1 && args.ymin <= args.ymax), || {
        format!("need ymin < ymax, got {} and {}", args.ymin, args.ymax)
    })?;
    if let Some(eps) = args.eps {
        positive("eps", eps)?;
    }
    let p = read_linear(&args.file)?;
    let eps = args.eps.unwrap_or(1.0 / (4.0 * p.dim() as f64));
    let scan = theta_scan(&p, &log_grid(args.ymin, args.ymax, args.points), eps)?;
    let mut csv = String::from("y,theta,eps,iterations\n");
    for s in &scan.samples {
        writeln!(csv, "{:.16e},{:.16e},{:.16e},{}", s.y, s.theta_tilde, s.eps, s.solver_iterations)
            .expect("writing to a String cannot fail");
    }
    for f in &scan.failures {
        warn!("y = {}: {}", f.y, f.error);
    }
    Ok((csv, if scan.failures.is_empty() { 0 } else { 3 }))
}

fn run_density(args: &DensityArgs) -> Result<(String, u8), Failure> {
    let p = read_linear(&args.file)?;
    let grid = stieltjes_density(&p, args.tmin, args.tmax, args.points, args.eps_im).map_err(Failure::invalid)?;
    let code = if grid.missing() == 0 { 0 } else { 3 };
    if code != 0 {
        warn!("{} grid points did not converge", grid.missing());
    }
    Ok((grid.to_csv(), code))
}

fn run_iterations(args: &IterationArgs) -> Result<String, Failure> {
    positive("beta", args.beta)?;
    positive("delta", args.delta)?;
    positive("omega", args.omega)?;
    let r = match args.radius {
        RadiusChoice::Optimal => optimal_radius(args.beta),
        RadiusChoice::Explicit => explicit_radius(args.beta),
        RadiusChoice::Fixed(r) => r,
    };
    let semicircle = LinearPencil::new(vec![HermitianMatrix::identity(1)]).expect("identity is nonzero");
    let eta = semicircle.covariance();
    let ep = EvaluationPoint::new(ComplexMatrix::scalar(1, Complex64::new(0.0, args.beta)))?;
    let cfg = SolverConfig::new(&ep, &eta, r, args.delta, args.mode)?.with_start_omega(args.omega);
    info!("r = {r}, epsilon = {:e}, q = {}", cfg.epsilon_dom, cfg.contraction_q);
    let n = match args.mode {
        TerminationMode::APriori => {
            let w0 = apply_h(&ep, &eta, &cfg.start_point(1))?;
            a_priori_iteration_count(&ep, &eta, &cfg, &w0)?
        }
        _ => solve_fixed_point(&ep, &eta, &cfg)?.iterations,
    };
    Ok(format!("{n}\n"))
}

fn run_mc(args: &McArgs) -> Result<String, Failure> {
    let p = read_linear(&args.file)?;
    let cfg = McConfig::new(args.dim, args.samples, args.seed).map_err(Failure::invalid)?;
    let spectrum = sample_spectrum(&p, &cfg).map_err(Failure::nonconvergence)?;
    eprintln!("{}", metadata_json(&cfg, p.dim()));
    Ok(spectrum_csv(&spectrum))
}

fn run(cli: &Cli) -> Result<(String, u8), Failure> {
    match &cli.command {
        Command::Rank(a) => run_rank(a),
        Command::Bound { file } => run_bound(file).map(|s| (s, 0)),
        Command::Theta(a) => run_theta(a),
        Command::Density(a) => run_density(a),
        Command::Iterations(a) => run_iterations(a).map(|s| (s, 0)),
        Command::Mc(a) => run_mc(a).map(|s| (s, 0)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            warn!("thread pool already initialized: {e}");
        }
    }
    match run(&cli) {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
