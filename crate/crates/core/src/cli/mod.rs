//! The `nmvm` command-line front end.
//!
//! Exit codes: `0` success, `1` invalid input, `2` infeasible problem,
//! `3` internal error or failed verification.

mod output;
mod schema;
mod verify;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::exp_opt::{self, Solver};
use crate::general_opt::{self, UtilitySpec};
use crate::mc_oracle::McConfig;

pub use schema::{parse as parse_spec, SpecFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nmvm", version, about = "Portfolio optimization under normal mean-variance mixture returns")]
struct Cli {
    /// Worker threads for parallel sections (defaults to all cores)
    #[arg(long, env = "NMVM_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form exponential-utility optimum
    ExpOpt(ExpOptArgs),
    /// Moment-expansion optimum for a general utility
    GeneralOpt(GeneralOptArgs),
    /// Optimal utilities of growing market segments (CSV)
    LargeMarket(LargeMarketArgs),
    /// Re-check closed-form results against Monte Carlo
    McVerify(McVerifyArgs),
}

#[derive(Debug, Args)]
struct Io {
    /// Market spec file (TOML)
    #[arg(long, value_name = "PATH")]
    spec: PathBuf,
    /// Output file, written atomically (defaults to stdout)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExpOptArgs {
    #[command(flatten)]
    io: Io,
    /// Method used to locate q_min
    #[arg(long, value_enum, default_value_t = SolverArg::MinimizeH)]
    solver: SolverArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    MinimizeH,
    Foc,
}

#[derive(Debug, Args)]
struct GeneralOptArgs {
    #[command(flatten)]
    io: Io,
    /// Truncation order K of the moment expansion (2..=12)
    #[arg(long, default_value_t = general_opt::DEFAULT_ORDER)]
    order: usize,
    /// Utility family, overriding the spec file's [utility] block
    #[arg(long, value_enum)]
    utility: Option<UtilityArg>,
    /// Parameter of --utility: a (exponential), eta (power), b (quadratic)
    #[arg(long, value_name = "X")]
    utility_param: Option<f64>,
    /// Lower bound on rho = |y|, overriding the spec file
    #[arg(long, value_name = "X")]
    rho_min: Option<f64>,
    /// Upper bound on rho = |y|, overriding the spec file
    #[arg(long, value_name = "X")]
    rho_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UtilityArg {
    Exponential,
    Power,
    Log,
    Quadratic,
}

#[derive(Debug, Args)]
struct LargeMarketArgs {
    #[command(flatten)]
    io: Io,
    /// Convergence threshold for |U_n - U_2n| (overrides the spec file; default 1e-4)
    #[arg(long, value_name = "X")]
    tolerance: Option<f64>,
}

#[derive(Debug, Args)]
struct McVerifyArgs {
    #[command(flatten)]
    io: Io,
    /// Monte Carlo paths per check
    #[arg(long, default_value_t = 200_000)]
    paths: usize,
    /// Random seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Pass threshold, in standard errors
    #[arg(long, default_value_t = 3.0)]
    tolerance: f64,
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible { .. }
            | Error::EmptyDomain
            | Error::EmptyFeasibleRegion
            | Error::NoInteriorMinimum
            | Error::InfeasiblePoint(_) => EXIT_INFEASIBLE,
            Error::NoRoot | Error::BesselDomain(_) | Error::LaplaceDomain { .. } | Error::ThetaDomain { .. } => EXIT_INTERNAL,
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: EXIT_INPUT, message: format!("{}: {e}", path.display()) }
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: NMVM_THREADS must be at least 1");
            return EXIT_INPUT;
        }
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INTERNAL;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load(path: &Path) -> Result<SpecFile, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    Ok(schema::parse(&text)?)
}

fn write(io: &Io, text: &str) -> Result<(), Failure> {
    output::emit(io.out.as_deref(), text).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("{}: {e}", io.out.as_deref().unwrap_or(Path::new("<stdout>")).display()),
    })
}

fn dispatch(cmd: Command) -> Result<i32, Failure> {
    match cmd {
        Command::ExpOpt(a) => exp_opt_cmd(a),
        Command::GeneralOpt(a) => general_opt_cmd(a),
        Command::LargeMarket(a) => large_market_cmd(a),
        Command::McVerify(a) => mc_verify_cmd(a),
    }
}

#[derive(Serialize)]
struct ScalarsOut {
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "B")]
    b: f64,
    #[serde(rename = "C")]
    c: f64,
}

#[derive(Serialize)]
struct SolverOut {
    method: Solver,
    iterations: usize,
    bracket: [f64; 2],
    tolerance: f64,
}

#[derive(Serialize)]
struct ExpOptOut {
    q_min: f64,
    x_star: Vec<f64>,
    expected_utility: f64,
    ln_neg_expected_utility: f64,
    g_value: f64,
    theta0: f64,
    scalars: ScalarsOut,
    solver_info: SolverOut,
}

fn exp_opt_cmd(args: ExpOptArgs) -> Result<i32, Failure> {
    let spec = load(&args.io.spec)?;
    let model = spec.model()?;
    let mix = spec.mixing()?;
    let inv = spec.investor()?;
    let solver = match args.solver {
        SolverArg::MinimizeH => Solver::MinimizeH,
        SolverArg::Foc => Solver::Foc,
    };
    let r = exp_opt::optimize(&model, &mix, inv.a, inv.w0, spec.excess_bounds(), solver)?;
    let out = ExpOptOut {
        q_min: r.q_min,
        x_star: r.x_star,
        expected_utility: r.optimal_utility,
        ln_neg_expected_utility: r.ln_neg_utility,
        g_value: r.g_value,
        theta0: r.theta0,
        scalars: ScalarsOut { a: r.scalars.a, b: r.scalars.b, c: r.scalars.c },
        solver_info: SolverOut {
            method: r.solver_info.method,
            iterations: r.solver_info.iterations,
            bracket: [r.solver_info.bracket.0, r.solver_info.bracket.1],
            tolerance: r.solver_info.tolerance,
        },
    };
    write(&args.io, &output::to_json(&out))?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct GeneralOptOut {
    utility: String,
    order: usize,
    alpha: f64,
    beta: f64,
    rho: f64,
    x: Vec<f64>,
    m_value: f64,
    truncation_gap: Option<f64>,
    exact_utility: Option<f64>,
    rho_max: f64,
    at_rho_upper_bound: bool,
}

fn general_opt_cmd(args: GeneralOptArgs) -> Result<i32, Failure> {
    let spec = load(&args.io.spec)?;
    let model = spec.model()?;
    let mix = spec.mixing()?;
    let w0 = spec.investor()?.w0;
    let utility = match (args.utility, args.utility_param) {
        (None, None) => spec.utility()?,
        (None, Some(_)) => return Err(Error::InvalidParameter("--utility-param needs --utility".into()).into()),
        (Some(UtilityArg::Log), None) => UtilitySpec::Log,
        (Some(UtilityArg::Log), Some(_)) => {
            return Err(Error::InvalidParameter("log utility takes no parameter".into()).into())
        }
        (Some(kind), param) => {
            let p = param.ok_or_else(|| Error::InvalidParameter("--utility needs --utility-param".into()))?;
            match kind {
                UtilityArg::Exponential => UtilitySpec::exponential(p)?,
                UtilityArg::Power => UtilitySpec::power(p)?,
                UtilityArg::Quadratic => UtilitySpec::quadratic(p)?,
                UtilityArg::Log => unreachable!(),
            }
        }
    };
    let mut bx = spec.reduced_box();
    if args.rho_min.is_some() || args.rho_max.is_some() {
        let (lo, hi) = bx.rho.unwrap_or((0.0, f64::NAN));
        let hi = args.rho_max.unwrap_or(hi);
        if hi.is_nan() {
            return Err(Error::InvalidParameter("--rho-min needs an upper bound (--rho-max or domain.rho)".into()).into());
        }
        bx.rho = Some((args.rho_min.unwrap_or(lo), hi));
    }
    let r = general_opt::general_optimize(&model, &mix, &utility, args.order, w0, &bx)?;
    if r.at_rho_upper_bound {
        eprintln!("warning: the optimum sits on the rho upper bound {:.6e}", r.rho_max);
    }
    let out = GeneralOptOut {
        utility: utility.name().to_string(),
        order: r.order,
        alpha: r.point.phi,
        beta: r.point.psi,
        rho: r.point.rho,
        x: r.x,
        m_value: r.m_value,
        truncation_gap: r.truncation_gap,
        exact_utility: r.exact_utility,
        rho_max: r.rho_max,
        at_rho_upper_bound: r.at_rho_upper_bound,
    };
    write(&args.io, &output::to_json(&out))?;
    Ok(EXIT_OK)
}

fn large_market_cmd(args: LargeMarketArgs) -> Result<i32, Failure> {
    let spec = load(&args.io.spec)?;
    let (lm, n_list, spec_tol) = spec.large_market()?;
    let tol = args.tolerance.or(spec_tol).unwrap_or(1e-4);
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")).into());
    }
    let table = lm.convergence_study(&n_list, tol)?;
    let mut csv = String::from("n,U_n,gap_to_double,d2_tail\n");
    for r in &table.rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.n,
            output::sci(r.u_n),
            r.gap_to_double.map_or(String::new(), output::sci),
            output::sci(r.d2_tail)
        ));
    }
    write(&args.io, &csv)?;
    if !lm.assumption_check(tol) {
        eprintln!("warning: sum of d_i^2 over ({}, {}] is not below {tol:e}", lm.max_n / 2, lm.max_n);
    }
    if !table.converged {
        eprintln!("warning: |U_n - U_2n| did not fall below {tol:e}");
    }
    if !table.monotone || table.rows.iter().any(|r| !(r.u_n > 0.0)) {
        eprintln!("error: U_n is not a positive nonincreasing sequence");
        return Ok(EXIT_INTERNAL);
    }
    Ok(EXIT_OK)
}

fn mc_verify_cmd(args: McVerifyArgs) -> Result<i32, Failure> {
    let spec = load(&args.io.spec)?;
    if !(args.tolerance > 0.0) {
        return Err(Error::InvalidParameter("--tolerance must be positive".into()).into());
    }
    let cfg = McConfig::new(args.seed, args.paths)?;
    let report = verify::run(&spec, &cfg, args.tolerance)?;
    write(&args.io, &output::to_json(&report))?;
    if report.passed {
        Ok(EXIT_OK)
    } else {
        for c in report.checks.iter().filter(|c| !c.passed) {
            eprintln!("check failed: {} (reference {:e}, estimate {:e} ± {:e})", c.name, c.reference, c.estimate, c.stderr);
        }
        Ok(EXIT_INTERNAL)
    }
}
