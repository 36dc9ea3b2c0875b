use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spacing_core::bounds::{sharpness_window, SpacingRow};
use spacing_core::eigensolver::SearchOptions;
use spacing_core::norms::dyadic_grid;
use spacing_core::potential::{Family, Potential, PotentialSpec};
use spacing_core::report::{bound_csv, comparison_csv, eigenvalue_csv, fmt_f64, spacing_csv, trace_csv};
use spacing_core::{
    bound_report, eigenvalues_in_window_with, fd_oracle_eigenvalues, growth_check_weak, h_of, norm_report,
    spacing_rows, BoundReport, EigenvalueSet, NormReport, OracleConfig, Tolerance, VerifyOptions,
};

const RTOL_ENV: &str = "SPACING_RTOL";
const ATOL_ENV: &str = "SPACING_ATOL";

#[derive(Parser, Debug)]
#[command(
    name = "spacing",
    version,
    about = "Dirichlet eigenvalues and spacing bounds for decaying potentials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues of H_X with momentum in [k_lo, k_hi].
    Eigenvalues(EigenvaluesArgs),
    /// Slide windows of width h(X) and count eigenvalues in each.
    VerifyBound(VerifyArgs),
    /// Consecutive eigenvalue gaps against h(X).
    Spacing(SpacingArgs),
    /// Amalgamated norms and the growth trace of the cumulative mass.
    Norms(NormsArgs),
    /// verify-bound over a list of potentials, one summary row each.
    Sweep(SweepArgs),
    /// Check that a window just inside a free spacing holds no eigenvalue.
    Sharpness(SharpnessArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Write here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Relative ODE tolerance [env: SPACING_RTOL]
    #[arg(long)]
    rtol: Option<f64>,
    /// Absolute ODE tolerance [env: SPACING_ATOL]
    #[arg(long)]
    atol: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct PotentialArgs {
    /// Potential document: inline JSON or a path to a JSON file.
    #[arg(long, short)]
    potential: String,
    /// Replaces the seed of a random_decaying potential.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct EigenvaluesArgs {
    #[command(flatten)]
    pot: PotentialArgs,
    #[arg(long = "x")]
    x: f64,
    #[arg(long)]
    k_lo: f64,
    #[arg(long)]
    k_hi: f64,
    /// Also run the finite-difference oracle and add comparison columns.
    #[arg(long)]
    oracle: bool,
    /// Where to write the oracle's own table.
    #[arg(long, requires = "oracle")]
    oracle_output: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    pot: PotentialArgs,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Interval lengths, comma separated.
    #[arg(long = "x", value_delimiter = ',', required = true)]
    x: Vec<f64>,
    #[arg(long, default_value_t = 10.0)]
    k_hi: f64,
    #[command(flatten)]
    scan: ScanArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct ScanArgs {
    /// Window-start step as a fraction of the window width.
    #[arg(long, default_value_t = 0.25)]
    stride: f64,
    /// Diagnostic multiplier on h(X); values below 1 should produce violations.
    #[arg(long, default_value_t = 1.0)]
    h_scale: f64,
    /// Momentum slack around each window.
    #[arg(long, default_value_t = 1e-8)]
    tau: f64,
}

#[derive(Args, Debug)]
struct SpacingArgs {
    #[command(flatten)]
    pot: PotentialArgs,
    #[arg(long = "x")]
    x: f64,
    #[arg(long)]
    k_lo: f64,
    #[arg(long)]
    k_hi: f64,
    /// Lower momentum for h(X); defaults to k_lo and may not exceed it.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    tau: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct NormsArgs {
    #[command(flatten)]
    pot: PotentialArgs,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Number of unit cells for the norms.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Trace at x = 2^grid_lo, ..., 2^grid_hi.
    #[arg(long, default_value_t = 0)]
    grid_lo: u32,
    #[arg(long, default_value_t = 16)]
    grid_hi: u32,
    /// Fit the growth exponent of the cumulative mass over 2^4..2^20.
    #[arg(long)]
    fit_exponent: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Potentials to sweep (repeatable); defaults to a standard family set.
    #[arg(long, short)]
    potential: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long = "x", value_delimiter = ',', default_value = "10,100")]
    x: Vec<f64>,
    #[arg(long, default_value_t = 10.0)]
    k_hi: f64,
    #[command(flatten)]
    scan: ScanArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SharpnessArgs {
    #[arg(long = "x")]
    x: f64,
    #[arg(long)]
    m: u64,
    #[arg(long)]
    epsilon: f64,
    #[command(flatten)]
    common: Common,
}

/// Why a run stopped, mapped onto the exit-code contract.
#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(spacing_core::Error),
}

impl From<spacing_core::Error> for Failure {
    fn from(e: spacing_core::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e)
        } else {
            Failure::Config(e.to_string())
        }
    }
}

/// Outcome of a completed run: the rendered output and whether every check passed.
struct Output {
    body: String,
    passed: bool,
}

struct Context {
    command: &'static str,
    potential: Option<PotentialSpec>,
    tol: Tolerance,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut ctx = Context {
        command: "",
        potential: None,
        tol: Tolerance::default(),
    };
    match run(cli, &mut ctx) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("{}", diagnostics(&ctx, &e));
            ExitCode::from(3)
        }
    }
}

fn diagnostics(ctx: &Context, e: &spacing_core::Error) -> String {
    let mut out = format!("error: numerical failure: {e}\ndiagnostics:\n");
    let _ = writeln!(out, "  command: {}", ctx.command);
    if let Some(spec) = &ctx.potential {
        let _ = writeln!(out, "  potential: {}", serde_json::to_string(spec).unwrap_or_default());
    }
    let _ = writeln!(out, "  rtol: {:e}", ctx.tol.rel);
    let _ = writeln!(out, "  atol: {:e}", ctx.tol.abs);
    let _ = write!(out, "  hint: loosen the tolerances or shrink the window");
    out
}

fn run(cli: Cli, ctx: &mut Context) -> Result<bool, Failure> {
    let common = match &cli.command {
        Command::Eigenvalues(a) => &a.common,
        Command::VerifyBound(a) => &a.common,
        Command::Spacing(a) => &a.common,
        Command::Norms(a) => &a.common,
        Command::Sweep(a) => &a.common,
        Command::Sharpness(a) => &a.common,
    }
    .clone();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    }
    ctx.tol = tolerance(&common)?;

    let out = match cli.command {
        Command::Eigenvalues(a) => {
            ctx.command = "eigenvalues";
            cmd_eigenvalues(a, ctx)?
        }
        Command::VerifyBound(a) => {
            ctx.command = "verify-bound";
            cmd_verify(a, ctx)?
        }
        Command::Spacing(a) => {
            ctx.command = "spacing";
            cmd_spacing(a, ctx)?
        }
        Command::Norms(a) => {
            ctx.command = "norms";
            cmd_norms(a, ctx)?
        }
        Command::Sweep(a) => {
            ctx.command = "sweep";
            cmd_sweep(a, ctx)?
        }
        Command::Sharpness(a) => {
            ctx.command = "sharpness";
            cmd_sharpness(a)?
        }
    };
    emit(common.output.as_deref(), &out.body)?;
    Ok(out.passed)
}

fn tolerance(common: &Common) -> Result<Tolerance, Failure> {
    let from_env = |name: &str| -> Result<Option<f64>, Failure> {
        match std::env::var(name) {
            Ok(s) => s
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| Failure::Config(format!("{name}={s:?} is not a number"))),
            Err(_) => Ok(None),
        }
    };
    let default = Tolerance::default();
    let tol = Tolerance::new(
        common.rtol.or(from_env(RTOL_ENV)?).unwrap_or(default.rel),
        common.atol.or(from_env(ATOL_ENV)?).unwrap_or(default.abs),
    );
    tol.validate()?;
    Ok(tol)
}

fn emit(path: Option<&Path>, body: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, body).map_err(|e| Failure::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(body.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(Failure::Config(format!("cannot write to stdout: {e}")))
                }
                _ => Ok(()),
            }
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialise");
    s.push('\n');
    s
}

fn load_spec(text: &str, seed: Option<u64>) -> Result<PotentialSpec, Failure> {
    let doc = if text.trim_start().starts_with('{') {
        text.to_string()
    } else {
        std::fs::read_to_string(text).map_err(|e| Failure::Config(format!("cannot read potential {text}: {e}")))?
    };
    let mut spec: PotentialSpec = doc.parse()?;
    if let Some(s) = seed {
        match &mut spec.family {
            Family::RandomDecaying { seed, .. } => *seed = s,
            other => eprintln!("warning: --seed ignored for the {} family", other.tag()),
        }
    }
    Ok(spec)
}

fn load_potential(args: &PotentialArgs, ctx: &mut Context) -> Result<Potential, Failure> {
    let spec = load_spec(&args.potential, args.seed)?;
    ctx.potential = Some(spec.clone());
    Ok(Potential::new(spec)?)
}

#[derive(Serialize)]
struct EigenvalueReport<'a> {
    potential: &'a PotentialSpec,
    eigenvalues: &'a EigenvalueSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<&'a EigenvalueSet>,
}

fn cmd_eigenvalues(a: EigenvaluesArgs, ctx: &mut Context) -> Result<Output, Failure> {
    let pot = load_potential(&a.pot, ctx)?;
    let opts = SearchOptions {
        tol: ctx.tol,
        ..SearchOptions::default()
    };
    let set = eigenvalues_in_window_with(&pot, a.x, a.k_lo, a.k_hi, &opts)?;
    for w in &set.warnings {
        eprintln!("warning: {w}");
    }
    let oracle = if a.oracle {
        let (e_lo, e_hi) = (a.k_lo * a.k_lo, a.k_hi * a.k_hi);
        let o = fd_oracle_eigenvalues(&pot, a.x, e_lo, e_hi, &OracleConfig::for_window(a.x, e_hi))?;
        for w in &o.warnings {
            eprintln!("warning: oracle: {w}");
        }
        if o.len() != set.len() {
            eprintln!("warning: shooting found {} eigenvalues, oracle {}", set.len(), o.len());
        }
        Some(o)
    } else {
        None
    };
    if let (Some(path), Some(o)) = (&a.oracle_output, &oracle) {
        let body = match a.common.format {
            Format::Csv => eigenvalue_csv(o),
            Format::Json => to_json(&EigenvalueReport {
                potential: pot.spec(),
                eigenvalues: o,
                oracle: None,
            }),
        };
        emit(Some(path), &body)?;
    }
    let body = match a.common.format {
        Format::Csv => match &oracle {
            Some(o) => comparison_csv(&set, o),
            None => eigenvalue_csv(&set),
        },
        Format::Json => to_json(&EigenvalueReport {
            potential: pot.spec(),
            eigenvalues: &set,
            oracle: oracle.as_ref(),
        }),
    };
    Ok(Output { body, passed: true })
}

fn verify_options(scan: &ScanArgs, tol: Tolerance) -> VerifyOptions {
    VerifyOptions {
        stride_fraction: scan.stride,
        h_scale: scan.h_scale,
        tau: scan.tau,
        tol,
    }
}

fn cmd_verify(a: VerifyArgs, ctx: &mut Context) -> Result<Output, Failure> {
    let pot = load_potential(&a.pot, ctx)?;
    let report = bound_report(&pot, a.a, &a.x, a.k_hi, &verify_options(&a.scan, ctx.tol))?;
    if !report.passed() {
        eprintln!(
            "{} of {} windows hold no eigenvalue",
            report.violations.len(),
            report.windows_checked
        );
    }
    let body = match a.common.format {
        Format::Csv => bound_csv(&report),
        Format::Json => to_json(&report),
    };
    Ok(Output {
        passed: report.passed(),
        body,
    })
}

#[derive(Serialize)]
struct SpacingReport<'a> {
    potential: &'a PotentialSpec,
    #[serde(rename = "X")]
    x_end: f64,
    a: f64,
    h: f64,
    tau: f64,
    rows: Vec<SpacingRow>,
    max_dk_over_h: Option<f64>,
    warnings: Vec<String>,
}

fn cmd_spacing(a: SpacingArgs, ctx: &mut Context) -> Result<Output, Failure> {
    let pot = load_potential(&a.pot, ctx)?;
    let lower = a.a.unwrap_or(a.k_lo);
    if a.k_lo < lower {
        return Err(Failure::Config(format!("--k-lo {} lies below --a {lower}", a.k_lo)));
    }
    if a.tau.is_nan() || a.tau < 0.0 {
        return Err(Failure::Config(format!("--tau must be >= 0, got {}", a.tau)));
    }
    let h = h_of(&pot, lower, a.x)?;
    let opts = SearchOptions {
        tol: ctx.tol,
        ..SearchOptions::default()
    };
    let set = eigenvalues_in_window_with(&pot, a.x, a.k_lo, a.k_hi, &opts)?;
    let mut warnings = set.warnings.clone();
    if set.len() < 2 {
        warnings.push(format!(
            "{} eigenvalue(s) in the window; no spacings to report",
            set.len()
        ));
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let rows = spacing_rows(&set, h);
    let max = rows.iter().map(|r| r.dk_over_h).reduce(f64::max);
    let passed = max.is_none_or(|m| m <= 1.0 + a.tau);
    if !passed {
        eprintln!("largest gap is {} h(X)", max.unwrap_or_default());
    }
    let body = match a.common.format {
        Format::Csv => spacing_csv(&rows),
        Format::Json => to_json(&SpacingReport {
            potential: pot.spec(),
            x_end: a.x,
            a: lower,
            h,
            tau: a.tau,
            rows,
            max_dk_over_h: max,
            warnings,
        }),
    };
    Ok(Output { body, passed })
}

fn cmd_norms(a: NormsArgs, ctx: &mut Context) -> Result<Output, Failure> {
    let pot = load_potential(&a.pot, ctx)?;
    if a.grid_lo > a.grid_hi || a.grid_hi > 40 {
        return Err(Failure::Config(format!(
            "need grid_lo <= grid_hi <= 40, got {}..{}",
            a.grid_lo, a.grid_hi
        )));
    }
    let grid = dyadic_grid(a.grid_lo, a.grid_hi);
    let report: NormReport = norm_report(&pot, a.p, a.n, &grid, a.fit_exponent)?;
    if !report.weak_cap_holds {
        eprintln!("growth trace exceeds the weak-norm cap {}", report.weak_cap);
    }
    let body = match a.common.format {
        Format::Csv => trace_csv(&growth_check_weak(&pot, a.p, &grid)?),
        Format::Json => to_json(&report),
    };
    Ok(Output {
        passed: report.weak_cap_holds,
        body,
    })
}

fn default_sweep() -> Vec<PotentialSpec> {
    vec![
        PotentialSpec::zero(),
        PotentialSpec::exponential(4.0, 1.0),
        PotentialSpec::power(1.0, 0.5),
        PotentialSpec::wigner_von_neumann(2.0, 2.0, 1.0),
        PotentialSpec::step_power(1.0, 0.5),
    ]
}

#[derive(Serialize)]
struct SweepRow {
    potential: PotentialSpec,
    windows_checked: usize,
    violations: usize,
    min_count: Option<u64>,
    passed: bool,
}

impl SweepRow {
    fn from_report(r: &BoundReport) -> Self {
        Self {
            potential: r.potential.clone(),
            windows_checked: r.windows_checked,
            violations: r.violations.len(),
            min_count: r.slack_stats.iter().filter_map(|s| s.min_count).min(),
            passed: r.passed(),
        }
    }
}

#[derive(Serialize)]
struct SweepReport {
    a: f64,
    #[serde(rename = "X_values")]
    x_values: Vec<f64>,
    k_hi: f64,
    h_scale: f64,
    rows: Vec<SweepRow>,
    total_violations: usize,
}

fn cmd_sweep(a: SweepArgs, ctx: &mut Context) -> Result<Output, Failure> {
    let specs = if a.potential.is_empty() {
        default_sweep()
    } else {
        a.potential
            .iter()
            .map(|p| load_spec(p, a.seed))
            .collect::<Result<Vec<_>, _>>()?
    };
    let opts = verify_options(&a.scan, ctx.tol);
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        ctx.potential = Some(spec.clone());
        let pot = Potential::new(spec)?;
        rows.push(SweepRow::from_report(&bound_report(&pot, a.a, &a.x, a.k_hi, &opts)?));
    }
    let total: usize = rows.iter().map(|r| r.violations).sum();
    let body = match a.common.format {
        Format::Csv => {
            let mut s = String::from("family,potential,windows_checked,violations,min_count,passed\n");
            for r in &rows {
                let doc = serde_json::to_string(&r.potential).expect("spec serialises");
                let _ = writeln!(
                    s,
                    "{},\"{}\",{},{},{},{}",
                    r.potential.family.tag(),
                    doc.replace('"', "\"\""),
                    r.windows_checked,
                    r.violations,
                    r.min_count.map(|c| c.to_string()).unwrap_or_default(),
                    r.passed
                );
            }
            s
        }
        Format::Json => to_json(&SweepReport {
            a: a.a,
            x_values: a.x.clone(),
            k_hi: a.k_hi,
            h_scale: a.scan.h_scale,
            rows,
            total_violations: total,
        }),
    };
    Ok(Output {
        body,
        passed: total == 0,
    })
}

#[derive(Serialize)]
struct SharpnessReport {
    #[serde(rename = "X")]
    x_end: f64,
    m: u64,
    epsilon: f64,
    k_lo: f64,
    k_hi: f64,
    eigenvalues_found: usize,
    empty: bool,
}

fn cmd_sharpness(a: SharpnessArgs) -> Result<Output, Failure> {
    let (lo, hi) = sharpness_window(a.x, a.m, a.epsilon)?;
    let zero = Potential::new(PotentialSpec::zero())?;
    let set = spacing_core::eigenvalues_in_window(&zero, a.x, lo, hi)?;
    // the window is open, so roots on its closed edges do not count
    let found = set.eigen_momenta.iter().filter(|&&k| k > lo && k < hi).count();
    let report = SharpnessReport {
        x_end: a.x,
        m: a.m,
        epsilon: a.epsilon,
        k_lo: lo,
        k_hi: hi,
        eigenvalues_found: found,
        empty: found == 0,
    };
    let body = match a.common.format {
        Format::Csv => format!(
            "X,m,epsilon,k_lo,k_hi,eigenvalues_found,empty\n{},{},{},{},{},{},{}\n",
            fmt_f64(report.x_end),
            report.m,
            fmt_f64(report.epsilon),
            fmt_f64(report.k_lo),
            fmt_f64(report.k_hi),
            report.eigenvalues_found,
            report.empty
        ),
        Format::Json => to_json(&report),
    };
    Ok(Output {
        passed: report.empty,
        body,
    })
}
