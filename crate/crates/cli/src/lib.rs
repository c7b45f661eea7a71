//! Command-line front end: argument handling, validation and CSV output.
//!
//! Options may also come from a `key = value` file given with `--config`; keys
//! are the long flag names without dashes, and the command line wins.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Parser, ValueEnum};

use walsh_ivp::exprparse::{parse, Expr};
use walsh_ivp::projection::{project, ModulusGrid};
use walsh_ivp::reference::{error_bound_mn, sup_error_eighths, ErrorTable, SupGrid};
use walsh_ivp::solver::find_n_star;
use walsh_ivp::{DiscreteSolution, Level, Method, Problem, QuadratureConfig};

/// Largest level searched for `n*`.
pub const N_STAR_SEARCH: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodChoice {
    Multistep,
    Linear,
    Both,
}

impl MethodChoice {
    fn methods(self) -> &'static [Method] {
        match self {
            MethodChoice::Multistep => &[Method::Multistep],
            MethodChoice::Linear => &[Method::Linear],
            MethodChoice::Both => &[Method::Multistep, Method::Linear],
        }
    }
}

/// Solve `y' + p(x) y = q(x)` on [0, 1) with `y(xi) = eta` by Walsh polynomials.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "walsh-ivp", version, args_override_self = true)]
pub struct Args {
    /// Coefficient p(x), e.g. "x^2"
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<String>,
    /// Right-hand side q(x), e.g. "1 - 2/x^3"
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    /// Initial point, 0 <= xi < 1
    #[arg(long, allow_negative_numbers = true)]
    pub xi: Option<f64>,
    /// Initial value y(xi)
    #[arg(long, allow_negative_numbers = true)]
    pub eta: Option<f64>,
    /// Resolution level; the solution has 2^n cells
    #[arg(long)]
    pub n: Option<u32>,
    /// Range of levels A..B (inclusive)
    #[arg(long, value_name = "A..B")]
    pub n_range: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<MethodChoice>,
    /// Exact solution y(x), used for error columns, the error table and M_n
    #[arg(long, allow_hyphen_values = true)]
    pub exact: Option<String>,
    /// Samples CSV path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Error table CSV path; needs --exact
    #[arg(long)]
    pub table_out: Option<PathBuf>,
    /// Sup-estimation points per eighth
    #[arg(long)]
    pub grid: Option<usize>,
    /// Extra uniformly spaced sample rows in the samples CSV
    #[arg(long)]
    pub plot_grid: Option<usize>,
    #[arg(long)]
    pub tol_abs: Option<f64>,
    #[arg(long)]
    pub tol_rel: Option<f64>,
    /// Run even when n is below n*
    #[arg(long)]
    pub force: bool,
    /// key = value file with defaults for any of the options above
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Args {
    /// Fill unset options from `other`.
    fn or(self, other: Args) -> Args {
        let levels_set = self.n.is_some() || self.n_range.is_some();
        Args {
            p: self.p.or(other.p),
            q: self.q.or(other.q),
            xi: self.xi.or(other.xi),
            eta: self.eta.or(other.eta),
            n: if levels_set { self.n } else { other.n },
            n_range: if levels_set { self.n_range } else { other.n_range },
            method: self.method.or(other.method),
            exact: self.exact.or(other.exact),
            out: self.out.or(other.out),
            table_out: self.table_out.or(other.table_out),
            grid: self.grid.or(other.grid),
            plot_grid: self.plot_grid.or(other.plot_grid),
            tol_abs: self.tol_abs.or(other.tol_abs),
            tol_rel: self.tol_rel.or(other.tol_rel),
            force: self.force || other.force,
            config: self.config,
        }
    }
}

/// How a run failed; maps to the process exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Numerical(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(e) => write!(f, "usage error: {e:#}"),
            Failure::Numerical(e) => write!(f, "numerical failure: {e:#}"),
        }
    }
}

fn usage(e: anyhow::Error) -> Failure {
    Failure::Usage(e)
}

/// Read a `key = value` file into the equivalent argument list.
pub fn config_file_args(path: &Path) -> anyhow::Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), lineno + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key == "config" {
            bail!("{}:{}: nested config files are not supported", path.display(), lineno + 1);
        }
        if key == "force" {
            match value {
                "true" => out.push("--force".to_string()),
                "false" => {}
                _ => bail!("{}:{}: force must be true or false", path.display(), lineno + 1),
            }
        } else {
            out.push(format!("--{key}={value}"));
        }
    }
    Ok(out)
}

/// A fully specified run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub p_src: String,
    pub q_src: String,
    pub p: Expr,
    pub q: Expr,
    pub xi: f64,
    pub eta: f64,
    /// Ascending levels to solve at.
    pub levels: Vec<u32>,
    pub method: MethodChoice,
    pub exact: Option<Expr>,
    pub out: Option<PathBuf>,
    pub table_out: Option<PathBuf>,
    pub grid: SupGrid,
    pub plot_grid: Option<usize>,
    pub quadrature: QuadratureConfig,
    pub force: bool,
}

fn parse_expr(name: &str, src: &str) -> anyhow::Result<Expr> {
    parse(src).map_err(|e| anyhow!("--{name} \"{src}\": {e}"))
}

fn parse_range(s: &str) -> anyhow::Result<Vec<u32>> {
    let (a, b) = s.split_once("..").ok_or_else(|| anyhow!("--n-range must look like A..B, got \"{s}\""))?;
    let a: u32 = a.trim().parse().with_context(|| format!("--n-range start \"{a}\""))?;
    let b: u32 = b.trim().parse().with_context(|| format!("--n-range end \"{b}\""))?;
    if a > b {
        bail!("--n-range {a}..{b} is empty");
    }
    Ok((a..=b).collect())
}

impl RunConfig {
    /// Resolve options; a missing or malformed option is a usage error.
    pub fn from_args(args: Args) -> Result<RunConfig, Failure> {
        let args = match &args.config {
            Some(path) => {
                let file_args = config_file_args(path).map_err(usage)?;
                let argv = std::iter::once("walsh-ivp".to_string()).chain(file_args);
                let from_file = Args::try_parse_from(argv).map_err(|e| usage(anyhow!("config file: {e}")))?;
                args.or(from_file)
            }
            None => args,
        };
        let p_src = args.p.ok_or_else(|| usage(anyhow!("--p is required")))?;
        let q_src = args.q.ok_or_else(|| usage(anyhow!("--q is required")))?;
        let xi = args.xi.ok_or_else(|| usage(anyhow!("--xi is required")))?;
        let eta = args.eta.ok_or_else(|| usage(anyhow!("--eta is required")))?;
        let levels = match (args.n, &args.n_range) {
            (Some(_), Some(_)) => return Err(usage(anyhow!("give either --n or --n-range, not both"))),
            (Some(n), None) => vec![n],
            (None, Some(r)) => parse_range(r).map_err(usage)?,
            (None, None) => return Err(usage(anyhow!("--n or --n-range is required"))),
        };
        let exact = args.exact.as_deref().map(|s| parse_expr("exact", s)).transpose().map_err(usage)?;
        if args.table_out.is_some() && exact.is_none() {
            return Err(usage(anyhow!("--table-out needs --exact")));
        }
        let defaults = QuadratureConfig::default();
        let quadrature = QuadratureConfig {
            abs_tol: args.tol_abs.unwrap_or(defaults.abs_tol),
            rel_tol: args.tol_rel.unwrap_or(defaults.rel_tol),
            ..defaults
        };
        quadrature.validate().map_err(|e| usage(e.into()))?;
        let grid = SupGrid { points_per_eighth: args.grid.unwrap_or(512), ..SupGrid::default() };
        if grid.points_per_eighth == 0 {
            return Err(usage(anyhow!("--grid must be positive")));
        }
        Ok(RunConfig {
            p: parse_expr("p", &p_src).map_err(usage)?,
            q: parse_expr("q", &q_src).map_err(usage)?,
            p_src,
            q_src,
            xi,
            eta,
            levels,
            method: args.method.unwrap_or(MethodChoice::Multistep),
            exact,
            out: args.out,
            table_out: args.table_out,
            grid,
            plot_grid: args.plot_grid,
            quadrature,
            force: args.force,
        })
    }

    fn problem(&self) -> anyhow::Result<Problem> {
        let (p, q) = (self.p.clone(), self.q.clone());
        Ok(Problem::new(move |x| p.eval(x), move |x| q.eval(x), self.xi, self.eta)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    /// The run cannot go ahead; the flag says whether it is a usage problem.
    Error { usage: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error { .. } => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Checks that need the parsed problem: range of `xi`, levels against `n*`, and
/// whether the linear method can run.
pub fn validate(cfg: &RunConfig) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut push = |severity, message: String| out.push(Finding { severity, message });
    if !(0.0..1.0).contains(&cfg.xi) {
        push(Severity::Error { usage: true }, format!("xi = {} is outside [0, 1)", cfg.xi));
        return out;
    }
    if let Some(&bad) = cfg.levels.iter().find(|&&n| n == 0 || n > Level::MAX) {
        push(Severity::Error { usage: true }, format!("level {bad} is outside 1..={}", Level::MAX));
        return out;
    }
    let p = |x: f64| cfg.p.eval(x);
    let q = |x: f64| cfg.q.eval(x);
    match find_n_star(&p, N_STAR_SEARCH, &cfg.quadrature) {
        Ok(n_star) => {
            if let Some(&n) = cfg.levels.iter().find(|&&n| n < n_star.get()) {
                let severity = if cfg.force { Severity::Warning } else { Severity::Error { usage: false } };
                push(
                    severity,
                    format!("n = {n} is below n* = {n_star}; the discrete problem may be singular (use --force to run anyway)"),
                );
            }
        }
        Err(e) => push(Severity::Warning, format!("n* not found: {e}")),
    }
    if cfg.method != MethodChoice::Multistep {
        for &n in &cfg.levels {
            let level = Level::new(n).expect("checked above");
            let singular = [("p", &p as &dyn Fn(f64) -> f64), ("q", &q)].into_iter().find_map(|(name, f)| {
                match project(f, level, &cfg.quadrature) {
                    Ok(s) => s.first_undefined().map(|c| format!("{name} is not integrable on cell {c}")),
                    Err(e) => Some(e.to_string()),
                }
            });
            if let Some(why) = singular {
                push(
                    Severity::Error { usage: false },
                    format!("the linear method needs integrable p and q, but at n = {n} {why}; use --method multistep"),
                );
                break;
            }
        }
    }
    out
}

/// `%g`-style formatting with 12 significant digits; `undefined` for missing or
/// non-finite values.
pub fn fmt_num(v: Option<f64>) -> String {
    let Some(v) = v.filter(|v| v.is_finite()) else {
        return "undefined".to_string();
    };
    if v == 0.0 {
        return "0".to_string();
    }
    const DIGITS: i32 = 12;
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..DIGITS).contains(&exp) {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (DIGITS - 1 - exp) as usize, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rows `x, y_approx[, y_exact, abs_err]` at every cell left end, plus `extra`
/// uniform points.
pub fn samples_csv(sol: &DiscreteSolution, exact: Option<&Expr>, extra: Option<usize>) -> String {
    let size = sol.level().size();
    let mut xs: Vec<f64> = (0..size).map(|i| i as f64 / size as f64).collect();
    if let Some(k) = extra.filter(|&k| k > 0) {
        xs.extend((0..k).map(|i| i as f64 / k as f64));
        xs.sort_by(f64::total_cmp);
        xs.dedup();
    }
    let mut out = String::from(if exact.is_some() { "x,y_approx,y_exact,abs_err\n" } else { "x,y_approx\n" });
    for x in xs {
        let y = sol.evaluate(x).ok().filter(|v| !v.is_nan());
        out.push_str(&fmt_num(Some(x)));
        out.push(',');
        out.push_str(&fmt_num(y));
        if let Some(e) = exact {
            let ye = e.eval(x);
            out.push(',');
            out.push_str(&fmt_num(Some(ye)));
            out.push(',');
            out.push_str(&fmt_num(y.map(|y| (y - ye).abs())));
        }
        out.push('\n');
    }
    out
}

pub fn table_csv(table: &ErrorTable) -> String {
    let mut out = String::from("n");
    for j in 1..=8 {
        out.push_str(&format!(",eighth_{j}"));
    }
    out.push('\n');
    for (n, row) in table.n_values.iter().zip(&table.rows) {
        out.push_str(&n.to_string());
        for v in row {
            out.push(',');
            out.push_str(&fmt_num(*v));
        }
        out.push('\n');
    }
    out
}

/// Run a resolved configuration, writing diagnostics to `report`.
pub fn run(cfg: &RunConfig, report: &mut dyn Write) -> Result<(), Failure> {
    let numerical = |e: anyhow::Error| Failure::Numerical(e);
    let io = |e: std::io::Error| Failure::Numerical(anyhow::Error::new(e).context("writing output"));
    let findings = validate(cfg);
    for f in &findings {
        eprintln!("{f}");
    }
    if let Some(f) = findings.iter().find(|f| matches!(f.severity, Severity::Error { .. })) {
        let e = anyhow!("{}", f.message);
        return Err(match f.severity {
            Severity::Error { usage: true } => Failure::Usage(e),
            _ => Failure::Numerical(e),
        });
    }

    let problem = cfg.problem().map_err(usage)?;
    let n_star = find_n_star(problem.p(), N_STAR_SEARCH, &cfg.quadrature).ok();
    writeln!(report, "p(x) = {}", cfg.p_src).map_err(io)?;
    writeln!(report, "q(x) = {}", cfg.q_src).map_err(io)?;
    writeln!(report, "xi = {}, eta = {}", fmt_num(Some(cfg.xi)), fmt_num(Some(cfg.eta))).map_err(io)?;
    match n_star {
        Some(l) => writeln!(report, "n* = {l}"),
        None => writeln!(report, "n* = not found up to {N_STAR_SEARCH}"),
    }
    .map_err(io)?;

    let exact = cfg.exact.clone();
    let y_exact = move |x: f64| exact.as_ref().map_or(f64::NAN, |e| e.eval(x));
    let mut table = ErrorTable { n_values: Vec::new(), rows: Vec::new() };
    let mut finest = None;
    for &n in &cfg.levels {
        let level = Level::new(n).map_err(|e| usage(e.into()))?;
        let diag = problem.diagnostics(level, N_STAR_SEARCH, &cfg.quadrature).map_err(|e| numerical(e.into()))?;
        let mut solutions = Vec::new();
        for &method in cfg.method.methods() {
            let sol = problem
                .solve(level, method, &cfg.quadrature)
                .with_context(|| format!("{method} solve at n = {n}"))
                .map_err(numerical)?;
            solutions.push(sol);
        }
        writeln!(report, "\n[n = {n}]").map_err(io)?;
        writeln!(report, "k* = {}", diag.k_star).map_err(io)?;
        writeln!(report, "max |p_n| / 2^n = {}", fmt_num(Some(diag.max_scaled_p))).map_err(io)?;
        writeln!(report, "determinant = {}", fmt_num(Some(diag.determinant))).map_err(io)?;
        let undefined = solutions[0].samples().defined_mask().iter().filter(|d| !**d).count();
        if undefined > 0 {
            writeln!(report, "undefined cells = {undefined}").map_err(io)?;
        }
        if let [m, l] = &solutions[..] {
            let diff = m
                .samples()
                .cells()
                .iter()
                .zip(l.samples().cells())
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            writeln!(report, "max |multistep - linear| = {}", fmt_num(Some(diff))).map_err(io)?;
        }
        if cfg.exact.is_some() {
            let bound = error_bound_mn(problem.p(), problem.q(), &y_exact, level, &ModulusGrid::default(), &cfg.quadrature)
                .map_err(|e| numerical(e.into()))?;
            let (a, b, c) = bound.terms;
            writeln!(
                report,
                "M_n = {} (integral modulus of q {}, |y| times integral modulus of p {}, scaled p times modulus of y {})",
                fmt_num(Some(bound.m_n)),
                fmt_num(Some(a)),
                fmt_num(Some(b)),
                fmt_num(Some(c))
            )
            .map_err(io)?;
            let row = sup_error_eighths(&solutions[0], &y_exact, &cfg.grid);
            let max = row.iter().flatten().copied().reduce(f64::max);
            writeln!(report, "sup error = {}", fmt_num(max)).map_err(io)?;
            table.n_values.push(level);
            table.rows.push(row);
        }
        finest = solutions.into_iter().next();
    }

    if let Some(path) = &cfg.out {
        let sol = finest.as_ref().expect("at least one level");
        std::fs::write(path, samples_csv(sol, cfg.exact.as_ref(), cfg.plot_grid))
            .with_context(|| format!("writing {}", path.display()))
            .map_err(numerical)?;
    }
    if let Some(path) = &cfg.table_out {
        std::fs::write(path, table_csv(&table))
            .with_context(|| format!("writing {}", path.display()))
            .map_err(numerical)?;
    }
    Ok(())
}

/// Parse, resolve and run; returns the exit code.
pub fn main_with_args<I, T>(argv: I, report: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = RunConfig::from_args(args).and_then(|cfg| run(&cfg, report));
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}
