//! Command-line front end. [`run`] parses arguments, executes one subcommand
//! and returns the process exit code:
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success, or a membership check that holds |
//! | 1    | a membership check that fails             |
//! | 2    | usage, parse or IO error                  |
//! | 3    | numerical failure                         |

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cones::{cone_membership, is_dd, is_sdd, Certificate};
use crate::error::{Error, Result};
use crate::graphio::{erdos_renyi, parse_dimacs, render_dimacs, Graph};
use crate::lp::write_mps;
use crate::sdbasis::{angles, basis_rank, sdb_generators, ParameterSet};
use crate::stableset::{
    build_relaxation, cutting_plane, gap, read_log_csv, read_log_json, write_log_csv, write_log_json, Approx,
    IterationLog, StopCriteria, DEFAULT_MAX_CUTS, DEFAULT_PSD_TOL,
};
use crate::symmat::{min_eigenvalue, SymMatrix, DEFAULT_EIGEN_TOL};

/// Iteration cap of `solve` when neither a cap nor a time limit is given.
pub const DEFAULT_MAX_ITERS: usize = 100;

/// Report checkpoints in seconds when none are given.
pub const DEFAULT_CHECKPOINTS: [f64; 2] = [300.0, 600.0];

#[derive(Debug, Parser)]
#[command(
    name = "conekit",
    version,
    about = "Polyhedral approximations of the PSD cone and stable-set bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample an Erdős–Rényi graph and write it as DIMACS.
    GenGraph {
        /// n,p,seed
        #[arg(long)]
        er: ErSpec,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the cutting-plane method on a graph.
    Solve(SolveArgs),
    /// Test a matrix (JSON `{n, upper}`) for cone membership.
    Check {
        matrix: PathBuf,
        #[arg(long, value_enum)]
        test: CheckKind,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Inspect expanded SD bases: generator count, ranks and angles.
    Bases {
        n: usize,
        /// Comma-separated parameters, or `H` for {±1, ±1±√2}.
        #[arg(allow_hyphen_values = true)]
        alphas: String,
    },
    /// Compare cutting-plane logs at time checkpoints.
    Report {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        ref_bound: Option<f64>,
        /// Comma-separated checkpoints in seconds.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<f64>>,
        /// Also write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    method: Method,
    /// n,p,seed
    #[arg(long, conflicts_with = "dimacs", required_unless_present = "dimacs")]
    er: Option<ErSpec>,
    #[arg(long)]
    dimacs: Option<PathBuf>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    time_limit_s: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_PSD_TOL)]
    psd_tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_CUTS)]
    max_cuts: usize,
    /// Reference bound f* for gap reporting.
    #[arg(long)]
    ref_bound: Option<f64>,
    /// Log path; `.json` writes JSON, anything else CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the initial relaxation LP as MPS and exit.
    #[arg(long)]
    mps: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Cpdd,
    Cpsdb,
}

impl Method {
    pub fn approx(self) -> Approx {
        match self {
            Method::Cpdd => Approx::Dd,
            Method::Cpsdb => Approx::sdb(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    Dd,
    Sdd,
    Psd,
    ConeDd,
    ConeSdb,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErSpec {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
}

impl FromStr for ErSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [n, p, seed] = parts[..] else {
            return Err(format!("expected n,p,seed, got {s:?}"));
        };
        Ok(ErSpec {
            n: n.parse().map_err(|e| format!("bad n {n:?}: {e}"))?,
            p: p.parse().map_err(|e| format!("bad p {p:?}: {e}"))?,
            seed: seed.parse().map_err(|e| format!("bad seed {seed:?}: {e}"))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    Dimacs(PathBuf),
    Er(ErSpec),
}

impl GraphSource {
    pub fn load(&self) -> Result<Graph> {
        match self {
            GraphSource::Dimacs(path) => parse_dimacs(&fs::read_to_string(path)?),
            GraphSource::Er(er) => erdos_renyi(er.n, er.p, er.seed),
        }
    }
}

/// Everything `solve` needs; exactly one graph source by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub source: GraphSource,
    pub stop: StopCriteria,
    pub ref_bound: Option<f64>,
    pub out: Option<PathBuf>,
    pub mps: Option<PathBuf>,
}

impl From<SolveArgs> for RunConfig {
    fn from(a: SolveArgs) -> Self {
        let source = match (a.er, a.dimacs) {
            (Some(er), _) => GraphSource::Er(er),
            (None, Some(path)) => GraphSource::Dimacs(path),
            (None, None) => unreachable!("clap requires a graph source"),
        };
        let max_iterations = match (a.max_iters, a.time_limit_s) {
            (None, None) => Some(DEFAULT_MAX_ITERS),
            (k, _) => k,
        };
        RunConfig {
            method: a.method,
            source,
            stop: StopCriteria {
                psd_tol: a.psd_tol,
                max_iterations,
                time_limit_s: a.time_limit_s,
                max_cuts: a.max_cuts,
            },
            ref_bound: a.ref_bound,
            out: a.out,
            mps: a.mps,
        }
    }
}

/// Exit code for an error: 3 for numerical trouble, 2 for everything the
/// user can fix.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoConvergence { .. }
        | Error::RankDeficient { .. }
        | Error::Inconsistent { .. }
        | Error::IterationLimit { .. }
        | Error::Infeasible
        | Error::Unbounded
        | Error::Numerical(_) => 3,
        Error::DimensionMismatch { .. }
        | Error::InvalidArgument(_)
        | Error::Parse { .. }
        | Error::TooLarge { .. }
        | Error::Io(_)
        | Error::Json(_)
        | Error::Csv(_) => 2,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Normal output goes to `out`, diagnostics to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::GenGraph { er, out: path } => cmd_gen_graph(er, &path, out),
        Command::Solve(args) => cmd_solve(&args.into(), out),
        Command::Check { matrix, test, tol } => cmd_check(&matrix, test, tol, out),
        Command::Bases { n, alphas } => cmd_bases(n, &alphas, out),
        Command::Report {
            logs,
            ref_bound,
            checkpoints,
            out: csv_path,
        } => {
            let checkpoints = checkpoints.unwrap_or_else(|| DEFAULT_CHECKPOINTS.to_vec());
            cmd_report(&logs, ref_bound, &checkpoints, csv_path.as_deref(), out)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn cmd_gen_graph(er: ErSpec, path: &Path, out: &mut dyn Write) -> Result<i32> {
    let g = erdos_renyi(er.n, er.p, er.seed)?;
    fs::write(path, render_dimacs(&g))?;
    writeln!(out, "n {} m {}", g.n(), g.num_edges())?;
    Ok(0)
}

pub fn cmd_solve(config: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let g = config.source.load()?;
    let approx = config.method.approx();
    if let Some(path) = &config.mps {
        let relaxation = build_relaxation(&g, &approx)?;
        fs::write(path, write_mps(&relaxation.to_lp()))?;
        writeln!(out, "wrote {}", path.display())?;
        return Ok(0);
    }
    if let Some(f) = config.ref_bound {
        // reject a bad f* before spending time on the run
        gap(0.0, f)?;
    }
    writeln!(out, "graph n {} m {}", g.n(), g.num_edges())?;
    let (log, outcome) = match cutting_plane(&g, &approx, &config.stop) {
        Ok(run) => (run.log, Ok(run.stop)),
        Err(aborted) => (aborted.log, Err(aborted.error)),
    };
    if let Some(path) = &config.out {
        write_log(&log, path)?;
    }
    if let (Some(first), Some(last)) = (log.first(), log.last()) {
        let name = match config.method {
            Method::Cpdd => "CPDD",
            Method::Cpsdb => "CPSDB",
        };
        writeln!(out, "{name}_0 {:.6}", first.bound)?;
        writeln!(out, "final {:.6} after {} iterations", last.bound, log.len())?;
        if let Some(f) = config.ref_bound {
            writeln!(out, "gap_0 {:.4}%", gap(first.bound, f)?)?;
            writeln!(out, "gap_final {:.4}%", gap(last.bound, f)?)?;
        }
    }
    let stop = outcome?;
    writeln!(out, "stop {stop:?}")?;
    Ok(0)
}

fn write_log(log: &[IterationLog], path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    if is_json(path) {
        write_log_json(log, file)
    } else {
        write_log_csv(log, file)
    }
}

fn read_log(path: &Path) -> Result<Vec<IterationLog>> {
    let file = fs::File::open(path)?;
    if is_json(path) {
        read_log_json(file)
    } else {
        read_log_csv(file)
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn cmd_check(path: &Path, test: CheckKind, tol: f64, out: &mut dyn Write) -> Result<i32> {
    let m: SymMatrix = serde_json::from_str(&fs::read_to_string(path)?)?;
    let n = m.n();
    let member = match test {
        CheckKind::Dd => {
            let slack = (0..n)
                .map(|i| m.get(i, i) - (0..n).filter(|&j| j != i).map(|j| m.get(i, j).abs()).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            let member = is_dd(&m);
            writeln!(out, "{member}")?;
            writeln!(out, "min row slack {slack:e}")?;
            member
        }
        CheckKind::Sdd => {
            let member = is_sdd(&m, tol)?;
            writeln!(out, "{member}")?;
            member
        }
        CheckKind::Psd => {
            let lambda = if n == 0 {
                0.0
            } else {
                min_eigenvalue(&m, DEFAULT_EIGEN_TOL)?
            };
            let member = lambda >= -tol;
            writeln!(out, "{member}")?;
            writeln!(out, "lambda_min {lambda:e}")?;
            member
        }
        CheckKind::ConeDd | CheckKind::ConeSdb => {
            let approx = if test == CheckKind::ConeDd {
                Approx::Dd
            } else {
                Approx::sdb()
            };
            let generators = approx.generators(n);
            let r = cone_membership(&m, &generators, tol)?;
            writeln!(out, "{}", r.member)?;
            match r.certificate {
                Certificate::Combination(gamma) => {
                    let used = gamma.iter().filter(|&&g| g > tol).count();
                    writeln!(out, "combination of {used} of {} generators", generators.len())?;
                }
                Certificate::Separation {
                    infeasibility,
                    separator,
                } => {
                    writeln!(out, "phase-one infeasibility {infeasibility:e}")?;
                    match separator {
                        Some(y) => writeln!(out, "separator {}", serde_json::to_string(&y)?)?,
                        None => writeln!(out, "no separator found")?,
                    }
                }
            }
            r.member
        }
    };
    Ok(if member { 0 } else { 1 })
}

fn parse_alphas(spec: &str) -> Result<ParameterSet> {
    if spec.trim().eq_ignore_ascii_case("h") {
        return Ok(ParameterSet::sdb());
    }
    let alphas = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad parameter {s:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    ParameterSet::new(alphas)
}

fn cmd_bases(n: usize, alphas: &str, out: &mut dyn Write) -> Result<i32> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let params = parse_alphas(alphas)?;
    let listed: Vec<String> = params.alphas().iter().map(|a| format!("{a}")).collect();
    writeln!(out, "parameters ({}): {}", params.len(), listed.join(", "))?;
    writeln!(out, "generators {}", sdb_generators(n, &params).len())?;
    writeln!(
        out,
        "{:>20} {:>5} {:>10} {:>10} {:>10} {:>10}",
        "alpha", "rank", "cos1", "cos2", "cos3", "cos4"
    )?;
    for &a in params.alphas() {
        let t = angles(a);
        writeln!(
            out,
            "{:>20} {:>5} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            a,
            basis_rank(n, a),
            t.cos_theta1,
            t.cos_theta2,
            t.cos_theta3,
            t.cos_theta4
        )?;
    }
    Ok(0)
}

/// Bound reached by time `t`: the last iteration finished at or before `t`.
/// The flag is set when `t` lies past the end of the log, i.e. the bound is
/// carried forward from the final iteration.
pub fn bound_at(log: &[IterationLog], t: f64) -> (Option<f64>, bool) {
    let bound = log
        .iter()
        .take_while(|e| e.elapsed_s <= t)
        .last()
        .map(|e| e.bound);
    let beyond = log.last().is_some_and(|e| t > e.elapsed_s);
    (bound, beyond)
}

fn cmd_report(
    paths: &[PathBuf],
    ref_bound: Option<f64>,
    checkpoints: &[f64],
    csv_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    if let Some(f) = ref_bound {
        gap(0.0, f)?;
    }
    let logs = paths.iter().map(|p| read_log(p)).collect::<Result<Vec<_>>>()?;

    let mut header = vec!["log".to_string(), "iters".to_string(), "first".to_string()];
    header.extend(checkpoints.iter().map(|t| format!("{t}s")));
    header.push("final".to_string());
    if ref_bound.is_some() {
        header.push("gap_first".to_string());
        header.extend(checkpoints.iter().map(|t| format!("gap_{t}s")));
        header.push("gap_final".to_string());
    }

    let fmt_bound = |b: Option<f64>| b.map_or("-".to_string(), |b| format!("{b:.6}"));
    let fmt_gap = |b: Option<f64>| match (b, ref_bound) {
        (Some(b), Some(f)) => format!("{:.4}", gap(b, f).expect("validated reference bound")),
        _ => "-".to_string(),
    };
    let mut table = Vec::new();
    let mut any_flagged = false;
    for (path, log) in paths.iter().zip(&logs) {
        let first = log.first().map(|e| e.bound);
        let last = log.last().map(|e| e.bound);
        let at: Vec<(Option<f64>, bool)> = checkpoints.iter().map(|&t| bound_at(log, t)).collect();
        any_flagged |= at.iter().any(|a| a.1);
        let mut row = vec![
            path.display().to_string(),
            log.len().to_string(),
            fmt_bound(first),
        ];
        row.extend(at.iter().map(|&(b, flagged)| {
            let s = fmt_bound(b);
            if flagged {
                s + "*"
            } else {
                s
            }
        }));
        row.push(fmt_bound(last));
        if ref_bound.is_some() {
            row.push(fmt_gap(first));
            row.extend(at.iter().map(|&(b, _)| fmt_gap(b)));
            row.push(fmt_gap(last));
        }
        table.push(row);
    }

    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            table
                .iter()
                .map(|r| r[c].len())
                .chain([header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut text = String::new();
    for row in std::iter::once(&header).chain(&table) {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (s, w))| {
                if c == 0 {
                    format!("{s:<w$}")
                } else {
                    format!("{s:>w$}")
                }
            })
            .collect();
        writeln!(text, "{}", cells.join("  ").trim_end()).expect("string write");
    }
    if any_flagged {
        writeln!(
            text,
            "* checkpoint past the end of the log; last bound carried forward"
        )
        .expect("string write");
    }
    out.write_all(text.as_bytes())?;

    if let Some(path) = csv_path {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&header)?;
        for row in &table {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    Ok(0)
}
