//! Polyhedral outer approximations of the stable-set SDP bound and the
//! eigenvector cutting-plane loop that tightens them.
//!
//! The variable is the packed upper triangle of `X`. Every relaxation solves
//!
//! ```text
//! max ⟨eeᵀ, X⟩   s.t.  ⟨A + I, X⟩ = 1,  X ≥ 0 entrywise,
//!                      ⟨G, X⟩ ≥ 0 for every cone generator G,
//!                      dᵀ X d ≥ 0 for every cut d.
//! ```
//!
//! With the diagonally dominant generators this is the DD* outer
//! approximation of the PSD cone; with the expanded SD bases over a parameter
//! set it is the tighter SDB* approximation.

use std::fmt;
use std::io::{Read, Write};
use std::time::Instant;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::cones::dual_cone_rows;
use crate::error::{Error, Result};
use crate::graphio::Graph;
use crate::lp::{self, LinearProgram, LpStatus, Sense, SparseRow};
use crate::sdbasis::{sdb_generators, BasisMatrix, ParameterSet};
use crate::symmat::{jacobi_eigen, packed_index, packed_len, unpack_index, SymMatrix, DEFAULT_EIGEN_TOL};

/// Default threshold below which an eigenvalue counts as negative.
pub const DEFAULT_PSD_TOL: f64 = 1e-6;

/// Default number of eigenvector cuts per iteration.
pub const DEFAULT_MAX_CUTS: usize = 2;

/// LP pivot tolerance of the relaxation solves.
pub const LP_TOL: f64 = 1e-9;

/// Cone whose dual approximates the PSD cone.
#[derive(Debug, Clone, PartialEq)]
pub enum Approx {
    /// Diagonally dominant: `(e_i ± e_j)(e_i ± e_j)ᵀ`, `n²` rows.
    Dd,
    /// Expanded SD bases over a parameter set.
    Sdb(ParameterSet),
}

impl Approx {
    /// SDB over `{±1, ±1 ± √2}`.
    pub fn sdb() -> Self {
        Approx::Sdb(ParameterSet::sdb())
    }

    pub fn generators(&self, n: usize) -> Vec<BasisMatrix> {
        match self {
            // type I ∪ type II with the shared diagonal members merged
            Approx::Dd => sdb_generators(n, &ParameterSet::type1_and_type2()),
            Approx::Sdb(params) => sdb_generators(n, params),
        }
    }
}

impl fmt::Display for Approx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Approx::Dd => write!(f, "DD"),
            Approx::Sdb(_) => write!(f, "SDB"),
        }
    }
}

/// A stable-set relaxation together with the cuts added so far.
#[derive(Debug, Clone)]
pub struct Relaxation {
    n: usize,
    objective: SparseRow,
    equality: SparseRow,
    generators: Vec<BasisMatrix>,
    cone_rows: Vec<SparseRow>,
    cuts: Vec<Vec<f64>>,
}

/// Builds the initial relaxation of `g` for `approx`.
pub fn build_relaxation(g: &Graph, approx: &Approx) -> Result<Relaxation> {
    let n = g.n();
    if n == 0 {
        return Err(Error::InvalidArgument("graph has no vertices".into()));
    }
    let dim = packed_len(n);
    let objective = SparseRow::new(
        (0..dim)
            .map(|k| {
                let (i, j) = unpack_index(n, k);
                (k, if i == j { 1.0 } else { 2.0 })
            })
            .collect(),
    );
    let equality = SparseRow::new(
        (0..n)
            .map(|i| (packed_index(n, i, i), 1.0))
            .chain(g.edges().iter().map(|&(i, j)| (packed_index(n, i, j), 2.0)))
            .collect(),
    );
    let generators = approx.generators(n);
    let cone_rows = dual_cone_rows(&generators, n);
    Ok(Relaxation {
        n,
        objective,
        equality,
        generators,
        cone_rows,
        cuts: Vec::new(),
    })
}

impl Relaxation {
    pub fn n(&self) -> usize {
        self.n
    }

    /// LP column of `X_ij`.
    pub fn column(&self, i: usize, j: usize) -> usize {
        packed_index(self.n, i, j)
    }

    /// Matrix entry `(i, j)`, `i <= j`, held by LP column `k`.
    pub fn entry(&self, k: usize) -> (usize, usize) {
        unpack_index(self.n, k)
    }

    pub fn generators(&self) -> &[BasisMatrix] {
        &self.generators
    }

    pub fn cuts(&self) -> &[Vec<f64>] {
        &self.cuts
    }

    /// Adds the cut `dᵀ X d ≥ 0`; `d` is rescaled to unit length.
    pub fn add_cut(&mut self, d: &[f64]) -> Result<()> {
        if d.len() != self.n {
            return Err(Error::DimensionMismatch {
                left: d.len(),
                right: self.n,
            });
        }
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidArgument(
                "cut vector must be finite and nonzero".into(),
            ));
        }
        self.cuts.push(d.iter().map(|v| v / norm).collect());
        Ok(())
    }

    /// Packed row of `X ↦ dᵀ X d`.
    fn cut_row(&self, d: &[f64]) -> SparseRow {
        let n = self.n;
        let mut entries = Vec::with_capacity(packed_len(n));
        for i in 0..n {
            entries.push((packed_index(n, i, i), d[i] * d[i]));
            for j in i + 1..n {
                entries.push((packed_index(n, i, j), 2.0 * d[i] * d[j]));
            }
        }
        SparseRow::new(entries)
    }

    /// The full LP: equality row, cone rows, then cut rows.
    pub fn to_lp(&self) -> LinearProgram {
        let mut prog = LinearProgram::new(packed_len(self.n), Sense::Maximize);
        prog.set_objective(self.objective.clone())
            .expect("valid objective");
        prog.add_eq(self.equality.clone(), 1.0).expect("valid row");
        for row in &self.cone_rows {
            prog.add_ge(row.clone(), 0.0).expect("valid row");
        }
        for d in &self.cuts {
            prog.add_ge(self.cut_row(d), 0.0).expect("valid row");
        }
        prog
    }
}

/// Pricing section size used for the relaxation solves.
const PRICING_SECTION: usize = 2500;

/// The LP dual of [`Relaxation::to_lp`]:
///
/// ```text
/// min t   s.t.  t·a₀ − Σ_r y_r g_r ≥ c,  y ≥ 0,
/// ```
///
/// with one row per packed entry of `X`. It has far fewer rows than the
/// primal has, and its row duals are the optimal `X`.
fn dual_lp(r: &Relaxation) -> LinearProgram {
    let primal = r.to_lp();
    let ge = primal.ge_rows();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); primal.num_vars()];
    for &(k, v) in primal.eq_rows()[0].0.entries() {
        cols[k].push((0, v));
    }
    for (row_index, (row, _)) in ge.iter().enumerate() {
        for &(k, v) in row.entries() {
            cols[k].push((1 + row_index, -v));
        }
    }
    let mut c = vec![0.0; primal.num_vars()];
    for &(k, v) in primal.objective().entries() {
        c[k] = v;
    }
    let mut dual = LinearProgram::new(1 + ge.len(), Sense::Minimize);
    dual.set_objective(SparseRow::new(vec![(0, 1.0)]))
        .expect("valid objective");
    for (col, ck) in cols.into_iter().zip(c) {
        dual.add_ge(SparseRow::new(col), ck).expect("valid row");
    }
    dual
}

/// Solves the current relaxation, returning the optimal `X` and bound.
pub fn solve_relaxation(r: &Relaxation) -> Result<(SymMatrix, f64)> {
    let options = lp::SolverOptions {
        pricing_section: PRICING_SECTION,
        ..lp::SolverOptions::with_tol(LP_TOL)
    };
    let solution = lp::solve_with(&dual_lp(r), &options)?;
    debug!("relaxation solved in {} simplex iterations", solution.iterations);
    match solution.status {
        LpStatus::Optimal => {
            let packed = solution
                .duals
                .expect("optimal duals")
                .into_iter()
                .map(|v| v.max(0.0))
                .collect();
            let x = SymMatrix::from_packed(r.n, packed)?;
            Ok((x, solution.objective_value.expect("optimal value")))
        }
        // primal infeasible ⇔ dual unbounded, and vice versa
        LpStatus::Unbounded => Err(Error::Infeasible),
        LpStatus::Infeasible => Err(Error::Unbounded),
    }
}

/// Unit eigenvectors of `x` with eigenvalue below `−psd_tol`, most negative
/// first, at most `max_cuts` of them.
pub fn generate_cuts(x: &SymMatrix, max_cuts: usize, psd_tol: f64) -> Result<Vec<Vec<f64>>> {
    Ok(cuts_from_spectrum(x, max_cuts, psd_tol)?.1)
}

/// `λ_min(x)` and the cuts of [`generate_cuts`].
fn cuts_from_spectrum(x: &SymMatrix, max_cuts: usize, psd_tol: f64) -> Result<(f64, Vec<Vec<f64>>)> {
    if max_cuts == 0 {
        return Err(Error::InvalidArgument("max_cuts must be at least 1".into()));
    }
    if !(psd_tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "psd_tol must be positive, got {psd_tol}"
        )));
    }
    if x.n() == 0 {
        return Ok((0.0, Vec::new()));
    }
    let eig = jacobi_eigen(x, DEFAULT_EIGEN_TOL)?;
    let lambda_min = eig.eigenvalues()[0];
    let cuts = eig
        .eigenvalues()
        .iter()
        .take(max_cuts)
        .enumerate()
        .take_while(|(_, &lam)| lam < -psd_tol)
        .map(|(k, _)| {
            let v = eig.eigenvector(k);
            let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            v.iter().map(|c| c / norm).collect()
        })
        .collect();
    Ok((lambda_min, cuts))
}

/// One row of the cutting-plane log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iter: usize,
    pub bound: f64,
    pub lambda_min: f64,
    /// Cuts appended to the relaxation after this iterate.
    pub cuts_added: usize,
    /// Wall-clock seconds since the loop started, sampled after the solve.
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopCriteria {
    pub psd_tol: f64,
    pub max_iterations: Option<usize>,
    pub time_limit_s: Option<f64>,
    pub max_cuts: usize,
}

impl StopCriteria {
    pub fn iterations(max_iterations: usize) -> Self {
        StopCriteria {
            psd_tol: DEFAULT_PSD_TOL,
            max_iterations: Some(max_iterations),
            time_limit_s: None,
            max_cuts: DEFAULT_MAX_CUTS,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.psd_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "psd_tol must be positive, got {}",
                self.psd_tol
            )));
        }
        if self.max_iterations.is_none() && self.time_limit_s.is_none() {
            return Err(Error::InvalidArgument("need an iteration or time limit".into()));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if let Some(t) = self.time_limit_s {
            if !(t >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "time limit must be nonnegative, got {t}"
                )));
            }
        }
        if self.max_cuts == 0 {
            return Err(Error::InvalidArgument("max_cuts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// `λ_min(X*) ≥ −psd_tol`.
    Converged,
    IterationLimit,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct Run {
    pub log: Vec<IterationLog>,
    pub stop: StopReason,
    /// Optimal `X` of the last solved relaxation.
    pub x: SymMatrix,
}

/// A run aborted by an LP or eigensolver error; `log` holds the completed
/// iterations.
#[derive(Debug)]
pub struct Aborted {
    pub log: Vec<IterationLog>,
    pub error: Error,
}

impl fmt::Display for Aborted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cutting-plane run aborted after {} iterations: {}",
            self.log.len(),
            self.error
        )
    }
}

impl std::error::Error for Aborted {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Cutting-plane loop: solve, stop if `X*` is numerically PSD or a limit is
/// hit, otherwise add the most negative eigenvectors as cuts and repeat.
pub fn cutting_plane(g: &Graph, approx: &Approx, stop: &StopCriteria) -> std::result::Result<Run, Aborted> {
    cutting_plane_with(g, approx, stop, |_, _, _| {})
}

/// [`cutting_plane`] with an observer called once per iterate with the log
/// entry, the iterate `X*` and the cuts about to be added.
pub fn cutting_plane_with<F>(
    g: &Graph,
    approx: &Approx,
    stop: &StopCriteria,
    mut observe: F,
) -> std::result::Result<Run, Aborted>
where
    F: FnMut(&IterationLog, &SymMatrix, &[Vec<f64>]),
{
    let mut log = Vec::new();
    let abort = |log: Vec<IterationLog>, error: Error| Aborted { log, error };
    if let Err(e) = stop.validate() {
        return Err(abort(log, e));
    }
    let mut relaxation = match build_relaxation(g, approx) {
        Ok(r) => r,
        Err(e) => return Err(abort(log, e)),
    };
    let start = Instant::now();
    for iter in 0.. {
        let (x, bound) = match solve_relaxation(&relaxation) {
            Ok(v) => v,
            Err(e) => return Err(abort(log, e)),
        };
        let elapsed_s = start.elapsed().as_secs_f64();
        let (lambda_min, mut cuts) = match cuts_from_spectrum(&x, stop.max_cuts, stop.psd_tol) {
            Ok(v) => v,
            Err(e) => return Err(abort(log, e)),
        };
        let reason = if cuts.is_empty() {
            Some(StopReason::Converged)
        } else if stop.max_iterations.is_some_and(|m| iter + 1 >= m) {
            Some(StopReason::IterationLimit)
        } else if stop.time_limit_s.is_some_and(|t| elapsed_s >= t) {
            Some(StopReason::TimeLimit)
        } else {
            None
        };
        if reason.is_some() {
            cuts.clear();
        }
        let entry = IterationLog {
            iter,
            bound,
            lambda_min,
            cuts_added: cuts.len(),
            elapsed_s,
        };
        info!(
            "{approx} iter {iter}: bound {bound:.6}, lambda_min {lambda_min:.3e}, {} cuts, {elapsed_s:.2}s",
            cuts.len()
        );
        observe(&entry, &x, &cuts);
        log.push(entry);
        if let Some(stop) = reason {
            return Ok(Run { log, stop, x });
        }
        for d in &cuts {
            relaxation.add_cut(d).expect("eigenvector cut is valid");
        }
    }
    unreachable!("loop only exits through return")
}

/// Relative gap `|f* − f_k| / |f*| · 100`.
pub fn gap(f_k: f64, f_star: f64) -> Result<f64> {
    if f_star == 0.0 || !f_star.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "reference bound must be finite and nonzero, got {f_star}"
        )));
    }
    Ok((f_star - f_k).abs() / f_star.abs() * 100.0)
}

/// Writes `iter,bound,lambda_min,cuts_added,elapsed_s` CSV with a header.
pub fn write_log_csv<W: Write>(log: &[IterationLog], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for entry in log {
        w.serialize(entry)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_log_csv<R: Read>(input: R) -> Result<Vec<IterationLog>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_log_json<W: Write>(log: &[IterationLog], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, log)?;
    Ok(())
}

pub fn read_log_json<R: Read>(input: R) -> Result<Vec<IterationLog>> {
    Ok(serde_json::from_reader(input)?)
}
