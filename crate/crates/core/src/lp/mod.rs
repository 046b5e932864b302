//! Linear programs over nonnegative variables and a two-phase primal simplex.
//!
//! Every variable is implicitly `>= 0`; constraints are equalities or `>=`
//! inequalities given as sparse rows. [`solve`] runs a revised primal simplex
//! on the slack-augmented form with a sparse LU basis factorization.

mod lu;
mod mps;
mod simplex;

pub use mps::write_mps;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default pivot / optimality tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// A sparse row: `(column, coefficient)` pairs with distinct, sorted columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow {
    entries: Vec<(usize, f64)>,
}

impl SparseRow {
    /// Sorts by column, merges duplicate columns by summation and drops exact
    /// zeros.
    pub fn new(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        SparseRow { entries: merged }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseRow {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(c, &v)| (c, v))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(c, v)| v * x[c]).sum()
    }

    fn validate(&self, num_vars: usize) -> Result<()> {
        for &(c, v) in &self.entries {
            if c >= num_vars {
                return Err(Error::InvalidArgument(format!(
                    "column {c} out of range for {num_vars} variables"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "coefficient on column {c} is not finite"
                )));
            }
        }
        Ok(())
    }
}

/// `max|min cᵀx  s.t.  eq rows = rhs, ge rows >= rhs, x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    num_vars: usize,
    sense: Sense,
    objective: SparseRow,
    eq_rows: Vec<(SparseRow, f64)>,
    ge_rows: Vec<(SparseRow, f64)>,
}

impl LinearProgram {
    pub fn new(num_vars: usize, sense: Sense) -> Self {
        LinearProgram {
            num_vars,
            sense,
            objective: SparseRow::default(),
            eq_rows: Vec::new(),
            ge_rows: Vec::new(),
        }
    }

    pub fn set_objective(&mut self, objective: SparseRow) -> Result<()> {
        objective.validate(self.num_vars)?;
        self.objective = objective;
        Ok(())
    }

    pub fn add_eq(&mut self, row: SparseRow, rhs: f64) -> Result<()> {
        row.validate(self.num_vars)?;
        check_rhs(rhs)?;
        self.eq_rows.push((row, rhs));
        Ok(())
    }

    pub fn add_ge(&mut self, row: SparseRow, rhs: f64) -> Result<()> {
        row.validate(self.num_vars)?;
        check_rhs(rhs)?;
        self.ge_rows.push((row, rhs));
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn objective(&self) -> &SparseRow {
        &self.objective
    }

    pub fn eq_rows(&self) -> &[(SparseRow, f64)] {
        &self.eq_rows
    }

    pub fn ge_rows(&self) -> &[(SparseRow, f64)] {
        &self.ge_rows
    }

    pub fn num_rows(&self) -> usize {
        self.eq_rows.len() + self.ge_rows.len()
    }

    /// Objective value `cᵀx`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.dot(x)
    }

    /// Largest violation of any constraint or sign bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().fold(0.0f64, |w, &v| w.max(-v));
        for (row, rhs) in &self.eq_rows {
            worst = worst.max((row.dot(x) - rhs).abs());
        }
        for (row, rhs) in &self.ge_rows {
            worst = worst.max(rhs - row.dot(x));
        }
        worst
    }
}

fn check_rhs(rhs: f64) -> Result<()> {
    if rhs.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "right-hand side {rhs} is not finite"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Present iff `status == Optimal`.
    pub x: Option<Vec<f64>>,
    /// Present iff `status == Optimal`.
    pub objective_value: Option<f64>,
    /// Row multipliers, equality rows first: the rate of change of the
    /// optimal value per unit increase of each right-hand side. Present iff
    /// `status == Optimal`.
    pub duals: Option<Vec<f64>>,
    pub iterations: usize,
}

/// Knobs of the simplex engine.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Pivot, optimality and feasibility tolerance.
    pub tol: f64,
    pub max_iterations: usize,
    /// Pivots between fresh basis factorizations.
    pub refactor_interval: usize,
    /// Iteration after which Bland's rule replaces Dantzig pricing;
    /// `None` means `5 · (rows + cols)`.
    pub bland_after: Option<usize>,
    /// Variables examined per partial-pricing section; `usize::MAX` gives full
    /// Dantzig pricing.
    pub pricing_section: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            max_iterations: 1_000_000,
            refactor_interval: 50,
            bland_after: None,
            pricing_section: usize::MAX,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions {
            tol,
            ..Default::default()
        }
    }
}

/// Solves `lp` with default options and pivot tolerance `tol`.
pub fn solve(lp: &LinearProgram, tol: f64) -> Result<LpSolution> {
    solve_with(lp, &SolverOptions::with_tol(tol))
}

pub fn solve_with(lp: &LinearProgram, options: &SolverOptions) -> Result<LpSolution> {
    check_options(options)?;
    simplex::Simplex::new(lp, options).solve()
}

/// Phase one only: whether the constraints admit a nonnegative solution.
/// Agrees with the `Infeasible` status of [`solve`].
pub fn feasible(lp: &LinearProgram, tol: f64) -> Result<bool> {
    infeasibility(lp, tol).map(|(v, threshold)| v <= threshold)
}

/// Minimal total artificial value of phase one, with the acceptance
/// threshold `tol · (1 + max |rhs|)` used by the solver.
pub fn infeasibility(lp: &LinearProgram, tol: f64) -> Result<(f64, f64)> {
    let options = SolverOptions::with_tol(tol);
    check_options(&options)?;
    simplex::Simplex::new(lp, &options).phase_one_value()
}

fn check_options(options: &SolverOptions) -> Result<()> {
    if !(options.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "simplex tolerance must be positive, got {}",
            options.tol
        )));
    }
    if options.refactor_interval == 0 {
        return Err(Error::InvalidArgument(
            "refactor interval must be positive".into(),
        ));
    }
    Ok(())
}
