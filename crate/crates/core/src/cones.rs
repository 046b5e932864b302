//! Membership tests for the diagonally dominant cones and for finitely
//! generated cones, plus the linear rows describing their duals.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus, Sense, SparseRow};
use crate::sdbasis::{combine, BasisMatrix};
use crate::symmat::{fro_norm, packed_index, packed_len, unpack_index, SymMatrix};

/// Evidence attached to a [`MembershipResult`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Certificate {
    /// `M = Σ γ_k G_k` with `γ ≥ 0`.
    Combination(Vec<f64>),
    /// Phase-one infeasibility of the decomposition LP, and when it could be
    /// computed a matrix `Y` with `⟨G_k, Y⟩ ≥ 0` for every generator and
    /// `⟨M, Y⟩ = −1`.
    Separation {
        infeasibility: f64,
        separator: Option<SymMatrix>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipResult {
    pub member: bool,
    pub certificate: Certificate,
}

/// `A_ii ≥ Σ_{j≠i} |A_ij|` for every row, evaluated exactly.
pub fn is_dd(a: &SymMatrix) -> bool {
    let n = a.n();
    (0..n).all(|i| {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a.get(i, j).abs()).sum();
        a.get(i, i) >= off
    })
}

/// Scaled diagonal dominance: is there `d ≥ 1` with
/// `A_ii d_i ≥ Σ_{j≠i} |A_ij| d_j` for all `i`?
///
/// Row `i` of "`DAD` is DD" for `D = diag(d)` reads
/// `d_i² A_ii ≥ Σ_j d_i d_j |A_ij|`; dividing by `d_i > 0` gives the linear
/// condition above, and homogeneity lets `d > 0` be normalized to `d ≥ 1`.
pub fn is_sdd(a: &SymMatrix, tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n = a.n();
    for i in 0..n {
        let d = a.get(i, i);
        let has_off = (0..n).any(|j| j != i && a.get(i, j) != 0.0);
        if d < 0.0 || (d == 0.0 && has_off) {
            return Ok(false);
        }
    }
    let mut prog = LinearProgram::new(n, Sense::Minimize);
    for i in 0..n {
        prog.add_ge(SparseRow::new(vec![(i, 1.0)]), 1.0)?;
        let row = (0..n)
            .map(|j| {
                if j == i {
                    (j, a.get(i, i))
                } else {
                    (j, -a.get(i, j).abs())
                }
            })
            .collect();
        prog.add_ge(SparseRow::new(row), 0.0)?;
    }
    lp::feasible(&prog, tol)
}

fn check_generators(generators: &[BasisMatrix], n: usize) -> Result<()> {
    if generators.is_empty() {
        return Err(Error::InvalidArgument("generator list is empty".into()));
    }
    if let Some(g) = generators.iter().find(|g| g.i > g.j || g.j >= n) {
        return Err(Error::InvalidArgument(format!(
            "generator {g} does not fit dimension {n}"
        )));
    }
    Ok(())
}

/// Decides `M ∈ cone(expand(G_1), …, expand(G_K))` with an LP in `γ ≥ 0`.
pub fn cone_membership(m: &SymMatrix, generators: &[BasisMatrix], tol: f64) -> Result<MembershipResult> {
    let n = m.n();
    check_generators(generators, n)?;
    let dim = packed_len(n);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    for (k, g) in generators.iter().enumerate() {
        for (r, v) in g.packed_entries(n) {
            rows[r].push((k, v));
        }
    }
    let mut prog = LinearProgram::new(generators.len(), Sense::Minimize);
    for (row, &rhs) in rows.into_iter().zip(m.packed()) {
        prog.add_eq(SparseRow::new(row), rhs)?;
    }
    let solution = lp::solve(&prog, tol)?;
    match solution.status {
        LpStatus::Optimal => {
            let gamma = solution.x.expect("optimal solution has x");
            Ok(MembershipResult {
                member: true,
                certificate: Certificate::Combination(gamma),
            })
        }
        LpStatus::Infeasible => {
            let (infeasibility, _) = lp::infeasibility(&prog, tol)?;
            Ok(MembershipResult {
                member: false,
                certificate: Certificate::Separation {
                    infeasibility,
                    separator: separator(m, generators, tol)?,
                },
            })
        }
        LpStatus::Unbounded => Err(Error::Numerical("zero objective reported unbounded".into())),
    }
}

/// `Y` in the dual cone of the generators with `⟨M, Y⟩ = −1`, if one is found.
fn separator(m: &SymMatrix, generators: &[BasisMatrix], tol: f64) -> Result<Option<SymMatrix>> {
    let n = m.n();
    let dim = packed_len(n);
    // Y = P − Q with P, Q ≥ 0 in packed form; column k is P_k, dim + k is Q_k
    let split = |entries: Vec<(usize, f64)>| -> SparseRow {
        SparseRow::new(
            entries
                .into_iter()
                .flat_map(|(k, v)| [(k, v), (dim + k, -v)])
                .collect(),
        )
    };
    let mut prog = LinearProgram::new(2 * dim, Sense::Minimize);
    let m_row = split(inner_weights(m));
    prog.set_objective(m_row.clone())?;
    prog.add_ge(m_row, -1.0)?;
    for row in dual_cone_rows(generators, n) {
        prog.add_ge(split(row.entries().to_vec()), 0.0)?;
    }
    let solution = lp::solve(&prog, tol)?;
    let (Some(x), Some(value)) = (solution.x, solution.objective_value) else {
        return Ok(None);
    };
    if value > -0.5 {
        return Ok(None);
    }
    let y: Vec<f64> = (0..dim).map(|k| x[k] - x[dim + k]).collect();
    Ok(Some(SymMatrix::from_packed(n, y)?))
}

/// Packed coefficients of `X ↦ ⟨A, X⟩`: off-diagonal entries count twice.
fn inner_weights(a: &SymMatrix) -> Vec<(usize, f64)> {
    let n = a.n();
    a.packed()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(k, &v)| {
            let (i, j) = unpack_index(n, k);
            (k, if i == j { v } else { 2.0 * v })
        })
        .collect()
}

/// One row `⟨expand(G), X⟩ ≥ 0` per generator, over packed `X`.
pub fn dual_cone_rows(generators: &[BasisMatrix], n: usize) -> Vec<SparseRow> {
    generators
        .iter()
        .map(|g| {
            let a = g.alpha;
            if g.is_diagonal() {
                SparseRow::new(vec![(packed_index(n, g.i, g.i), (1.0 + a) * (1.0 + a))])
            } else {
                SparseRow::new(vec![
                    (packed_index(n, g.i, g.i), 1.0),
                    (packed_index(n, g.i, g.j), 2.0 * a),
                    (packed_index(n, g.j, g.j), a * a),
                ])
            }
        })
        .collect()
}

/// Frobenius residual `‖Σ γ_k expand(G_k) − M‖` of a combination certificate.
pub fn combination_residual(m: &SymMatrix, generators: &[BasisMatrix], gamma: &[f64]) -> f64 {
    let mut diff = combine(generators, gamma, m.n());
    diff.add_scaled(-1.0, m).expect("same dimension");
    fro_norm(&diff)
}
