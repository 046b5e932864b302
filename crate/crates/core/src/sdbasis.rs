//! Semidefinite bases and their one-parameter expansion.
//!
//! A generator `(i, j, α)` stands for the rank-one matrix
//! `(e_i + α e_j)(e_i + α e_j)ᵀ`. With `α = 1` this is the Type I member
//! `B⁺_{i,j}`, with `α = -1` (and `i < j`) the Type II member `B⁻_{i,j}`.
//! Generators stay in triple form and are only densified on demand, which keeps
//! every derived LP row at most 3-sparse.
//!
//! Indices are 0-based.

use std::f64::consts::SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symmat::{fro_norm, packed_index, packed_len, SymMatrix};

/// Pivot tolerance used when computing the rank of a generator set.
pub const RANK_PIVOT_TOL: f64 = 1e-9;

/// `1 + √2 = 2.4142135623730951`
pub const ONE_PLUS_SQRT2: f64 = 1.0 + SQRT_2;
/// `1 - √2 = -0.41421356237309515`
pub const ONE_MINUS_SQRT2: f64 = 1.0 - SQRT_2;
/// `-1 + √2 = 0.41421356237309515`
pub const MINUS_ONE_PLUS_SQRT2: f64 = -1.0 + SQRT_2;
/// `-1 - √2 = -2.4142135623730951`
pub const MINUS_ONE_MINUS_SQRT2: f64 = -1.0 - SQRT_2;

/// Sparse descriptor of `(e_i + α e_j)(e_i + α e_j)ᵀ` with `i <= j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisMatrix {
    pub i: usize,
    pub j: usize,
    pub alpha: f64,
}

impl BasisMatrix {
    pub fn new(i: usize, j: usize, alpha: f64) -> Self {
        assert!(i <= j, "basis matrix needs i <= j (got {i}, {j})");
        BasisMatrix { i, j, alpha }
    }

    pub fn is_diagonal(&self) -> bool {
        self.i == self.j
    }

    /// Nonzero packed entries `(packed index, value)` of the dense matrix.
    pub fn packed_entries(&self, n: usize) -> Vec<(usize, f64)> {
        let a = self.alpha;
        if self.is_diagonal() {
            vec![(packed_index(n, self.i, self.i), (1.0 + a) * (1.0 + a))]
        } else {
            vec![
                (packed_index(n, self.i, self.i), 1.0),
                (packed_index(n, self.i, self.j), a),
                (packed_index(n, self.j, self.j), a * a),
            ]
        }
    }

    /// Dense `n × n` form.
    pub fn expand(&self, n: usize) -> SymMatrix {
        assert!(self.j < n, "generator index {} out of range for n = {n}", self.j);
        let mut m = SymMatrix::zeros(n);
        let a = self.alpha;
        if self.is_diagonal() {
            m.set(self.i, self.i, (1.0 + a) * (1.0 + a));
        } else {
            m.set(self.i, self.i, 1.0);
            m.set(self.i, self.j, a);
            m.set(self.j, self.j, a * a);
        }
        m
    }
}

impl fmt::Display for BasisMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.i + 1, self.j + 1, self.alpha)
    }
}

/// Finite set of distinct, finite parameters `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    alphas: Vec<f64>,
}

impl ParameterSet {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if let Some(a) = alphas.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument(format!("parameter {a} is not finite")));
        }
        for (k, a) in alphas.iter().enumerate() {
            if alphas[..k].contains(a) {
                return Err(Error::InvalidArgument(format!("parameter {a} listed twice")));
            }
        }
        Ok(ParameterSet { alphas })
    }

    /// `{±1, ±1 ± √2}`, the parameter set of the SDB approximation.
    pub fn sdb() -> Self {
        let mut alphas = vec![1.0, -1.0];
        alphas.extend(equal_angle_parameters().alphas);
        ParameterSet { alphas }
    }

    /// `{1, -1}`: Type I and Type II bases.
    pub fn type1_and_type2() -> Self {
        ParameterSet {
            alphas: vec![1.0, -1.0],
        }
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }
}

/// Type I SD basis: `(e_i + e_j)(e_i + e_j)ᵀ` for all `i <= j`.
pub fn type1_basis(n: usize) -> Vec<BasisMatrix> {
    expanded_basis(n, 1.0)
}

/// Type II SD basis: diagonal `(2e_i)(2e_i)ᵀ` members, then `(e_i - e_j)(e_i - e_j)ᵀ` for `i < j`.
pub fn type2_basis(n: usize) -> Vec<BasisMatrix> {
    let mut out: Vec<BasisMatrix> = (0..n).map(|i| BasisMatrix::new(i, i, 1.0)).collect();
    for i in 0..n {
        for j in i + 1..n {
            out.push(BasisMatrix::new(i, j, -1.0));
        }
    }
    out
}

/// Expanded SD basis `{(e_i + α e_j)(e_i + α e_j)ᵀ : i <= j}`.
pub fn expanded_basis(n: usize, alpha: f64) -> Vec<BasisMatrix> {
    let mut out = Vec::with_capacity(packed_len(n));
    for i in 0..n {
        for j in i..n {
            out.push(BasisMatrix::new(i, j, alpha));
        }
    }
    out
}

/// Rank of a generator set, viewed as packed vectors.
pub fn generator_rank(generators: &[BasisMatrix], n: usize) -> usize {
    let dim = packed_len(n);
    let mut rows: Vec<Vec<f64>> = generators
        .iter()
        .map(|g| {
            let mut v = vec![0.0; dim];
            for (k, val) in g.packed_entries(n) {
                v[k] += val;
            }
            v
        })
        .collect();
    row_echelon_rank(&mut rows, RANK_PIVOT_TOL)
}

/// Rank of `expanded_basis(n, alpha)`; full (`n(n+1)/2`) unless `α ∈ {0, -1}`.
pub fn basis_rank(n: usize, alpha: f64) -> usize {
    generator_rank(&expanded_basis(n, alpha), n)
}

fn row_echelon_rank(rows: &mut [Vec<f64>], tol: f64) -> usize {
    let Some(width) = rows.first().map(Vec::len) else {
        return 0;
    };
    let mut rank = 0;
    for col in 0..width {
        if rank == rows.len() {
            break;
        }
        let (best, best_abs) = (rank..rows.len())
            .map(|r| (r, rows[r][col].abs()))
            .fold((rank, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_abs <= tol {
            continue;
        }
        rows.swap(rank, best);
        let pivot_row = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            let factor = row[col] / pivot_row[col];
            if factor != 0.0 {
                for (x, p) in row.iter_mut().zip(&pivot_row).skip(col) {
                    *x -= factor * p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Union of the expanded bases over `params`.
///
/// Diagonal members are all positive multiples of `e_i e_iᵀ` and collapse to a
/// single `(i, i, 1)`. Order: by `i`, then `j`, then `α` ascending.
pub fn sdb_generators(n: usize, params: &ParameterSet) -> Vec<BasisMatrix> {
    let mut sorted = params.alphas.clone();
    sorted.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(n + sorted.len() * n * n.saturating_sub(1) / 2);
    for i in 0..n {
        out.push(BasisMatrix::new(i, i, 1.0));
        for j in i + 1..n {
            for &a in &sorted {
                out.push(BasisMatrix::new(i, j, a));
            }
        }
    }
    out
}

/// Cosines of the angles between `B̄_{i,j}(α)` and `B⁺_{i,i}`, `B⁺_{j,j}`,
/// `B⁺_{i,j}` and `B⁻_{i,j}` respectively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angles {
    pub cos_theta1: f64,
    pub cos_theta2: f64,
    pub cos_theta3: f64,
    pub cos_theta4: f64,
}

pub fn angles(alpha: f64) -> Angles {
    let a2 = alpha * alpha;
    let denom = 1.0 + a2;
    Angles {
        cos_theta1: 1.0 / denom,
        cos_theta2: a2 / denom,
        cos_theta3: (1.0 + alpha) * (1.0 + alpha) / (2.0 * denom),
        cos_theta4: (1.0 - alpha) * (1.0 - alpha) / (2.0 * denom),
    }
}

/// The four roots `±1 ± √2` of the pairwise equal-angle conditions.
pub fn equal_angle_parameters() -> ParameterSet {
    ParameterSet {
        alphas: vec![
            ONE_PLUS_SQRT2,
            ONE_MINUS_SQRT2,
            MINUS_ONE_PLUS_SQRT2,
            MINUS_ONE_MINUS_SQRT2,
        ],
    }
}

/// Unique coefficients `γ` with `Σ γ_k expand(basis_k) = m`.
///
/// The basis must contain exactly `n(n+1)/2` linearly independent generators.
pub fn decompose_in_basis(m: &SymMatrix, basis: &[BasisMatrix]) -> Result<Vec<f64>> {
    let n = m.n();
    let dim = packed_len(n);
    if let Some(g) = basis.iter().find(|g| g.j >= n) {
        return Err(Error::InvalidArgument(format!(
            "generator {g} exceeds dimension {n}"
        )));
    }
    if basis.len() > dim {
        return Err(Error::InvalidArgument(format!(
            "{} generators overdetermine the {dim}-dimensional space",
            basis.len()
        )));
    }
    let rank = generator_rank(basis, n);
    if rank < dim {
        return Err(Error::RankDeficient { rank, expected: dim });
    }

    // dense system: column k = packed expand(basis_k)
    let mut a = vec![vec![0.0; dim + 1]; dim];
    for (k, g) in basis.iter().enumerate() {
        for (row, val) in g.packed_entries(n) {
            a[row][k] += val;
        }
    }
    for (row, v) in m.packed().iter().enumerate() {
        a[row][dim] = *v;
    }
    for col in 0..dim {
        let piv = (col..dim)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("nonempty");
        if a[piv][col].abs() <= RANK_PIVOT_TOL {
            return Err(Error::RankDeficient {
                rank: col,
                expected: dim,
            });
        }
        a.swap(col, piv);
        let pivot_row = a[col].clone();
        for row in a.iter_mut().skip(col + 1) {
            let factor = row[col] / pivot_row[col];
            if factor != 0.0 {
                for (x, p) in row.iter_mut().zip(&pivot_row).skip(col) {
                    *x -= factor * p;
                }
            }
        }
    }
    let mut gamma = vec![0.0; dim];
    for col in (0..dim).rev() {
        let mut acc = a[col][dim];
        for k in col + 1..dim {
            acc -= a[col][k] * gamma[k];
        }
        gamma[col] = acc / a[col][col];
    }

    let recon = combine(basis, &gamma, n);
    let mut diff = recon;
    diff.add_scaled(-1.0, m)?;
    let residual = fro_norm(&diff);
    if residual > 1e-8 * fro_norm(m).max(1.0) {
        return Err(Error::Inconsistent { residual });
    }
    Ok(gamma)
}

/// `Σ γ_k expand(generators_k)`.
pub fn combine(generators: &[BasisMatrix], gamma: &[f64], n: usize) -> SymMatrix {
    let mut values = vec![0.0; packed_len(n)];
    for (g, &c) in generators.iter().zip(gamma) {
        if c == 0.0 {
            continue;
        }
        for (k, v) in g.packed_entries(n) {
            values[k] += c * v;
        }
    }
    SymMatrix::from_packed(n, values).expect("finite combination")
}
