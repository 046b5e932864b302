//! Packed symmetric matrices and a cyclic Jacobi eigensolver.
//!
//! A [`SymMatrix`] stores the upper triangle row-major, so entry `(i, j)` with
//! `i <= j` lives at `i * (2n - i + 1) / 2 + (j - i)`. Off-diagonal entries are
//! stored once; [`inner`] applies the doubling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default convergence tolerance of the eigensolver (relative to `‖A‖_F`).
pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;

/// Sweep limit of [`jacobi_eigen`].
pub const MAX_SWEEPS: usize = 100;

/// Rotations are skipped when the target entry is at most this in magnitude.
const ROTATION_SKIP: f64 = 1e-300;

/// Number of packed entries of an `n × n` symmetric matrix.
#[inline]
pub fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of `(i, j)` in packed storage; the pair may be given in either order.
#[inline]
pub fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    debug_assert!(j < n);
    i * (2 * n - i + 1) / 2 + (j - i)
}

/// Inverse of [`packed_index`]: the `(i, j)` pair, `i <= j`, stored at `k`.
pub fn unpack_index(n: usize, k: usize) -> (usize, usize) {
    let mut start = 0;
    for i in 0..n {
        let len = n - i;
        if k < start + len {
            return (i, i + k - start);
        }
        start += len;
    }
    panic!("packed index {k} out of range for n = {n}");
}

/// Symmetric `n × n` matrix in packed upper-triangular storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PackedRepr", into = "PackedRepr")]
pub struct SymMatrix {
    n: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PackedRepr {
    n: usize,
    upper: Vec<f64>,
}

impl TryFrom<PackedRepr> for SymMatrix {
    type Error = Error;

    fn try_from(repr: PackedRepr) -> Result<Self> {
        SymMatrix::from_packed(repr.n, repr.upper)
    }
}

impl From<SymMatrix> for PackedRepr {
    fn from(m: SymMatrix) -> Self {
        PackedRepr {
            n: m.n,
            upper: m.values,
        }
    }
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            values: vec![0.0; packed_len(n)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// The all-ones matrix `eeᵀ`.
    pub fn ones(n: usize) -> Self {
        SymMatrix {
            n,
            values: vec![1.0; packed_len(n)],
        }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds a matrix from packed upper-triangle values.
    pub fn from_packed(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be positive".into()));
        }
        if values.len() != packed_len(n) {
            return Err(Error::DimensionMismatch {
                left: values.len(),
                right: packed_len(n),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("packed entry {k} is not finite")));
        }
        Ok(SymMatrix { n, values })
    }

    /// Builds a matrix from dense rows; only the upper triangle is read.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut values = Vec::with_capacity(packed_len(n));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    left: row.len(),
                    right: n,
                });
            }
            values.extend_from_slice(&row[i..]);
        }
        Self::from_packed(n, values)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn packed(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[packed_index(self.n, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = packed_index(self.n, i, j);
        self.values[k] = v;
    }

    /// Full row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.get(i, j);
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        out
    }

    /// `self + factor * other`.
    pub fn add_scaled(&mut self, factor: f64, other: &SymMatrix) -> Result<()> {
        check_dims(self, other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> Result<f64> {
        check_dims(self, other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// `vᵀ A v`.
    pub fn quad_form(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                left: v.len(),
                right: self.n,
            });
        }
        let mut acc = 0.0;
        for i in 0..self.n {
            acc += self.get(i, i) * v[i] * v[i];
            for j in i + 1..self.n {
                acc += 2.0 * self.get(i, j) * v[i] * v[j];
            }
        }
        Ok(acc)
    }
}

fn check_dims(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch {
            left: a.n,
            right: b.n,
        });
    }
    Ok(())
}

/// Trace inner product `⟨A, B⟩ = Σ A_ii B_ii + 2 Σ_{i<j} A_ij B_ij`.
pub fn inner(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    check_dims(a, b)?;
    let n = a.n;
    let mut diag = 0.0;
    let mut off = 0.0;
    let mut k = 0;
    for i in 0..n {
        diag += a.values[k] * b.values[k];
        k += 1;
        for _ in i + 1..n {
            off += a.values[k] * b.values[k];
            k += 1;
        }
    }
    Ok(diag + 2.0 * off)
}

pub fn fro_norm(a: &SymMatrix) -> f64 {
    inner(a, a).expect("same matrix").max(0.0).sqrt()
}

/// The rank-one matrix `v vᵀ`.
pub fn rank1(v: &[f64]) -> SymMatrix {
    let n = v.len();
    let mut values = Vec::with_capacity(packed_len(n));
    for i in 0..n {
        for j in i..n {
            values.push(v[i] * v[j]);
        }
    }
    SymMatrix { n, values }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    n: usize,
    eigenvalues: Vec<f64>,
    // column-major: column k is eigenvector k
    vectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }

    /// `Q diag(λ) Qᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.n;
        let mut out = SymMatrix::zeros(n);
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let q = self.eigenvector(k);
            for i in 0..n {
                for j in i..n {
                    let v = out.get(i, j) + lambda * q[i] * q[j];
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// `max |QᵀQ − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.n {
            for b in a..self.n {
                let dot: f64 = self
                    .eigenvector(a)
                    .iter()
                    .zip(self.eigenvector(b))
                    .map(|(x, y)| x * y)
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Cyclic-by-row Jacobi eigensolver.
///
/// Sweeps until the off-diagonal Frobenius norm is at most `tol · ‖A‖_F`.
pub fn jacobi_eigen(a: &SymMatrix, tol: f64) -> Result<EigenDecomposition> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eigensolver tolerance must be positive, got {tol}"
        )));
    }
    let n = a.n;
    let mut m = a.to_dense();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let target = tol * fro_norm(a);

    let off_norm = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                s += m[p * n + q] * m[p * n + q];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_norm(&m) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= ROTATION_SKIP {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = m[r * n + p];
                    let arq = m[r * n + q];
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    m[r * n + p] = new_rp;
                    m[p * n + r] = new_rp;
                    m[r * n + q] = new_rq;
                    m[q * n + r] = new_rq;
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    if !converged {
        let residual = off_norm(&m);
        if residual > target {
            return Err(Error::NoConvergence {
                sweeps: MAX_SWEEPS,
                residual,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps ties in original index order
    order.sort_by(|&x, &y| m[x * n + x].total_cmp(&m[y * n + y]));
    let eigenvalues = order.iter().map(|&k| m[k * n + k]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &k in &order {
        vectors.extend((0..n).map(|r| v[r * n + k]));
    }
    Ok(EigenDecomposition {
        n,
        eigenvalues,
        vectors,
    })
}

/// The `k` smallest eigenpairs, ascending.
pub fn min_eigenpairs(a: &SymMatrix, k: usize, tol: f64) -> Result<Vec<(f64, Vec<f64>)>> {
    if k == 0 || k > a.n {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= {}, got {k}", a.n)));
    }
    let eig = jacobi_eigen(a, tol)?;
    Ok((0..k)
        .map(|idx| (eig.eigenvalues[idx], eig.eigenvector(idx).to_vec()))
        .collect())
}

/// Smallest eigenvalue.
pub fn min_eigenvalue(a: &SymMatrix, tol: f64) -> Result<f64> {
    Ok(jacobi_eigen(a, tol)?.eigenvalues[0])
}

/// `λ_min(A) >= -tol`.
pub fn is_psd(a: &SymMatrix, tol: f64) -> Result<bool> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "PSD tolerance must be nonnegative, got {tol}"
        )));
    }
    Ok(min_eigenvalue(a, DEFAULT_EIGEN_TOL)? >= -tol)
}
