//! Independent oracles shared by the integration suites.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::HashMap;

use conekit::lp::{LinearProgram, Sense, SparseRow};
use rand::{Rng, RngExt};

/// Result of brute-force vertex enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleOutcome {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in r + 1..n {
            acc -= a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
    }
    Some(x)
}

fn dense(row: &SparseRow, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for &(c, x) in row.entries() {
        v[c] += x;
    }
    v
}

fn subsets(k: usize, items: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, k: usize, items: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items {
            cur.push(i);
            rec(i + 1, k, items, cur, out);
            cur.pop();
        }
    }
    rec(0, k, items, &mut cur, &mut out);
    out
}

/// Best objective over all basic feasible solutions, optionally with an extra
/// cap `Σ x <= cap`.
fn best_vertex(lp: &LinearProgram, cap: Option<f64>) -> Option<f64> {
    let n = lp.num_vars();
    let eq: Vec<(Vec<f64>, f64)> = lp.eq_rows().iter().map(|(r, b)| (dense(r, n), *b)).collect();
    let mut ineq: Vec<(Vec<f64>, f64)> = lp.ge_rows().iter().map(|(r, b)| (dense(r, n), *b)).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        ineq.push((e, 0.0));
    }
    if let Some(k) = cap {
        ineq.push((vec![-1.0; n], -k));
    }
    let c = dense(lp.objective(), n);
    let sign = if lp.sense() == Sense::Maximize { 1.0 } else { -1.0 };
    let mut best: Option<f64> = None;
    // a vertex is any feasible point with n linearly independent active rows
    let all: Vec<&(Vec<f64>, f64)> = eq.iter().chain(ineq.iter()).collect();
    for s in subsets(n, all.len()) {
        let a: Vec<Vec<f64>> = s.iter().map(|&k| all[k].0.clone()).collect();
        let b: Vec<f64> = s.iter().map(|&k| all[k].1).collect();
        let Some(x) = solve_square(a, b) else { continue };
        let feasible_eq = eq
            .iter()
            .all(|(r, v)| (r.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() - v).abs() < 1e-9);
        let feasible_ineq = ineq
            .iter()
            .all(|(r, v)| r.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() >= v - 1e-9);
        if feasible_eq && feasible_ineq {
            let val = sign * c.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>();
            best = Some(best.map_or(val, |b: f64| b.max(val)));
        }
    }
    best.map(|v| sign * v)
}

/// Vertex-enumeration oracle for small LPs over `x >= 0`.
pub fn vertex_oracle(lp: &LinearProgram) -> OracleOutcome {
    let Some(plain) = best_vertex(lp, None) else {
        // a nonempty pointed polyhedron always has a vertex
        return OracleOutcome::Infeasible;
    };
    let small = best_vertex(lp, Some(1e3)).expect("capped region contains the vertex");
    let large = best_vertex(lp, Some(1e4)).expect("capped region contains the vertex");
    if (large - small).abs() > 1e-6 {
        OracleOutcome::Unbounded
    } else {
        OracleOutcome::Optimal(plain)
    }
}

/// Random LP with at most 6 variables and 6 rows and small integer data.
pub fn random_small_lp(rng: &mut impl Rng) -> LinearProgram {
    let n = rng.random_range(1..=6usize);
    let rows = rng.random_range(1..=6usize);
    let sense = if rng.random::<bool>() {
        Sense::Maximize
    } else {
        Sense::Minimize
    };
    let mut lp = LinearProgram::new(n, sense);
    let obj: Vec<(usize, f64)> = (0..n).map(|j| (j, rng.random_range(-3..=3) as f64)).collect();
    lp.set_objective(SparseRow::new(obj)).unwrap();
    let capped = rng.random::<f64>() < 0.6;
    let mut eq_budget = rng.random_range(0..=2usize).min(n);
    for k in 0..rows {
        if capped && k == 0 {
            let row: Vec<(usize, f64)> = (0..n).map(|j| (j, -1.0)).collect();
            lp.add_ge(SparseRow::new(row), -(rng.random_range(1..=10) as f64))
                .unwrap();
            continue;
        }
        let mut row = Vec::new();
        for j in 0..n {
            if rng.random::<f64>() < 0.7 {
                row.push((j, rng.random_range(-3..=3) as f64));
            }
        }
        let rhs = rng.random_range(-3..=5) as f64;
        if eq_budget > 0 {
            eq_budget -= 1;
            lp.add_eq(SparseRow::new(row), rhs).unwrap();
        } else {
            lp.add_ge(SparseRow::new(row), rhs).unwrap();
        }
    }
    lp
}

/// Minimal independent MPS reader for the files produced by `write_mps`.
pub fn read_mps(text: &str) -> LinearProgram {
    #[derive(PartialEq)]
    enum Section {
        None,
        Objsense,
        Rows,
        Columns,
        Rhs,
        Bounds,
    }
    let mut section = Section::None;
    let mut maximize = false;
    let mut row_kind: Vec<(String, char)> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut entries: Vec<(String, usize, f64)> = Vec::new();
    let mut rhs: HashMap<String, f64> = HashMap::new();
    for line in text.lines() {
        if !line.starts_with(' ') {
            let head = line.split_whitespace().next().unwrap_or("");
            section = match head {
                "OBJSENSE" => Section::Objsense,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "NAME" | "ENDATA" => Section::None,
                other => panic!("unknown section {other}"),
            };
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::Objsense => maximize = f[0] == "MAX",
            Section::Rows => row_kind.push((f[1].to_string(), f[0].chars().next().unwrap())),
            Section::Columns => {
                let next = col_index.len();
                let j = *col_index.entry(f[0].to_string()).or_insert(next);
                for pair in f[1..].chunks(2) {
                    entries.push((pair[0].to_string(), j, pair[1].parse().unwrap()));
                }
            }
            Section::Rhs => {
                for pair in f[1..].chunks(2) {
                    rhs.insert(pair[0].to_string(), pair[1].parse().unwrap());
                }
            }
            Section::Bounds => panic!("unexpected bound"),
            Section::None => panic!("data outside a section"),
        }
    }
    let n = col_index.len();
    let mut lp = LinearProgram::new(
        n,
        if maximize {
            Sense::Maximize
        } else {
            Sense::Minimize
        },
    );
    let row_entries = |name: &str| -> SparseRow {
        SparseRow::new(
            entries
                .iter()
                .filter(|(r, _, v)| r == name && *v != 0.0)
                .map(|(_, j, v)| (*j, *v))
                .collect(),
        )
    };
    for (name, kind) in &row_kind {
        let row = row_entries(name);
        let b = rhs.get(name).copied().unwrap_or(0.0);
        match kind {
            'N' => lp.set_objective(row).unwrap(),
            'E' => lp.add_eq(row, b).unwrap(),
            'G' => lp.add_ge(row, b).unwrap(),
            other => panic!("unexpected row type {other}"),
        }
    }
    lp
}

/// Compares two LPs entry by entry with a relative tolerance.
pub fn lp_close(a: &LinearProgram, b: &LinearProgram, rel: f64) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() <= rel * x.abs().max(y.abs()).max(1e-300);
    let rows_close = |p: &SparseRow, q: &SparseRow| {
        p.entries().len() == q.entries().len()
            && p.entries()
                .iter()
                .zip(q.entries())
                .all(|(u, v)| u.0 == v.0 && close(u.1, v.1))
    };
    let objective = |lp: &LinearProgram| -> SparseRow {
        SparseRow::new(
            lp.objective()
                .entries()
                .iter()
                .copied()
                .filter(|e| e.1 != 0.0)
                .collect(),
        )
    };
    a.num_vars() == b.num_vars()
        && a.sense() == b.sense()
        && rows_close(&objective(a), &objective(b))
        && a.eq_rows().len() == b.eq_rows().len()
        && a.ge_rows().len() == b.ge_rows().len()
        && a.eq_rows()
            .iter()
            .zip(b.eq_rows())
            .all(|(p, q)| rows_close(&p.0, &q.0) && (p.1 == q.1 || close(p.1, q.1)))
        && a.ge_rows()
            .iter()
            .zip(b.ge_rows())
            .all(|(p, q)| rows_close(&p.0, &q.0) && (p.1 == q.1 || close(p.1, q.1)))
}

/// Exact stability number by enumerating every vertex subset (n <= 20).
pub fn stability_by_enumeration(n: usize, edges: &[(usize, usize)]) -> usize {
    assert!(n <= 20);
    let mut adj = vec![0u32; n];
    for &(i, j) in edges {
        adj[i] |= 1 << j;
        adj[j] |= 1 << i;
    }
    let mut best = 0;
    for mask in 0u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        if (0..n).all(|v| mask & (1 << v) == 0 || adj[v] & mask == 0) {
            best = size;
        }
    }
    best
}

/// Stability number by plain include/exclude recursion on the lowest
/// remaining vertex (n <= 64).
pub fn stability_by_recursion(n: usize, edges: &[(usize, usize)]) -> usize {
    assert!(n <= 64);
    let mut adj = vec![0u64; n];
    for &(i, j) in edges {
        adj[i] |= 1 << j;
        adj[j] |= 1 << i;
    }
    fn go(adj: &[u64], candidates: u64, size: usize, best: &mut usize) {
        if candidates == 0 {
            *best = (*best).max(size);
            return;
        }
        if size + candidates.count_ones() as usize <= *best {
            return;
        }
        let v = candidates.trailing_zeros() as usize;
        let rest = candidates & !(1 << v);
        go(adj, rest & !adj[v], size + 1, best);
        go(adj, rest, size, best);
    }
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = 0;
    go(&adj, all, 0, &mut best);
    best
}

/// Rank of a list of vectors by Gaussian elimination with partial pivoting.
pub fn dense_rank(mut rows: Vec<Vec<f64>>, tol: f64) -> usize {
    let width = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..width {
        let Some(piv) = (rank..rows.len()).max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()))
        else {
            break;
        };
        if rows[piv][col].abs() <= tol {
            continue;
        }
        rows.swap(rank, piv);
        for r in rank + 1..rows.len() {
            let f = rows[r][col] / rows[rank][col];
            for c in col..width {
                rows[r][c] -= f * rows[rank][c];
            }
        }
        rank += 1;
    }
    rank
}
