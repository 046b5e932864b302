//! Sparse LU factorization of simplex bases with product-form updates.
//!
//! Right-looking elimination with Markowitz pivot selection. Column and row
//! singletons are taken first (no fill); the remaining nucleus uses threshold
//! partial pivoting over the columns of smallest count. Values are held
//! column-wise; row patterns are kept lazily (entries of already pivoted
//! columns are skipped) with exact row counts.

/// Entries smaller than this relative to their column are not accepted as pivots.
const THRESHOLD: f64 = 0.1;
/// Absolute floor below which a column is treated as numerically zero.
const ABS_PIVOT_TOL: f64 = 1e-11;
/// Number of candidate columns inspected per Markowitz search.
const SEARCH_COLUMNS: usize = 4;

#[derive(Debug)]
pub(crate) struct Singular {
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct LuFactors {
    m: usize,
    piv_row: Vec<usize>,
    piv_col: Vec<usize>,
    piv_val: Vec<f64>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
}

struct Elimination {
    cols: Vec<Vec<(usize, f64)>>,
    rows: Vec<Vec<usize>>,
    row_count: Vec<usize>,
    row_active: Vec<bool>,
    col_active: Vec<bool>,
    buckets: Vec<Vec<usize>>,
    col_singletons: Vec<usize>,
    row_singletons: Vec<usize>,
    mult: Vec<f64>,
    // lmark[i] == pivot_epoch iff row i carries a multiplier for the current pivot
    lmark: Vec<usize>,
    pivot_epoch: usize,
    stamp: Vec<usize>,
    epoch: usize,
}

impl Elimination {
    fn new(m: usize, cols: Vec<Vec<(usize, f64)>>) -> Self {
        let mut rows = vec![Vec::new(); m];
        for (j, col) in cols.iter().enumerate() {
            for &(i, _) in col {
                rows[i].push(j);
            }
        }
        let row_count: Vec<usize> = rows.iter().map(Vec::len).collect();
        let mut buckets = vec![Vec::new(); m + 1];
        let mut col_singletons = Vec::new();
        for (j, col) in cols.iter().enumerate() {
            let c = col.len().min(m);
            if c == 1 {
                col_singletons.push(j);
            }
            buckets[c].push(j);
        }
        let row_singletons = (0..m).filter(|&i| row_count[i] == 1).collect();
        Elimination {
            cols,
            rows,
            row_count,
            row_active: vec![true; m],
            col_active: vec![true; m],
            buckets,
            col_singletons,
            row_singletons,
            mult: vec![0.0; m],
            lmark: vec![0; m],
            pivot_epoch: 0,
            stamp: vec![0; m],
            epoch: 0,
        }
    }

    fn note_col_count(&mut self, j: usize) {
        let c = self.cols[j].len().min(self.buckets.len() - 1);
        if c == 1 {
            self.col_singletons.push(j);
        }
        self.buckets[c].push(j);
    }

    fn next_col_singleton(&mut self) -> Option<usize> {
        while let Some(j) = self.col_singletons.pop() {
            if self.col_active[j] && self.cols[j].len() == 1 {
                return Some(j);
            }
        }
        None
    }

    fn next_row_singleton(&mut self) -> Option<(usize, usize)> {
        while let Some(i) = self.row_singletons.pop() {
            if !self.row_active[i] || self.row_count[i] != 1 {
                continue;
            }
            let col_active = &self.col_active;
            if let Some(&j) = self.rows[i].iter().find(|&&j| col_active[j]) {
                return Some((i, j));
            }
        }
        None
    }

    /// Threshold Markowitz search over the sparsest active columns.
    fn markowitz(&mut self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, usize, f64)> = None; // (cost, row, col, |v|)
        let mut seen = 0;
        for count in 1..self.buckets.len() {
            let mut k = 0;
            while k < self.buckets[count].len() {
                let j = self.buckets[count][k];
                if !self.col_active[j] || self.cols[j].len() != count {
                    self.buckets[count].swap_remove(k);
                    continue;
                }
                k += 1;
                let col = &self.cols[j];
                let cmax = col.iter().fold(0.0f64, |a, &(_, v)| a.max(v.abs()));
                if cmax <= ABS_PIVOT_TOL {
                    continue;
                }
                for &(i, v) in col {
                    if v.abs() < THRESHOLD * cmax {
                        continue;
                    }
                    let cost = (self.row_count[i] - 1) * (count - 1);
                    let better = match best {
                        None => true,
                        Some((bc, _, _, bv)) => cost < bc || (cost == bc && v.abs() > bv),
                    };
                    if better {
                        best = Some((cost, i, j, v.abs()));
                    }
                }
                seen += 1;
                if seen >= SEARCH_COLUMNS {
                    break;
                }
            }
            if seen >= SEARCH_COLUMNS || best.is_some_and(|b| b.0 == 0) {
                break;
            }
        }
        best.map(|(_, i, j, _)| (i, j))
    }
}

impl LuFactors {
    /// Factorizes the `m × m` matrix whose column `p` is `cols[p]` (row, value pairs).
    pub fn factorize(m: usize, cols: Vec<Vec<(usize, f64)>>) -> Result<LuFactors, Singular> {
        debug_assert_eq!(cols.len(), m);
        let mut f = LuFactors {
            m,
            piv_row: Vec::with_capacity(m),
            piv_col: Vec::with_capacity(m),
            piv_val: Vec::with_capacity(m),
            l_start: vec![0],
            l_idx: Vec::new(),
            l_val: Vec::new(),
            u_start: vec![0],
            u_idx: Vec::new(),
            u_val: Vec::new(),
        };
        let mut el = Elimination::new(m, cols);
        while f.piv_row.len() < m {
            let pivot = if let Some(j) = el.next_col_singleton() {
                let (i, _) = el.cols[j][0];
                Some((i, j))
            } else if let Some(p) = el.next_row_singleton() {
                Some(p)
            } else {
                el.markowitz()
            };
            let Some((r, c)) = pivot else {
                return Err(Singular {
                    rank: f.piv_row.len(),
                });
            };
            f.eliminate(&mut el, r, c)?;
        }
        Ok(f)
    }

    fn eliminate(&mut self, el: &mut Elimination, r: usize, c: usize) -> Result<(), Singular> {
        let pos = el.cols[c]
            .iter()
            .position(|&(i, _)| i == r)
            .expect("pivot in column");
        let pivot = el.cols[c][pos].1;
        if pivot.abs() <= ABS_PIVOT_TOL {
            return Err(Singular {
                rank: self.piv_row.len(),
            });
        }

        // multipliers for the other rows of column c
        el.pivot_epoch += 1;
        let pivot_epoch = el.pivot_epoch;
        let col_c = std::mem::take(&mut el.cols[c]);
        let mut lrows = Vec::with_capacity(col_c.len().saturating_sub(1));
        for &(i, v) in &col_c {
            if i == r {
                continue;
            }
            let l = v / pivot;
            el.mult[i] = l;
            el.lmark[i] = pivot_epoch;
            lrows.push(i);
            self.l_idx.push(i);
            self.l_val.push(l);
        }
        self.l_start.push(self.l_idx.len());

        // U row: remaining active entries of row r; update their columns
        let row_r = std::mem::take(&mut el.rows[r]);
        for &j in &row_r {
            if j == c || !el.col_active[j] {
                continue;
            }
            let col_j = &mut el.cols[j];
            let Some(k) = col_j.iter().position(|&(i, _)| i == r) else {
                continue;
            };
            let urj = col_j.swap_remove(k).1;
            self.u_idx.push(j);
            self.u_val.push(urj);
            if !lrows.is_empty() && urj != 0.0 {
                el.epoch += 1;
                let epoch = el.epoch;
                for entry in col_j.iter_mut() {
                    let i = entry.0;
                    if el.lmark[i] == pivot_epoch && el.stamp[i] != epoch {
                        entry.1 -= el.mult[i] * urj;
                        el.stamp[i] = epoch;
                    }
                }
                for &i in &lrows {
                    if el.stamp[i] != epoch {
                        col_j.push((i, -el.mult[i] * urj));
                        el.rows[i].push(j);
                        el.row_count[i] += 1;
                    }
                }
            }
            el.note_col_count(j);
        }
        self.u_start.push(self.u_idx.len());

        for &i in &lrows {
            el.mult[i] = 0.0;
            el.row_count[i] -= 1;
            if el.row_count[i] == 1 {
                el.row_singletons.push(i);
            }
        }
        el.row_active[r] = false;
        el.col_active[c] = false;
        el.row_count[r] = 0;

        self.piv_row.push(r);
        self.piv_col.push(c);
        self.piv_val.push(pivot);
        Ok(())
    }

    /// Solves `B x = b`; `b` is row-indexed, `x` column-indexed. `work` has length `m`.
    pub fn ftran(&self, b: &[f64], x: &mut [f64], work: &mut [f64]) {
        work.copy_from_slice(b);
        for k in 0..self.m {
            let bp = work[self.piv_row[k]];
            if bp != 0.0 {
                for e in self.l_start[k]..self.l_start[k + 1] {
                    work[self.l_idx[e]] -= self.l_val[e] * bp;
                }
            }
        }
        for k in (0..self.m).rev() {
            let mut acc = work[self.piv_row[k]];
            for e in self.u_start[k]..self.u_start[k + 1] {
                acc -= self.u_val[e] * x[self.u_idx[e]];
            }
            x[self.piv_col[k]] = acc / self.piv_val[k];
        }
    }

    /// Solves `Bᵀ y = c`; `c` is column-indexed, `y` row-indexed. `work` has length `m`.
    pub fn btran(&self, c: &[f64], y: &mut [f64], work: &mut [f64]) {
        work.copy_from_slice(c);
        for k in 0..self.m {
            let z = work[self.piv_col[k]] / self.piv_val[k];
            y[self.piv_row[k]] = z;
            if z != 0.0 {
                for e in self.u_start[k]..self.u_start[k + 1] {
                    work[self.u_idx[e]] -= self.u_val[e] * z;
                }
            }
        }
        for k in (0..self.m).rev() {
            let mut acc = 0.0;
            for e in self.l_start[k]..self.l_start[k + 1] {
                acc += self.l_val[e] * y[self.l_idx[e]];
            }
            if acc != 0.0 {
                y[self.piv_row[k]] -= acc;
            }
        }
    }

    pub fn nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len() + self.m
    }
}

/// Product-form update: column `pos` of the basis was replaced; `alpha = B⁻¹ a_q`.
#[derive(Debug, Clone)]
pub(crate) struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

impl Eta {
    pub fn new(pos: usize, alpha: &[f64]) -> Eta {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &v)| i != pos && v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        Eta {
            pos,
            pivot: alpha[pos],
            entries,
        }
    }

    pub fn apply_ftran(&self, x: &mut [f64]) {
        let xr = x[self.pos] / self.pivot;
        x[self.pos] = xr;
        if xr != 0.0 {
            for &(i, a) in &self.entries {
                x[i] -= a * xr;
            }
        }
    }

    pub fn apply_btran(&self, c: &mut [f64]) {
        let mut acc = c[self.pos];
        for &(i, a) in &self.entries {
            acc -= a * c[i];
        }
        c[self.pos] = acc / self.pivot;
    }
}
