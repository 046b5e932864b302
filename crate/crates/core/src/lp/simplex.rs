//! Two-phase revised primal simplex.
//!
//! Standard form: `A_eq x = b_eq`, `A_ge x - s = b_ge`, `x, s >= 0`. Rows that
//! the all-slack basis cannot satisfy get an artificial variable; phase one
//! minimizes their sum. Pricing is Dantzig (most negative reduced cost, lowest
//! index on ties) until the Bland threshold, then Bland's rule; with a finite
//! `pricing_section` Dantzig pricing is partial, scanning cyclic sections and
//! taking the best candidate of the first section that has one. The ratio test
//! is a two-pass Harris test outside Bland mode.
//!
//! A column that can never improve the objective and only tightens `>=` rows
//! (cost not improving, entries `<= 0` in `>=` rows, none in equality rows) is
//! fixed at zero up front; some optimum always has it there.

use log::{debug, trace};

use super::lu::{Eta, LuFactors};
use super::{LinearProgram, LpSolution, LpStatus, Sense, SolverOptions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Structural,
    /// Surplus variable of a `>=` row: column `-e_row`.
    Slack(usize),
    /// Column `sign · e_row`.
    Artificial(usize, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic(usize),
    Nonbasic,
    /// Never (re-)enters: an artificial that left the basis, or a dominated
    /// column fixed at zero.
    Dead,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    One,
    Two,
}

enum Outcome {
    Optimal,
    Unbounded,
}

pub(crate) struct Simplex<'a> {
    options: &'a SolverOptions,
    sense: Sense,
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    objective: Vec<f64>,
    rhs: Vec<f64>,
    kinds: Vec<Kind>,
    state: Vec<State>,
    basic: Vec<usize>,
    /// Basic artificials that could not be driven out after phase one.
    pinned: Vec<bool>,
    x_b: Vec<f64>,
    cost: Vec<f64>,
    lu: Option<LuFactors>,
    etas: Vec<Eta>,
    iterations: usize,
    bland_after: usize,
    /// Where the next partial-pricing scan starts.
    price_start: usize,
    work: Vec<f64>,
    work2: Vec<f64>,
}

impl<'a> Simplex<'a> {
    pub fn new(lp: &LinearProgram, options: &'a SolverOptions) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();
        let rows: Vec<(&super::SparseRow, f64)> = lp
            .eq_rows()
            .iter()
            .chain(lp.ge_rows())
            .map(|(r, b)| (r, *b))
            .collect();
        let m_eq = lp.eq_rows().len();

        // CSC of the structural part
        let mut counts = vec![0usize; n + 1];
        for (row, _) in &rows {
            for &(c, v) in row.entries() {
                if v != 0.0 {
                    counts[c + 1] += 1;
                }
            }
        }
        for c in 0..n {
            counts[c + 1] += counts[c];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let nnz = col_start[n];
        let mut col_row = vec![0; nnz];
        let mut col_val = vec![0.0; nnz];
        for (r, (row, _)) in rows.iter().enumerate() {
            for &(c, v) in row.entries() {
                if v != 0.0 {
                    col_row[fill[c]] = r;
                    col_val[fill[c]] = v;
                    fill[c] += 1;
                }
            }
        }

        let mut objective = vec![0.0; n];
        for &(c, v) in lp.objective().entries() {
            objective[c] = v;
        }

        let rhs: Vec<f64> = rows.iter().map(|(_, b)| *b).collect();
        let mut kinds = vec![Kind::Structural; n];
        let mut basic = vec![usize::MAX; m];
        for r in m_eq..m {
            kinds.push(Kind::Slack(r));
            if rhs[r] <= 0.0 {
                basic[r] = kinds.len() - 1;
            }
        }
        for r in 0..m {
            if basic[r] == usize::MAX {
                let sign = if rhs[r] >= 0.0 { 1.0 } else { -1.0 };
                kinds.push(Kind::Artificial(r, sign));
                basic[r] = kinds.len() - 1;
            }
        }
        let mut state = vec![State::Nonbasic; kinds.len()];
        for (p, &v) in basic.iter().enumerate() {
            state[v] = State::Basic(p);
        }
        // A column that cannot improve the objective and only decreases the
        // left-hand side of `>=` rows (with no equality entries) is zero in
        // some optimal solution; it is fixed there and never priced.
        let mut dominated = 0;
        for j in 0..n {
            let improving = match lp.sense() {
                Sense::Minimize => objective[j] < 0.0,
                Sense::Maximize => objective[j] > 0.0,
            };
            let harmless = (col_start[j]..col_start[j + 1]).all(|e| col_row[e] >= m_eq && col_val[e] <= 0.0);
            if !improving && harmless {
                state[j] = State::Dead;
                dominated += 1;
            }
        }
        if dominated > 0 {
            debug!("{dominated} dominated columns fixed at zero");
        }
        let bland_after = options.bland_after.unwrap_or(5 * (m + n));

        Simplex {
            options,
            sense: lp.sense(),
            m,
            n,
            col_start,
            col_row,
            col_val,
            objective,
            rhs,
            pinned: vec![false; kinds.len()],
            cost: vec![0.0; kinds.len()],
            kinds,
            state,
            basic,
            x_b: vec![0.0; m],
            lu: None,
            etas: Vec::new(),
            iterations: 0,
            bland_after,
            price_start: 0,
            work: vec![0.0; m],
            work2: vec![0.0; m],
        }
    }

    fn column(&self, var: usize) -> Vec<(usize, f64)> {
        match self.kinds[var] {
            Kind::Structural => (self.col_start[var]..self.col_start[var + 1])
                .map(|e| (self.col_row[e], self.col_val[e]))
                .collect(),
            Kind::Slack(r) => vec![(r, -1.0)],
            Kind::Artificial(r, s) => vec![(r, s)],
        }
    }

    fn dot_column(&self, var: usize, y: &[f64]) -> f64 {
        match self.kinds[var] {
            Kind::Structural => (self.col_start[var]..self.col_start[var + 1])
                .map(|e| self.col_val[e] * y[self.col_row[e]])
                .sum(),
            Kind::Slack(r) => -y[r],
            Kind::Artificial(r, s) => s * y[r],
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let cols = self.basic.iter().map(|&v| self.column(v)).collect();
        let lu = LuFactors::factorize(self.m, cols)
            .map_err(|s| Error::Numerical(format!("singular basis (rank {} of {})", s.rank, self.m)))?;
        trace!("refactor: m = {}, lu nnz = {}", self.m, lu.nnz());
        self.etas.clear();
        let mut x = vec![0.0; self.m];
        lu.ftran(&self.rhs, &mut x, &mut self.work);
        self.x_b = x;
        self.lu = Some(lu);
        Ok(())
    }

    /// `B⁻¹ a` for a row-indexed dense vector `a`.
    fn ftran(&mut self, a: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.m];
        self.lu
            .as_ref()
            .expect("factorized")
            .ftran(a, &mut x, &mut self.work);
        for eta in &self.etas {
            eta.apply_ftran(&mut x);
        }
        x
    }

    /// `B⁻ᵀ c` for a position-indexed vector `c`.
    fn btran(&mut self, mut c: Vec<f64>) -> Vec<f64> {
        for eta in self.etas.iter().rev() {
            eta.apply_btran(&mut c);
        }
        let mut y = vec![0.0; self.m];
        self.lu
            .as_ref()
            .expect("factorized")
            .btran(&c, &mut y, &mut self.work2);
        y
    }

    fn set_phase_costs(&mut self, phase: Phase) {
        let flip = if self.sense == Sense::Maximize { -1.0 } else { 1.0 };
        for (v, kind) in self.kinds.iter().enumerate() {
            self.cost[v] = match (phase, kind) {
                (Phase::One, Kind::Artificial(..)) => 1.0,
                (Phase::One, _) => 0.0,
                (Phase::Two, Kind::Structural) => flip * self.objective[v],
                (Phase::Two, _) => 0.0,
            };
        }
    }

    fn duals(&mut self) -> Vec<f64> {
        let cb: Vec<f64> = self.basic.iter().map(|&v| self.cost[v]).collect();
        self.btran(cb)
    }

    fn reduced_cost(&self, v: usize, y: &[f64]) -> f64 {
        if v < self.n {
            let range = self.col_start[v]..self.col_start[v + 1];
            let dot: f64 = self.col_row[range.clone()]
                .iter()
                .zip(&self.col_val[range])
                .map(|(&r, &a)| a * y[r])
                .sum();
            self.cost[v] - dot
        } else {
            self.cost[v] - self.dot_column(v, y)
        }
    }

    /// Partial Dantzig pricing: sections of the variable list are scanned
    /// cyclically from where the last search stopped, and the most negative
    /// reduced cost of the first section holding a candidate wins. Bland mode
    /// scans everything from index 0.
    fn choose_entering(&mut self, y: &[f64], bland: bool) -> Option<usize> {
        let total = self.kinds.len();
        let eligible = |s: &Self, v: usize| {
            matches!(s.state[v], State::Nonbasic) && !matches!(s.kinds[v], Kind::Artificial(..))
        };
        if bland {
            return (0..total).find(|&v| eligible(self, v) && self.reduced_cost(v, y) < -self.options.tol);
        }
        let section = self.options.pricing_section.min(total).max(1);
        let mut best: Option<usize> = None;
        let mut best_d = -self.options.tol;
        let mut scanned = 0;
        let mut v = self.price_start % total;
        while scanned < total {
            let end = (scanned + section).min(total);
            while scanned < end {
                if eligible(self, v) {
                    let d = self.reduced_cost(v, y);
                    if d < best_d || (d == best_d && best.is_some_and(|b| v < b)) {
                        best_d = d;
                        best = Some(v);
                    }
                }
                scanned += 1;
                v += 1;
                if v == total {
                    v = 0;
                }
            }
            if best.is_some() {
                break;
            }
        }
        self.price_start = v;
        best
    }

    /// Leaving position and step length, or `None` when the ray is unbounded.
    fn ratio_test(&self, alpha: &[f64], bland: bool) -> Option<(usize, f64)> {
        let tol = self.options.tol;
        let blocking = |p: usize| -> Option<f64> {
            let a = alpha[p];
            if self.pinned[self.basic[p]] {
                return (a.abs() > tol).then_some(0.0);
            }
            (a > tol).then(|| self.x_b[p].max(0.0) / a)
        };

        if bland {
            let mut best: Option<(usize, f64)> = None;
            for p in 0..self.m {
                if let Some(t) = blocking(p) {
                    let better = match best {
                        None => true,
                        Some((bp, bt)) => {
                            t < bt - 1e-12 * (1.0 + bt)
                                || (t <= bt + 1e-12 * (1.0 + bt) && self.basic[p] < self.basic[bp])
                        }
                    };
                    if better {
                        best = Some((p, t));
                    }
                }
            }
            return best;
        }

        // Harris pass 1: bound on the step with relaxed feasibility
        let mut theta_max = f64::INFINITY;
        for p in 0..self.m {
            let a = alpha[p];
            if self.pinned[self.basic[p]] {
                if a.abs() > tol {
                    theta_max = theta_max.min(tol / a.abs());
                }
            } else if a > tol {
                theta_max = theta_max.min((self.x_b[p].max(0.0) + tol) / a);
            }
        }
        if theta_max == f64::INFINITY {
            return None;
        }
        // pass 2: largest pivot among admissible ratios
        let mut best: Option<(usize, f64, f64)> = None;
        for p in 0..self.m {
            let Some(t) = blocking(p) else { continue };
            if t > theta_max {
                continue;
            }
            let size = alpha[p].abs();
            let better = match best {
                None => true,
                Some((bp, _, bs)) => size > bs || (size == bs && self.basic[p] < self.basic[bp]),
            };
            if better {
                best = Some((p, t, size));
            }
        }
        best.map(|(p, t, _)| (p, t))
    }

    fn pivot(&mut self, entering: usize, leave_pos: usize, theta: f64, alpha: &[f64]) -> Result<()> {
        for (x, a) in self.x_b.iter_mut().zip(alpha) {
            *x -= theta * a;
        }
        self.x_b[leave_pos] = theta;
        let leaving = self.basic[leave_pos];
        self.state[leaving] = if matches!(self.kinds[leaving], Kind::Artificial(..)) {
            State::Dead
        } else {
            State::Nonbasic
        };
        self.pinned[leaving] = false;
        self.state[entering] = State::Basic(leave_pos);
        self.basic[leave_pos] = entering;
        self.etas.push(Eta::new(leave_pos, alpha));
        self.iterations += 1;
        if self.etas.len() >= self.options.refactor_interval {
            self.refactor()?;
        }
        Ok(())
    }

    fn dense_column(&self, var: usize) -> Vec<f64> {
        let mut a = vec![0.0; self.m];
        for (r, v) in self.column(var) {
            a[r] += v;
        }
        a
    }

    fn run(&mut self, phase: Phase) -> Result<Outcome> {
        self.set_phase_costs(phase);
        loop {
            let bland = self.iterations >= self.bland_after;
            let y = self.duals();
            let Some(q) = self.choose_entering(&y, bland) else {
                if self.etas.is_empty() {
                    return Ok(Outcome::Optimal);
                }
                // confirm optimality on a fresh factorization
                self.refactor()?;
                continue;
            };
            if self.iterations >= self.options.max_iterations {
                return Err(Error::IterationLimit {
                    limit: self.options.max_iterations,
                });
            }
            let a = self.dense_column(q);
            let alpha = self.ftran(&a);
            let Some((p, theta)) = self.ratio_test(&alpha, bland) else {
                if phase == Phase::One {
                    return Err(Error::Numerical("phase one reported an unbounded ray".into()));
                }
                return Ok(Outcome::Unbounded);
            };
            trace!(
                "iter {} phase {:?} enter {} leave {} theta {:e}",
                self.iterations,
                phase,
                q,
                self.basic[p],
                theta
            );
            self.pivot(q, p, theta, &alpha)?;
        }
    }

    fn phase_one_objective(&self) -> f64 {
        self.basic
            .iter()
            .zip(&self.x_b)
            .filter(|(&v, _)| matches!(self.kinds[v], Kind::Artificial(..)))
            .map(|(_, &x)| x.max(0.0))
            .sum()
    }

    fn phase_one(&mut self) -> Result<f64> {
        self.refactor()?;
        if self.kinds.iter().any(|k| matches!(k, Kind::Artificial(..))) {
            self.run(Phase::One)?;
        }
        Ok(self.phase_one_objective())
    }

    /// Phase-one infeasibility and the threshold above which `solve` reports
    /// the problem infeasible.
    pub fn phase_one_value(mut self) -> Result<(f64, f64)> {
        let threshold = self.infeasibility_threshold();
        if self.m == 0 {
            return Ok((0.0, threshold));
        }
        Ok((self.phase_one()?, threshold))
    }

    fn infeasibility_threshold(&self) -> f64 {
        self.options.tol.max(1e-9) * (1.0 + self.rhs_scale())
    }

    /// Pivots zero-level artificials out of the basis where possible.
    fn drive_out_artificials(&mut self) -> Result<()> {
        let tol = self.options.tol;
        for p in 0..self.m {
            let v = self.basic[p];
            if !matches!(self.kinds[v], Kind::Artificial(..)) {
                continue;
            }
            let mut e = vec![0.0; self.m];
            e[p] = 1.0;
            let rho = self.btran(e);
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.kinds.len() {
                if self.state[j] != State::Nonbasic || matches!(self.kinds[j], Kind::Artificial(..)) {
                    continue;
                }
                let val = self.dot_column(j, &rho).abs();
                if val > 1e3 * tol && best.is_none_or(|(_, b)| val > b) {
                    best = Some((j, val));
                }
            }
            match best {
                Some((j, _)) => {
                    let a = self.dense_column(j);
                    let alpha = self.ftran(&a);
                    self.pivot(j, p, 0.0, &alpha)?;
                    // the pivot may have refactored; keep zero level exact
                    if let State::Basic(pos) = self.state[j] {
                        self.x_b[pos] = self.x_b[pos].max(0.0);
                    }
                }
                None => {
                    debug!("row {p} is redundant; artificial stays basic at zero");
                    self.pinned[v] = true;
                }
            }
        }
        Ok(())
    }

    pub fn solve(mut self) -> Result<LpSolution> {
        if self.m == 0 {
            return Ok(self.solve_unconstrained());
        }
        let infeasibility = self.phase_one()?;
        debug!(
            "phase one done after {} iterations, infeasibility {:e}",
            self.iterations, infeasibility
        );
        if infeasibility > self.infeasibility_threshold() {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: None,
                objective_value: None,
                duals: None,
                iterations: self.iterations,
            });
        }
        self.drive_out_artificials()?;
        match self.run(Phase::Two)? {
            Outcome::Unbounded => Ok(LpSolution {
                status: LpStatus::Unbounded,
                x: None,
                objective_value: None,
                duals: None,
                iterations: self.iterations,
            }),
            Outcome::Optimal => {
                let mut x = vec![0.0; self.n];
                for (p, &v) in self.basic.iter().enumerate() {
                    if v < self.n {
                        x[v] = self.x_b[p].max(0.0);
                    }
                }
                let value: f64 = x.iter().zip(&self.objective).map(|(a, c)| a * c).sum();
                debug!("optimal after {} iterations, value {value}", self.iterations);
                // internal costs are negated for maximization
                let flip = if self.sense == Sense::Maximize { -1.0 } else { 1.0 };
                let duals = self.duals().into_iter().map(|y| flip * y).collect();
                Ok(LpSolution {
                    status: LpStatus::Optimal,
                    x: Some(x),
                    objective_value: Some(value),
                    duals: Some(duals),
                    iterations: self.iterations,
                })
            }
        }
    }

    fn rhs_scale(&self) -> f64 {
        self.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()))
    }

    fn solve_unconstrained(&self) -> LpSolution {
        let improving = self.objective.iter().any(|&c| match self.sense {
            Sense::Maximize => c > 0.0,
            Sense::Minimize => c < 0.0,
        });
        if improving {
            LpSolution {
                status: LpStatus::Unbounded,
                x: None,
                objective_value: None,
                duals: None,
                iterations: 0,
            }
        } else {
            LpSolution {
                status: LpStatus::Optimal,
                x: Some(vec![0.0; self.n]),
                objective_value: Some(0.0),
                duals: Some(Vec::new()),
                iterations: 0,
            }
        }
    }
}
