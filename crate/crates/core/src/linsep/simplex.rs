//! Dense two-phase tableau simplex for small box-bounded LPs.
//!
//! Problems arrive as `min c'x` over relational rows `a'x {<=,>=,=} b` with
//! finite per-variable bounds. The solver shifts every variable by its lower
//! bound, adds explicit rows for the upper bounds, and runs the textbook
//! two-phase method on one dense tableau: phase 1 minimizes the sum of
//! artificial variables, phase 2 the real objective, with both cost rows
//! updated by every pivot. Entering columns follow Dantzig's rule (most
//! negative reduced cost, ties to the lowest index) and fall back to Bland's
//! rule once 1000 degenerate pivots have accumulated, so the solve cannot
//! cycle. Everything is sequential and tie-broken by index, which makes the
//! returned vertex a deterministic function of the input.
//!
//! The sizes seen here (tens of variables, low hundreds of rows) make the
//! dense tableau the right tool; there is no sparsity worth exploiting and
//! no need for factorization updates.

use crate::error::{Error, Result};

/// Relation of a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `min objective . x` subject to `constraints` and finite box `bounds`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    pub fn n(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::invalid("LP has no variables"));
        }
        if self.bounds.len() != n {
            return Err(Error::invalid("LP bounds length differs from variable count"));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("LP objective has non-finite coefficient"));
        }
        for (lo, hi) in &self.bounds {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid("LP bounds must be finite"));
            }
            if lo > hi {
                return Err(Error::invalid(format!("LP bound [{lo}, {hi}] is empty")));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::invalid(format!("constraint {i} has wrong width")));
            }
            if c.coeffs.iter().any(|v| !v.is_finite()) || !c.rhs.is_finite() {
                return Err(Error::invalid(format!("constraint {i} has non-finite value")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Tableau objective value (shift included). Meaningful for `Optimal`.
    pub objective_value: f64,
    /// Variable assignment in the original coordinates; empty unless
    /// `Optimal`.
    pub assignment: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct LpTolerances {
    /// Constraint violation allowed in a reported solution.
    pub feasibility: f64,
    /// Slack allowed when comparing objective values.
    pub objective: f64,
}

impl Default for LpTolerances {
    fn default() -> Self {
        LpTolerances { feasibility: 1e-7, objective: 1e-6 }
    }
}

/// Reduced costs below this magnitude count as zero.
const RCOST_TOL: f64 = 1e-9;
/// Pivot elements must exceed this magnitude.
const PIVOT_TOL: f64 = 1e-9;
/// Ratio-test improvements below this are degenerate.
const DEGEN_TOL: f64 = 1e-12;
/// Degenerate pivots before switching to Bland's rule.
const BLAND_AFTER: usize = 1000;

struct Tableau {
    ncols: usize,
    n_artificial: usize,
    rows: Vec<Vec<f64>>,
    cost1: Vec<f64>,
    cost2: Vec<f64>,
    basis: Vec<usize>,
    banned: Vec<bool>,
    degenerate: usize,
    bland: bool,
    iterations: usize,
    cap: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c];
        for v in &mut self.rows[r] {
            *v /= piv;
        }
        let pivot_row = self.rows[r].clone();
        for (r2, row) in self.rows.iter_mut().enumerate() {
            if r2 == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
        for cost in [&mut self.cost1, &mut self.cost2] {
            let f = cost[c];
            if f != 0.0 {
                for (v, p) in cost.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
        self.basis[r] = c;
    }

    fn choose_col(&self, phase1: bool) -> Option<usize> {
        let cost = if phase1 { &self.cost1 } else { &self.cost2 };
        if self.bland {
            return (0..self.ncols).find(|&j| !self.banned[j] && cost[j] < -RCOST_TOL);
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.ncols {
            if self.banned[j] || cost[j] >= -RCOST_TOL {
                continue;
            }
            match best {
                Some((_, c)) if cost[j] >= c => {}
                _ => best = Some((j, cost[j])),
            }
        }
        best.map(|(j, _)| j)
    }

    fn choose_row(&self, c: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows.len() {
            let a = self.rows[r][c];
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.rows[r][self.ncols].max(0.0) / a;
            let better = match best {
                None => true,
                Some((br, bratio)) => {
                    ratio < bratio - DEGEN_TOL
                        || ((ratio - bratio).abs() <= DEGEN_TOL && self.basis[r] < self.basis[br])
                }
            };
            if better {
                best = Some((r, ratio));
            }
        }
        best
    }

    /// Pivot until the active cost row has no improving column.
    /// `Ok(true)` means optimal, `Ok(false)` unbounded.
    fn run_phase(&mut self, phase1: bool) -> Result<bool> {
        let first_art = self.first_artificial();
        loop {
            let Some(c) = self.choose_col(phase1) else {
                return Ok(true);
            };
            let Some((r, ratio)) = self.choose_row(c) else {
                return Ok(false);
            };
            if ratio <= DEGEN_TOL {
                self.degenerate += 1;
                if self.degenerate >= BLAND_AFTER {
                    self.bland = true;
                }
            }
            let leaving = self.basis[r];
            self.pivot(r, c);
            if leaving >= first_art {
                self.banned[leaving] = true;
            }
            self.iterations += 1;
            if self.iterations > self.cap {
                return Err(Error::Numerical(format!(
                    "simplex exceeded {} iterations",
                    self.cap
                )));
            }
        }
    }

    fn first_artificial(&self) -> usize {
        self.ncols - self.n_artificial
    }

    fn value(&self, cost: &[f64]) -> f64 {
        -cost[self.ncols]
    }
}

/// Solve the LP. Statuses `Optimal`, `Infeasible` and `Unbounded` are
/// ordinary outcomes; `Err` is reserved for numerical trouble (iteration cap,
/// or an "optimal" basis that fails the final feasibility re-check).
pub fn solve_lp(problem: &LpProblem, tol: &LpTolerances) -> Result<LpSolution> {
    problem.validate()?;
    let n = problem.n();
    let lo: Vec<f64> = problem.bounds.iter().map(|b| b.0).collect();

    // Variables with lo == hi are fixed; substitute them away.
    let active: Vec<usize> = (0..n).filter(|&j| problem.bounds[j].1 > problem.bounds[j].0).collect();
    let na = active.len();
    let shift: f64 = (0..n).map(|j| problem.objective[j] * lo[j]).sum();

    if na == 0 {
        return Ok(finish(problem, tol, lo, shift));
    }

    // Shifted relational rows, then one upper-bound row per active variable.
    struct Row {
        coeffs: Vec<f64>,
        relation: Relation,
        rhs: f64,
    }
    let mut rows: Vec<Row> = Vec::with_capacity(problem.constraints.len() + na);
    for c in &problem.constraints {
        let base: f64 = (0..n).map(|j| c.coeffs[j] * lo[j]).sum();
        rows.push(Row {
            coeffs: active.iter().map(|&j| c.coeffs[j]).collect(),
            relation: c.relation,
            rhs: c.rhs - base,
        });
    }
    for (aj, &j) in active.iter().enumerate() {
        let mut coeffs = vec![0.0; na];
        coeffs[aj] = 1.0;
        rows.push(Row { coeffs, relation: Relation::Le, rhs: problem.bounds[j].1 - lo[j] });
    }
    // Normalize to nonnegative right-hand sides.
    for row in &mut rows {
        if row.rhs < 0.0 {
            for v in &mut row.coeffs {
                *v = -*v;
            }
            row.rhs = -row.rhs;
            row.relation = match row.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let nrows = rows.len();
    let n_slack = rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let n_artificial = rows.iter().filter(|r| r.relation != Relation::Le).count();
    let ncols = na + n_slack + n_artificial;
    // Floored so the Bland switch can engage even on toy instances where
    // 50 (cols + rows) would be smaller than the degenerate-pivot budget.
    let cap = (50 * (ncols + nrows)).max(2 * BLAND_AFTER);

    let mut tableau_rows = vec![vec![0.0; ncols + 1]; nrows];
    let mut basis = vec![0usize; nrows];
    let mut next_slack = na;
    let mut next_art = na + n_slack;
    for (r, row) in rows.iter().enumerate() {
        let t = &mut tableau_rows[r];
        t[..na].copy_from_slice(&row.coeffs);
        t[ncols] = row.rhs;
        match row.relation {
            Relation::Le => {
                t[next_slack] = 1.0;
                basis[r] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                t[next_slack] = -1.0;
                next_slack += 1;
                t[next_art] = 1.0;
                basis[r] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                t[next_art] = 1.0;
                basis[r] = next_art;
                next_art += 1;
            }
        }
    }

    // Phase-1 costs: one per artificial, then fold in the artificial rows so
    // the basic columns price at zero.
    let mut cost1 = vec![0.0; ncols + 1];
    for j in na + n_slack..ncols {
        cost1[j] = 1.0;
    }
    for (r, row) in tableau_rows.iter().enumerate() {
        if basis[r] >= na + n_slack {
            for (v, p) in cost1.iter_mut().zip(row) {
                *v -= p;
            }
        }
    }
    let mut cost2 = vec![0.0; ncols + 1];
    for (aj, &j) in active.iter().enumerate() {
        cost2[aj] = problem.objective[j];
    }

    let mut tab = Tableau {
        ncols,
        n_artificial,
        rows: tableau_rows,
        cost1,
        cost2,
        basis,
        banned: vec![false; ncols],
        degenerate: 0,
        bland: false,
        iterations: 0,
        cap,
    };

    let rhs_scale = 1.0 + tab.rows.iter().map(|r| r[ncols].abs()).fold(0.0, f64::max);
    if !tab.run_phase(true)? {
        // Phase 1 minimizes a sum of bounded variables; it cannot be
        // unbounded unless arithmetic already went off the rails.
        return Err(Error::Numerical("phase 1 reported unbounded".into()));
    }
    let phase1_value = tab.value(&tab.cost1);
    if phase1_value > tol.feasibility * rhs_scale {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            objective_value: f64::NAN,
            assignment: Vec::new(),
        });
    }

    // Drive leftover artificials out of the basis. Rows where that is
    // impossible are redundant: all-zero apart from artificial columns, so
    // later pivots leave them untouched.
    let first_art = tab.first_artificial();
    for r in 0..nrows {
        if tab.basis[r] < first_art {
            continue;
        }
        if let Some(c) = (0..first_art).find(|&c| !tab.banned[c] && tab.rows[r][c].abs() > PIVOT_TOL)
        {
            tab.pivot(r, c);
        }
    }
    for j in first_art..ncols {
        tab.banned[j] = true;
    }

    if !tab.run_phase(false)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective_value: f64::NEG_INFINITY,
            assignment: Vec::new(),
        });
    }

    // Recover the original coordinates.
    let mut x = lo;
    for r in 0..nrows {
        let b = tab.basis[r];
        if b < na {
            x[active[b]] = problem.bounds[active[b]].0 + tab.rows[r][ncols].max(0.0);
        }
    }
    for j in 0..n {
        x[j] = x[j].clamp(problem.bounds[j].0, problem.bounds[j].1);
    }
    verify_feasible(problem, &x, tol)?;
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective_value: tab.value(&tab.cost2) + shift,
        assignment: x,
    })
}

/// All variables fixed: nothing to optimize, just check the rows.
fn finish(problem: &LpProblem, tol: &LpTolerances, x: Vec<f64>, shift: f64) -> LpSolution {
    if verify_feasible(problem, &x, tol).is_ok() {
        LpSolution { status: LpStatus::Optimal, objective_value: shift, assignment: x }
    } else {
        LpSolution {
            status: LpStatus::Infeasible,
            objective_value: f64::NAN,
            assignment: Vec::new(),
        }
    }
}

fn verify_feasible(problem: &LpProblem, x: &[f64], tol: &LpTolerances) -> Result<()> {
    for (i, c) in problem.constraints.iter().enumerate() {
        let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        let slack = tol.feasibility * (1.0 + c.rhs.abs());
        let ok = match c.relation {
            Relation::Le => lhs <= c.rhs + slack,
            Relation::Ge => lhs >= c.rhs - slack,
            Relation::Eq => (lhs - c.rhs).abs() <= slack,
        };
        if !ok {
            return Err(Error::Numerical(format!(
                "constraint {i} violated by {:.3e} at reported optimum",
                (lhs - c.rhs).abs()
            )));
        }
    }
    Ok(())
}
