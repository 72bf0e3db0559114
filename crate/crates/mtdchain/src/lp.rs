//! Dense linear-program solver.
//!
//! Minimizes `c . x` subject to equality rows `a . x = b`, upper-bound rows
//! `a . x <= b`, and `x >= 0`, via a two-phase primal simplex on the
//! standard-form tableau. Pivoting uses Bland's rule (lowest eligible index
//! enters, lowest-index basic variable leaves on ratio ties), which
//! terminates on the degenerate programs that arise when empirical
//! distributions carry zero entries.
//!
//! Sized for the lag-weight estimation problem: a handful of variables and
//! constraints, dense storage, deterministic output.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Outcome classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// A linear program in the form used throughout this crate:
/// minimize `objective . x` subject to `eq_constraints` (`row . x = rhs`),
/// `ub_constraints` (`row . x <= rhs`), and `x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub eq_constraints: Vec<(Vec<T>, T)>,
    pub ub_constraints: Vec<(Vec<T>, T)>,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(objective: Vec<T>) -> Self {
        Self {
            objective,
            eq_constraints: Vec::new(),
            ub_constraints: Vec::new(),
        }
    }

    /// Number of structural variables.
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<(), LpError> {
        let v = self.num_vars();
        if v == 0 {
            return Err(LpError::DimensionMismatch(
                "objective must have at least one variable".into(),
            ));
        }
        for (i, (row, _)) in self.eq_constraints.iter().enumerate() {
            if row.len() != v {
                return Err(LpError::DimensionMismatch(format!(
                    "equality row {i} has length {}, expected {v}",
                    row.len()
                )));
            }
        }
        for (i, (row, _)) in self.ub_constraints.iter().enumerate() {
            if row.len() != v {
                return Err(LpError::DimensionMismatch(format!(
                    "inequality row {i} has length {}, expected {v}",
                    row.len()
                )));
            }
        }
        Ok(())
    }
}

/// Solver output. `x` and `objective_value` are meaningful only when
/// `status` is [`LpStatus::Optimal`]; otherwise `x` is empty and the
/// objective is NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub x: Vec<T>,
    pub objective_value: T,
}

impl<T: Scalar> LpSolution<T> {
    /// Largest constraint violation of `x` substituted into `lp`:
    /// equality residuals, inequality overshoot, and negativity. Intended
    /// for independent feasibility checking.
    pub fn max_violation(&self, lp: &LinearProgram<T>) -> T {
        let mut worst = T::zero();
        for (row, rhs) in &lp.eq_constraints {
            let lhs = dot(row, &self.x);
            worst = worst.max((lhs - *rhs).abs());
        }
        for (row, rhs) in &lp.ub_constraints {
            let lhs = dot(row, &self.x);
            worst = worst.max((lhs - *rhs).max(T::zero()));
        }
        for &xi in &self.x {
            worst = worst.max((-xi).max(T::zero()));
        }
        worst
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Dense simplex tableau. Columns: structural vars, then slacks, then
/// artificials, built once per solve.
struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    obj_row: Vec<T>,
    obj_val: T,
    num_structural: usize,
    num_slack: usize,
}

impl<T: Scalar> Tableau<T> {
    fn width(&self) -> usize {
        self.obj_row.len()
    }

    /// Bland's rule iteration until no reduced cost is negative.
    /// Returns false when an unbounded ray is detected.
    fn run_simplex(&mut self) -> bool {
        loop {
            let entering = (0..self.width())
                .find(|&j| self.obj_row[j] < -T::pivot_tol());
            let Some(entering) = entering else {
                return true;
            };

            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][entering];
                if a > T::pivot_tol() {
                    let ratio = self.rhs[i].max(T::zero()) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((best_i, best)) => {
                            if ratio < best
                                || (ratio == best && self.basis[i] < self.basis[best_i])
                            {
                                Some((i, ratio))
                            } else {
                                Some((best_i, best))
                            }
                        }
                    };
                }
            }
            let Some((pivot_row, _)) = leave else {
                return false;
            };
            self.pivot(pivot_row, entering);
        }
    }

    fn pivot(&mut self, pivot_row: usize, entering: usize) {
        let p = self.rows[pivot_row][entering];
        for x in self.rows[pivot_row].iter_mut() {
            *x /= p;
        }
        self.rhs[pivot_row] /= p;
        let prow = self.rows[pivot_row].clone();
        let prhs = self.rhs[pivot_row];

        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == pivot_row {
                continue;
            }
            let factor = row[entering];
            if factor != T::zero() {
                for (x, &pv) in row.iter_mut().zip(&prow) {
                    *x -= factor * pv;
                }
                self.rhs[i] -= factor * prhs;
            }
        }
        let factor = self.obj_row[entering];
        if factor != T::zero() {
            for (x, &pv) in self.obj_row.iter_mut().zip(&prow) {
                *x -= factor * pv;
            }
            // z' = z + reduced_cost * step
            self.obj_val += factor * prhs;
        }
        self.basis[pivot_row] = entering;
    }

    /// Install reduced costs for the cost vector `costs` (indexed over all
    /// current columns) against the current basis.
    fn set_objective(&mut self, costs: &[T]) {
        self.obj_row = costs.to_vec();
        self.obj_val = T::zero();
        for ((row, &rhs), &basic) in self.rows.iter().zip(&self.rhs).zip(&self.basis) {
            let cb = costs[basic];
            if cb != T::zero() {
                for (o, &r) in self.obj_row.iter_mut().zip(row) {
                    *o -= cb * r;
                }
                self.obj_val += cb * rhs;
            }
        }
    }
}

/// Solve `lp`, classifying the outcome as optimal, infeasible, or
/// unbounded. Deterministic: identical input produces an identical
/// solution vector.
pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>, LpError> {
    lp.validate()?;
    let v = lp.num_vars();
    let g = lp.ub_constraints.len();

    // Assemble rows over structural + slack columns, slack j on column v+j.
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(lp.eq_constraints.len() + g);
    let mut rhs: Vec<T> = Vec::new();
    for (row, b) in &lp.eq_constraints {
        let mut r = vec![T::zero(); v + g];
        r[..v].copy_from_slice(row);
        rows.push(r);
        rhs.push(*b);
    }
    for (j, (row, b)) in lp.ub_constraints.iter().enumerate() {
        let mut r = vec![T::zero(); v + g];
        r[..v].copy_from_slice(row);
        r[v + j] = T::one();
        rows.push(r);
        rhs.push(*b);
    }

    // Standard form wants non-negative right-hand sides.
    for i in 0..rows.len() {
        if rhs[i] < T::zero() {
            for x in rows[i].iter_mut() {
                *x = -*x;
            }
            rhs[i] = -rhs[i];
        }
    }

    // Starting basis: a slack where its coefficient survived as +1,
    // otherwise a fresh artificial variable.
    let num_eq = lp.eq_constraints.len();
    let mut basis = vec![usize::MAX; rows.len()];
    let mut num_artificial = 0;
    for (i, row) in rows.iter().enumerate() {
        if i >= num_eq {
            let slack_col = v + (i - num_eq);
            if row[slack_col] == T::one() {
                basis[i] = slack_col;
                continue;
            }
        }
        num_artificial += 1;
    }
    let width = v + g + num_artificial;
    let mut next_artificial = v + g;
    for (i, row) in rows.iter_mut().enumerate() {
        row.resize(width, T::zero());
        if basis[i] == usize::MAX {
            row[next_artificial] = T::one();
            basis[i] = next_artificial;
            next_artificial += 1;
        }
    }

    let mut tab = Tableau {
        rows,
        rhs,
        basis,
        obj_row: vec![T::zero(); width],
        obj_val: T::zero(),
        num_structural: v,
        num_slack: g,
    };

    if num_artificial > 0 {
        let mut phase1 = vec![T::zero(); width];
        for c in phase1.iter_mut().skip(v + g) {
            *c = T::one();
        }
        tab.set_objective(&phase1);
        // Phase one is bounded below by zero, so the ray branch is
        // unreachable; treat it as infeasibility if it ever fires.
        if !tab.run_simplex() || tab.obj_val > T::feas_tol() {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                objective_value: T::nan(),
            });
        }
        drop_artificials(&mut tab);
    }

    let mut phase2 = vec![T::zero(); tab.width()];
    phase2[..v].copy_from_slice(&lp.objective);
    tab.set_objective(&phase2);
    if !tab.run_simplex() {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            objective_value: T::nan(),
        });
    }

    let mut x = vec![T::zero(); v];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < v {
            x[b] = tab.rhs[i];
        }
    }
    let objective_value = dot(&lp.objective, &x);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective_value,
    })
}

/// After a zero-cost phase-one optimum, pivot basic artificials onto real
/// columns where possible, drop rows that turn out redundant, and truncate
/// the artificial columns.
fn drop_artificials<T: Scalar>(tab: &mut Tableau<T>) {
    let real_width = tab.num_structural + tab.num_slack;
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] >= real_width {
            let col = (0..real_width).find(|&j| tab.rows[i][j].abs() > T::pivot_tol());
            match col {
                Some(j) => tab.pivot(i, j),
                None => {
                    // Linearly dependent constraint; its artificial sits at
                    // zero and the row carries no information.
                    tab.rows.remove(i);
                    tab.rhs.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    for row in tab.rows.iter_mut() {
        row.truncate(real_width);
    }
    tab.obj_row.truncate(real_width);
}
