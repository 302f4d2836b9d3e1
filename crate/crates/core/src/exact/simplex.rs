//! Two-phase primal simplex on a dense tableau.
//!
//! Solves `min c^T x` subject to linear rows `a_i^T x {<=, =, >=} b_i` and
//! `x >= 0`. Row updates skip zero entries of the pivot row, which keeps the
//! sparse constraint matrices built by this crate cheap to pivot on.
//!
//! Every solution carries a [`Certificate`]: dual values are read off the
//! final tableau and checked against the original data (primal feasibility,
//! dual feasibility and the duality gap), so callers can tell an optimal
//! basis from a numerically damaged one.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub(super) struct Row {
    pub(super) coeffs: Vec<(usize, f64)>,
    pub(super) relation: Relation,
    pub(super) rhs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub(super) objective: Vec<f64>,
    pub(super) rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("linear program is infeasible (phase-one objective {0:e})")]
    Infeasible(f64),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("pivot limit {0} reached")]
    PivotLimit(usize),
    #[error("tableau of {rows} x {cols} exceeds the size budget of {budget} entries")]
    TooLarge { rows: usize, cols: usize, budget: usize },
    #[error("sparse solver failed: {0}")]
    Sparse(String),
}

/// Residuals of the final basis measured against the original problem data.
/// The dual fields are NaN when the solver reports no multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Certificate {
    /// Largest violation of a constraint or of `x >= 0`.
    pub primal_residual: f64,
    /// Largest violation of dual feasibility (negative reduced cost or wrong-sign dual).
    pub dual_residual: f64,
    /// `|c^T x - b^T y|`.
    pub duality_gap: f64,
}

impl Certificate {
    pub fn max(&self) -> f64 {
        self.primal_residual.max(self.dual_residual).max(self.duality_gap)
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
    /// One multiplier per constraint, in insertion order; empty when the
    /// solver reports none.
    pub duals: Vec<f64>,
    pub pivots: usize,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_pivots: usize,
    /// Largest allowed `rows * columns` of the tableau.
    pub max_entries: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_pivots: 5_000_000,
            max_entries: 60_000_000,
        }
    }
}

const OPT_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-13;
const DEGENERATE_RUN: usize = 50;

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn set_objective(&mut self, var: usize, cost: f64) {
        self.objective[var] = cost;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.objective.len()));
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.solve_with(&SimplexOptions::default())
    }

    pub fn solve_with(&self, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
        let mut tab = Tableau::build(self, opts)?;
        tab.phase_one(opts)?;
        tab.phase_two(&self.objective, opts)?;
        Ok(tab.extract(self))
    }

    /// Largest scaled violation of a constraint or of `x >= 0`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut primal: f64 = x.iter().fold(0.0, |acc, &v| acc.max(-v));
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let viol = match row.relation {
                Relation::Le => (lhs - row.rhs).max(0.0),
                Relation::Ge => (row.rhs - lhs).max(0.0),
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            primal = primal.max(viol / (1.0 + row.rhs.abs()));
        }
        primal
    }

    fn certify(&self, x: &[f64], duals: &[f64]) -> Certificate {
        let mut primal: f64 = x.iter().fold(0.0, |acc, &v| acc.max(-v));
        let mut dual: f64 = 0.0;
        let mut reduced = self.objective.clone();
        let mut dual_obj = 0.0;
        for (row, &y) in self.rows.iter().zip(duals) {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let scale = 1.0 + row.rhs.abs();
            let viol = match row.relation {
                Relation::Le => (lhs - row.rhs).max(0.0),
                Relation::Ge => (row.rhs - lhs).max(0.0),
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            primal = primal.max(viol / scale);
            // Minimization: a <= row carries y <= 0, a >= row y >= 0.
            let sign_viol = match row.relation {
                Relation::Le => y.max(0.0),
                Relation::Ge => (-y).max(0.0),
                Relation::Eq => 0.0,
            };
            dual = dual.max(sign_viol);
            for &(j, a) in &row.coeffs {
                reduced[j] -= a * y;
            }
            dual_obj += row.rhs * y;
        }
        for r in reduced {
            dual = dual.max(-r);
        }
        let primal_obj = self.objective_value(x);
        Certificate {
            primal_residual: primal,
            dual_residual: dual,
            duality_gap: (primal_obj - dual_obj).abs() / (1.0 + primal_obj.abs()),
        }
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major `rows x (cols + 1)`; the last column is the right-hand side.
    data: Vec<f64>,
    /// Reduced costs; the last entry holds minus the current objective.
    obj: Vec<f64>,
    basis: Vec<usize>,
    num_vars: usize,
    /// First artificial column.
    art_start: usize,
    /// For each constraint: its slack/surplus column and artificial column.
    slack_of: Vec<Option<usize>>,
    art_of: Vec<Option<usize>>,
    /// `-1` where the row was negated to make its right-hand side non-negative.
    row_sign: Vec<f64>,
    /// Rows found redundant after phase one.
    dead: Vec<bool>,
    pivots: usize,
    scratch: Vec<usize>,
}

impl Tableau {
    fn build(lp: &LinearProgram, opts: &SimplexOptions) -> Result<Self, LpError> {
        let rows = lp.rows.len();
        let num_vars = lp.objective.len();
        let mut relations = Vec::with_capacity(rows);
        let mut row_sign = Vec::with_capacity(rows);
        for row in &lp.rows {
            let (sign, rel) = if row.rhs < 0.0 {
                let flipped = match row.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (-1.0, flipped)
            } else {
                (1.0, row.relation)
            };
            relations.push(rel);
            row_sign.push(sign);
        }
        let num_slack = relations.iter().filter(|r| **r != Relation::Eq).count();
        let num_art = relations.iter().filter(|r| **r != Relation::Le).count();
        let art_start = num_vars + num_slack;
        let cols = art_start + num_art;
        let entries = rows.saturating_mul(cols + 1);
        if entries > opts.max_entries {
            return Err(LpError::TooLarge {
                rows,
                cols,
                budget: opts.max_entries,
            });
        }
        let width = cols + 1;
        let mut data = vec![0.0; entries];
        let mut basis = vec![0; rows];
        let mut slack_of = vec![None; rows];
        let mut art_of = vec![None; rows];
        let (mut next_slack, mut next_art) = (num_vars, art_start);
        for (r, row) in lp.rows.iter().enumerate() {
            let sign = row_sign[r];
            let line = &mut data[r * width..(r + 1) * width];
            for &(j, a) in &row.coeffs {
                line[j] += sign * a;
            }
            line[cols] = sign * row.rhs;
            match relations[r] {
                Relation::Le => {
                    line[next_slack] = 1.0;
                    basis[r] = next_slack;
                    slack_of[r] = Some(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    line[next_slack] = -1.0;
                    slack_of[r] = Some(next_slack);
                    next_slack += 1;
                    line[next_art] = 1.0;
                    basis[r] = next_art;
                    art_of[r] = Some(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    line[next_art] = 1.0;
                    basis[r] = next_art;
                    art_of[r] = Some(next_art);
                    next_art += 1;
                }
            }
        }
        Ok(Tableau {
            rows,
            cols,
            data,
            obj: vec![0.0; width],
            basis,
            num_vars,
            art_start,
            slack_of,
            art_of,
            row_sign,
            dead: vec![false; rows],
            pivots: 0,
            scratch: Vec::new(),
        })
    }

    #[inline]
    fn width(&self) -> usize {
        self.cols + 1
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    /// Resets the objective row to reduced costs of `cost` for the current basis.
    fn price(&mut self, cost: &[f64]) {
        let width = self.width();
        self.obj.iter_mut().for_each(|v| *v = 0.0);
        self.obj[..cost.len()].copy_from_slice(cost);
        for r in 0..self.rows {
            let cb = cost.get(self.basis[r]).copied().unwrap_or(0.0);
            if cb == 0.0 || self.dead[r] {
                continue;
            }
            let line = &self.data[r * width..(r + 1) * width];
            for (o, &a) in self.obj.iter_mut().zip(line) {
                *o -= cb * a;
            }
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let width = self.width();
        let inv = 1.0 / self.at(pr, pc);
        {
            let line = &mut self.data[pr * width..(pr + 1) * width];
            for v in line.iter_mut() {
                *v *= inv;
            }
            line[pc] = 1.0;
        }
        self.scratch.clear();
        for c in 0..width {
            if self.data[pr * width + c] != 0.0 {
                self.scratch.push(c);
            }
        }
        let (before, rest) = self.data.split_at_mut(pr * width);
        let (pivot_line, after) = rest.split_at_mut(width);
        let nz = &self.scratch;
        let eliminate = |line: &mut [f64]| {
            let factor = line[pc];
            if factor == 0.0 {
                return;
            }
            for &c in nz {
                let v = line[c] - factor * pivot_line[c];
                line[c] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
            line[pc] = 0.0;
        };
        before.chunks_exact_mut(width).for_each(eliminate);
        after.chunks_exact_mut(width).for_each(eliminate);
        eliminate(&mut self.obj);
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Runs simplex iterations on the current objective row. Columns at or
    /// beyond `col_limit` never enter the basis.
    fn iterate(&mut self, col_limit: usize, opts: &SimplexOptions) -> Result<(), LpError> {
        let mut degenerate_run = 0usize;
        loop {
            if self.pivots >= opts.max_pivots {
                return Err(LpError::PivotLimit(opts.max_pivots));
            }
            let bland = degenerate_run > DEGENERATE_RUN;
            let mut entering = None;
            let mut best = -OPT_TOL;
            for c in 0..col_limit {
                let d = self.obj[c];
                if d < best {
                    entering = Some(c);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(pc) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64, f64)> = None;
            for r in 0..self.rows {
                if self.dead[r] {
                    continue;
                }
                let a = self.at(r, pc);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                let better = match leave {
                    None => true,
                    Some((lr, lratio, la)) => {
                        if ratio < lratio - 1e-12 {
                            true
                        } else if ratio <= lratio + 1e-12 {
                            if bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                a > la
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some((r, ratio, a));
                }
            }
            let Some((pr, ratio, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            if ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(pr, pc);
        }
    }

    fn phase_one(&mut self, opts: &SimplexOptions) -> Result<(), LpError> {
        if self.art_start == self.cols {
            return Ok(());
        }
        let mut cost = vec![0.0; self.cols];
        cost[self.art_start..].iter_mut().for_each(|c| *c = 1.0);
        self.price(&cost);
        self.iterate(self.cols, opts)?;
        let infeasibility = -self.obj[self.cols];
        let scale = 1.0
            + (0..self.rows)
                .map(|r| self.rhs(r).abs())
                .fold(0.0, f64::max);
        if infeasibility > 1e-9 * scale {
            return Err(LpError::Infeasible(infeasibility));
        }
        // Drive remaining (zero-valued) artificials out of the basis.
        for r in 0..self.rows {
            if self.basis[r] < self.art_start {
                continue;
            }
            let replacement = (0..self.art_start)
                .filter(|&c| self.at(r, c).abs() > PIVOT_TOL)
                .max_by(|&a, &b| self.at(r, a).abs().total_cmp(&self.at(r, b).abs()));
            match replacement {
                Some(c) => self.pivot(r, c),
                None => self.dead[r] = true,
            }
        }
        Ok(())
    }

    fn phase_two(&mut self, objective: &[f64], opts: &SimplexOptions) -> Result<(), LpError> {
        self.price(objective);
        self.iterate(self.art_start, opts)
    }

    fn extract(&self, lp: &LinearProgram) -> LpSolution {
        let mut x = vec![0.0; self.num_vars];
        for r in 0..self.rows {
            let b = self.basis[r];
            if b < self.num_vars && !self.dead[r] {
                x[b] = self.rhs(r);
            }
        }
        // Reduced cost of a unit column e_r equals -y_r (internal sign).
        let duals: Vec<f64> = (0..self.rows)
            .map(|r| {
                let y = if let Some(a) = self.art_of[r] {
                    -self.obj[a]
                } else {
                    let s = self.slack_of[r].expect("inequality row has a slack");
                    -self.obj[s]
                };
                y * self.row_sign[r]
            })
            .collect();
        let certificate = lp.certify(&x, &duals);
        LpSolution {
            objective: lp.objective_value(&x),
            x,
            duals,
            pivots: self.pivots,
            certificate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6).
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, -3.0);
        lp.set_objective(1, -5.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 4.0);
        lp.add_constraint(vec![(1, 2.0)], Relation::Le, 12.0);
        lp.add_constraint(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        let sol = lp.solve().unwrap();
        assert_relative_eq!(sol.objective, -36.0, epsilon = 1e-12);
        assert_relative_eq!(sol.x[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(sol.x[1], 6.0, epsilon = 1e-12);
        assert!(sol.certificate.max() < 1e-12, "{:?}", sol.certificate);
    }

    #[test]
    fn equality_and_ge_rows_need_phase_one() {
        // min x + 2y + 3z s.t. x + y + z = 1, y + z >= 0.5, x - z <= 0.2
        let mut lp = LinearProgram::new(3);
        for (j, c) in [1.0, 2.0, 3.0].into_iter().enumerate() {
            lp.set_objective(j, c);
        }
        lp.add_constraint(vec![(0, 1.0), (1, 1.0), (2, 1.0)], Relation::Eq, 1.0);
        lp.add_constraint(vec![(1, 1.0), (2, 1.0)], Relation::Ge, 0.5);
        lp.add_constraint(vec![(0, 1.0), (2, -1.0)], Relation::Le, 0.2);
        let sol = lp.solve().unwrap();
        // cost = 2 - x + z along the feasible edge; minimum 1.8 (e.g. x = 0.2, y = 0.8).
        assert_relative_eq!(sol.objective, 1.8, epsilon = 1e-12);
        assert!(sol.certificate.max() < 1e-12, "{:?}", sol.certificate);
    }

    #[test]
    fn negative_rhs_is_normalized() {
        // min x s.t. -x <= -2  (x >= 2)
        let mut lp = LinearProgram::new(1);
        lp.set_objective(0, 1.0);
        lp.add_constraint(vec![(0, -1.0)], Relation::Le, -2.0);
        let sol = lp.solve().unwrap();
        assert_relative_eq!(sol.objective, 2.0);
        assert!(sol.duals[0] <= 0.0);
        assert!(sol.certificate.max() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 1.0);
        lp.set_objective(1, 1.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add_constraint(vec![(0, 2.0), (1, 2.0)], Relation::Eq, 2.0);
        let sol = lp.solve().unwrap();
        assert_relative_eq!(sol.objective, 1.0);
        assert!(sol.certificate.max() < 1e-12, "{:?}", sol.certificate);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 1.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Ge, 2.0);
        assert!(matches!(lp.solve(), Err(LpError::Infeasible(_))));

        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, -1.0);
        lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn size_budget() {
        let mut lp = LinearProgram::new(10);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 1.0);
        let opts = SimplexOptions {
            max_entries: 5,
            ..SimplexOptions::default()
        };
        assert!(matches!(lp.solve_with(&opts), Err(LpError::TooLarge { .. })));
    }

    #[test]
    fn degenerate_assignment_polytope() {
        // 3x3 assignment problem: highly degenerate vertices.
        let cost = [[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let mut lp = LinearProgram::new(9);
        for i in 0..3 {
            for j in 0..3 {
                lp.set_objective(3 * i + j, cost[i][j]);
            }
        }
        for i in 0..3 {
            lp.add_constraint((0..3).map(|j| (3 * i + j, 1.0)).collect(), Relation::Eq, 1.0);
            lp.add_constraint((0..3).map(|j| (3 * j + i, 1.0)).collect(), Relation::Eq, 1.0);
        }
        let sol = lp.solve().unwrap();
        assert_relative_eq!(sol.objective, 5.0, epsilon = 1e-12);
        assert!(sol.certificate.max() < 1e-12);
    }
}
