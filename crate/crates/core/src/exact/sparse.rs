//! Sparse revised-simplex backend for [`LinearProgram`], delegating to `microlp`.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::simplex::{Certificate, LinearProgram, LpError, LpSolution, Relation};

impl LinearProgram {
    /// Solve with a sparse revised simplex. It scales far beyond the dense
    /// tableau but reports no multipliers, so only primal feasibility is
    /// certified.
    pub fn solve_sparse(&self) -> Result<LpSolution, LpError> {
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = self
            .objective
            .iter()
            .map(|&c| problem.add_var(c, (0.0, f64::INFINITY)))
            .collect();
        for row in &self.rows {
            let expr: Vec<_> = row.coeffs.iter().map(|&(j, a)| (vars[j], a)).collect();
            let op = match row.relation {
                Relation::Le => ComparisonOp::Le,
                Relation::Eq => ComparisonOp::Eq,
                Relation::Ge => ComparisonOp::Ge,
            };
            problem.add_constraint(expr.as_slice(), op, row.rhs);
        }
        let outcome = problem.solve().map_err(|e| match e {
            microlp::Error::Infeasible => LpError::Infeasible(f64::NAN),
            microlp::Error::Unbounded => LpError::Unbounded,
            other => LpError::Sparse(other.to_string()),
        })?;
        let solution = outcome
            .solution()
            .ok_or_else(|| LpError::Sparse("no solution returned".into()))?;
        if !outcome.is_optimal() {
            return Err(LpError::Sparse("solver stopped before proving optimality".into()));
        }
        let x: Vec<f64> = vars.iter().map(|&v| solution.var_value_raw(v)).collect();
        Ok(LpSolution {
            objective: self.objective_value(&x),
            certificate: Certificate {
                primal_residual: self.primal_residual(&x),
                dual_residual: f64::NAN,
                duality_gap: f64::NAN,
            },
            pivots: solution.stats().lp_iterations as usize,
            duals: Vec::new(),
            x,
        })
    }
}
