//! Exact reference solvers: the integer metric by exhaustive search, the
//! LP-relaxed metric, single-frame GOSPA, and plan evaluation.

mod assignment;
mod brute;
mod relaxed;
mod sparse;
pub mod simplex;

use std::time::Duration;

use ndarray::Array2;
use thiserror::Error;

use crate::config::ConfigError;
use crate::cost::{CostError, FrameCosts};

pub use assignment::solve_assignment;
pub use brute::{brute_force_tgospa, brute_force_tgospa_with, count_frame_matchings, DEFAULT_ENUMERATION_BUDGET};
pub use relaxed::{solve_relaxed_lp, solve_relaxed_lp_with, LpBackend, LpOptions};

/// Stack of `T` assignment matrices, each `(m + 1) x (n + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentPlan {
    pub frames: Vec<Array2<f64>>,
}

impl AssignmentPlan {
    /// `true` when every real-by-real entry is 0 or 1.
    pub fn is_integral(&self) -> bool {
        self.frames.iter().all(|w| {
            let (rows, cols) = w.dim();
            w.slice(ndarray::s![..rows - 1, ..cols - 1])
                .iter()
                .all(|&v| v == 0.0 || v == 1.0)
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverStats {
    /// Simplex pivots, or the number of dynamic-programming states visited.
    pub iterations: usize,
    pub wall_time: Duration,
    /// Independent subproblems solved (connected components of the LP).
    pub subproblems: usize,
    /// Largest `constraints x variables` of any LP solved.
    pub largest_lp: (usize, usize),
    /// Worst certificate residual across subproblems.
    pub certificate_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    /// Optimal value before the `1/p` power.
    pub objective: f64,
    /// `objective^(1/p)`.
    pub metric: f64,
    pub plan: AssignmentPlan,
    pub stats: SolverStats,
}

#[derive(Debug, Error)]
pub enum ExactError {
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("enumeration budget exceeded: {candidates:e} candidate plans > {budget:e}; use the LP or Sinkhorn solver")]
    BudgetExceeded { candidates: f64, budget: f64 },
    #[error("LP subproblem failed: {0}")]
    Lp(#[from] simplex::LpError),
    #[error("LP solution not certified: residual {residual:e} exceeds {tolerance:e}")]
    Uncertified { residual: f64, tolerance: f64 },
    #[error("plan has {found} frames of shape {shape:?}, expected {expected} of shape ({m}+1, {n}+1)")]
    PlanShape {
        found: usize,
        expected: usize,
        shape: (usize, usize),
        m: usize,
        n: usize,
    },
    #[error("plan violates the assignment constraints by {0:e} (frame {1})")]
    Infeasible(f64, usize),
}

/// Largest violation of the row/column sum and non-negativity constraints.
pub fn plan_violation(plan: &AssignmentPlan, m: usize, n: usize) -> (f64, usize) {
    let mut worst = (0.0f64, 0usize);
    for (t, w) in plan.frames.iter().enumerate() {
        let mut v: f64 = w.iter().fold(0.0, |acc, &x| acc.max(-x));
        for i in 0..m {
            v = v.max((w.row(i).sum() - 1.0).abs());
        }
        for j in 0..n {
            v = v.max((w.column(j).sum() - 1.0).abs());
        }
        if v > worst.0 {
            worst = (v, t);
        }
    }
    worst
}

/// Objective of the relaxed problem at a given plan: frame costs plus
/// `gamma^p / 2` times the total absolute change of the real-by-real entries.
pub fn evaluate_plan_objective(
    plan: &AssignmentPlan,
    frames: &FrameCosts,
    gamma: f64,
    p: f64,
) -> Result<f64, ExactError> {
    let (m, n) = (frames.m, frames.n);
    let shape_ok = plan.frames.len() == frames.time_steps()
        && plan.frames.iter().all(|w| w.dim() == (m + 1, n + 1));
    if !shape_ok {
        return Err(ExactError::PlanShape {
            found: plan.frames.len(),
            expected: frames.time_steps(),
            shape: plan.frames.first().map_or((0, 0), |w| w.dim()),
            m,
            n,
        });
    }
    let (violation, t) = plan_violation(plan, m, n);
    if violation > 1e-9 {
        return Err(ExactError::Infeasible(violation, t + 1));
    }
    let frame_term: f64 = plan
        .frames
        .iter()
        .zip(&frames.frames)
        .map(|(w, d)| (w * d).sum())
        .sum();
    let mut switch_term = 0.0;
    for pair in plan.frames.windows(2) {
        for i in 0..m {
            for j in 0..n {
                switch_term += (pair[1][[i, j]] - pair[0][[i, j]]).abs();
            }
        }
    }
    Ok(frame_term + gamma.powf(p) / 2.0 * switch_term)
}

/// `objective^(1/p)`; tiny negative round-off is clamped to zero.
pub fn tgospa_metric(objective: f64, p: f64) -> f64 {
    objective.max(0.0).powf(1.0 / p)
}

/// Optimal single-frame assignment of an `(m + 1) x (n + 1)` cost matrix.
///
/// The unbalanced problem is reduced to a balanced `(m + n) x (m + n)`
/// assignment in which every truth and every estimate owns a private dummy
/// partner charged at its dummy-row/column cost.
pub fn solve_gospa_frame(d: &Array2<f64>) -> (f64, Array2<f64>) {
    let (rows, cols) = d.dim();
    let (m, n) = (rows - 1, cols - 1);
    let size = m + n;
    let finite_total: f64 = d.iter().sum();
    let forbidden = 2.0 * finite_total + 1.0;
    let mut cost = vec![forbidden; size * size];
    for i in 0..m {
        for j in 0..n {
            cost[i * size + j] = d[[i, j]];
        }
        cost[i * size + n + i] = d[[i, n]];
    }
    for j in 0..n {
        cost[(m + j) * size + j] = d[[m, j]];
        for k in 0..m {
            cost[(m + j) * size + n + k] = 0.0;
        }
    }
    let (_, col_of_row) = solve_assignment(&cost, size);
    let mut w = Array2::zeros((rows, cols));
    for i in 0..m {
        let j = col_of_row[i];
        if j < n {
            w[[i, j]] = 1.0;
        } else {
            w[[i, n]] = 1.0;
        }
    }
    for j in 0..n {
        if w.column(j).sum() == 0.0 {
            w[[m, j]] = 1.0;
        }
    }
    let objective = (&w * d).sum();
    (objective, w)
}
