//! The LP-relaxed metric, solved exactly.
//!
//! Only the real-by-real entries `W^t_{ij}` are variables; dummy entries are
//! the slacks of the row and column constraints, which turns the frame term
//! into a constant plus `sum r^t_{ij} W^t_{ij}` with reduced costs
//! `r^t_{ij} = D^t_{ij} - D^t_{i,dummy} - D^t_{dummy,j} <= 0`. The switch term
//! `|W^{t+1}_{ij} - W^t_{ij}|` is linearized with one auxiliary `e >= |.|`.
//!
//! Two exact reductions are applied by default:
//!
//! * a pair whose reduced cost is zero at every frame is fixed to zero; moving
//!   its mass to the dummies never raises the frame term and only removes
//!   switch terms;
//! * the remaining pairs split into connected components of the
//!   truth/estimate graph, and each component is an independent LP.
//!
//! Components go to a sparse revised simplex by default; the dense certified
//! simplex remains available and is used to cross-check it.

use std::time::Instant;

use ndarray::Array2;

use super::simplex::{LinearProgram, LpSolution, Relation, SimplexOptions};
use super::{tgospa_metric, AssignmentPlan, ExactError, ExactResult, SolverStats};
use crate::config::Config;
use crate::cost::build_frame_costs;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LpBackend {
    /// Sparse revised simplex; primal feasibility is certified.
    #[default]
    Sparse,
    /// In-repo dense tableau; primal, dual and gap are certified.
    Dense,
}

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    /// Apply the zero-reduced-cost pruning and the component split.
    pub reduce: bool,
    pub backend: LpBackend,
    /// Limits for the dense backend.
    pub simplex: SimplexOptions,
    /// Certificate residuals above this are reported as failures.
    pub certificate_tolerance: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            reduce: true,
            backend: LpBackend::default(),
            simplex: SimplexOptions::default(),
            certificate_tolerance: 1e-9,
        }
    }
}

pub fn solve_relaxed_lp(s: &Scenario, cfg: &Config) -> Result<ExactResult, ExactError> {
    solve_relaxed_lp_with(s, cfg, &LpOptions::default())
}

pub fn solve_relaxed_lp_with(s: &Scenario, cfg: &Config, opts: &LpOptions) -> Result<ExactResult, ExactError> {
    cfg.validate()?;
    let frames = build_frame_costs(s, cfg.p, cfg.c)?;
    let started = Instant::now();
    let (m, n) = (frames.m, frames.n);
    let horizon = frames.time_steps();

    let reduced = |t: usize, i: usize, j: usize| {
        let d = &frames.frames[t];
        d[[i, j]] - d[[i, n]] - d[[m, j]]
    };
    let constant: f64 = frames
        .frames
        .iter()
        .map(|d| (0..m).map(|i| d[[i, n]]).sum::<f64>() + (0..n).map(|j| d[[m, j]]).sum::<f64>())
        .sum();

    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !opts.reduce || (0..horizon).any(|t| reduced(t, i, j) < 0.0))
        .collect();
    let groups = if opts.reduce {
        components(m, n, &pairs)
    } else {
        vec![pairs]
    };

    let half_switch = cfg.switch_penalty() / 2.0;
    let mut real = vec![Array2::<f64>::zeros((m, n)); horizon];
    let mut stats = SolverStats::default();
    let mut objective = constant;
    for group in groups.iter().filter(|g| !g.is_empty()) {
        let (lp, layout) = build_component_lp(group, horizon, half_switch, &reduced);
        stats.largest_lp = stats
            .largest_lp
            .max((lp.num_constraints(), lp.num_vars()));
        let sol: LpSolution = match opts.backend {
            LpBackend::Sparse => lp.solve_sparse()?,
            LpBackend::Dense => lp.solve_with(&opts.simplex)?,
        };
        let residual = sol.certificate.max();
        if residual > opts.certificate_tolerance {
            return Err(ExactError::Uncertified {
                residual,
                tolerance: opts.certificate_tolerance,
            });
        }
        stats.certificate_residual = stats.certificate_residual.max(residual);
        stats.iterations += sol.pivots;
        stats.subproblems += 1;
        objective += sol.objective;
        for (t, frame) in real.iter_mut().enumerate() {
            for (p, &(i, j)) in group.iter().enumerate() {
                frame[[i, j]] = sol.x[layout.weight(t, p)];
            }
        }
    }

    let plan = assemble_plan(&real, m, n);
    stats.wall_time = started.elapsed();
    Ok(ExactResult {
        objective,
        metric: tgospa_metric(objective, cfg.p),
        plan,
        stats,
    })
}

struct Layout {
    pairs: usize,
    horizon: usize,
}

impl Layout {
    fn weight(&self, t: usize, p: usize) -> usize {
        t * self.pairs + p
    }

    fn change(&self, t: usize, p: usize) -> usize {
        self.horizon * self.pairs + t * self.pairs + p
    }

    fn num_vars(&self) -> usize {
        (2 * self.horizon - 1) * self.pairs
    }
}

fn build_component_lp(
    pairs: &[(usize, usize)],
    horizon: usize,
    half_switch: f64,
    reduced: &dyn Fn(usize, usize, usize) -> f64,
) -> (LinearProgram, Layout) {
    let layout = Layout {
        pairs: pairs.len(),
        horizon,
    };
    let mut lp = LinearProgram::new(layout.num_vars());
    for t in 0..horizon {
        for (p, &(i, j)) in pairs.iter().enumerate() {
            lp.set_objective(layout.weight(t, p), reduced(t, i, j));
            if t + 1 < horizon {
                lp.set_objective(layout.change(t, p), half_switch);
            }
        }
    }
    let mut rows: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let mut cols: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    rows.sort_unstable();
    rows.dedup();
    cols.sort_unstable();
    cols.dedup();
    for t in 0..horizon {
        for &i in &rows {
            let coeffs = pairs
                .iter()
                .enumerate()
                .filter(|(_, pr)| pr.0 == i)
                .map(|(p, _)| (layout.weight(t, p), 1.0))
                .collect();
            lp.add_constraint(coeffs, Relation::Le, 1.0);
        }
        for &j in &cols {
            let coeffs = pairs
                .iter()
                .enumerate()
                .filter(|(_, pr)| pr.1 == j)
                .map(|(p, _)| (layout.weight(t, p), 1.0))
                .collect();
            lp.add_constraint(coeffs, Relation::Le, 1.0);
        }
    }
    for t in 0..horizon.saturating_sub(1) {
        for p in 0..pairs.len() {
            let (now, next, e) = (layout.weight(t, p), layout.weight(t + 1, p), layout.change(t, p));
            lp.add_constraint(vec![(next, 1.0), (now, -1.0), (e, -1.0)], Relation::Le, 0.0);
            lp.add_constraint(vec![(now, 1.0), (next, -1.0), (e, -1.0)], Relation::Le, 0.0);
        }
    }
    (lp, layout)
}

/// Connected components of the bipartite truth/estimate graph induced by `pairs`.
fn components(m: usize, n: usize, pairs: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    let mut parent: Vec<usize> = (0..m + n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(i, j) in pairs {
        let (a, b) = (find(&mut parent, i), find(&mut parent, m + j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m + n];
    for &(i, j) in pairs {
        let root = find(&mut parent, i);
        groups[root].push((i, j));
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// Full `(m + 1) x (n + 1)` frames from the real block: dummies take the slack,
/// and the dummy-dummy corner is fixed to zero.
fn assemble_plan(real: &[Array2<f64>], m: usize, n: usize) -> AssignmentPlan {
    let clean = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
    let frames = real
        .iter()
        .map(|block| {
            let mut w = Array2::zeros((m + 1, n + 1));
            for i in 0..m {
                for j in 0..n {
                    w[[i, j]] = clean(block[[i, j]]);
                }
                w[[i, n]] = clean(1.0 - block.row(i).sum());
            }
            for j in 0..n {
                w[[m, j]] = clean(1.0 - block.column(j).sum());
            }
            w
        })
        .collect();
    AssignmentPlan { frames }
}
