//! Block coordinate ascent on the regularized dual with the sweep schedule:
//! a full backward pass, then a forward sweep that updates the row and column
//! potentials of each time step before extending the forward message.

use std::time::{Duration, Instant};

use ndarray::Array2;
use thiserror::Error;

use super::messages::{
    add_node_weights, backward_pass, expected_switch_cost, forward_step, log_project_single, LogPotentials,
    Messages, PairProjection,
};
use crate::config::{Config, ConfigError};
use crate::cost::{
    build_frame_costs, build_kernels, build_marginals, epsilon_from_eta, CostError, FrameCosts, Kernels, Marginals,
    SwitchCost,
};
use crate::exact::tgospa_metric;
use crate::numeric::{log_sum_exp_iter, mul_ext};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Rows,
    Cols,
}

#[derive(Debug, Error)]
pub enum SinkhornError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("projected marginal vanished at time step {t}, {side:?} index {index}: the problem is infeasible at this regularization")]
    Infeasible { t: usize, side: Side, index: usize },
    #[error("NaN encountered at time step {t}")]
    NotANumber { t: usize },
}

/// Regularized dual value. The iteration-independent constant
/// `epsilon * (m+1)^T (n+1)^T` is kept as its natural log so it never overflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualValue {
    /// Dual objective without the constant term.
    pub reduced: f64,
    /// `T * ln((m+1)(n+1))`.
    pub log_count: f64,
    pub epsilon: f64,
}

impl DualValue {
    /// Full dual value; `inf` when the constant overflows.
    pub fn total(&self) -> f64 {
        self.reduced + self.epsilon * self.log_count.exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `<C, M>` at the final potentials.
    pub primal_objective: f64,
    /// `primal_objective^(1/p)`.
    pub metric: f64,
    pub dual_objective: DualValue,
    pub marginal_residual_inf: f64,
    pub step_size: f64,
    pub converged: bool,
    pub wall_time: Duration,
    pub epsilon: f64,
    /// Reduced dual value after every sweep.
    pub dual_history: Vec<f64>,
}

/// Per-sweep diagnostics recorded when tracing is enabled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub iteration: usize,
    pub primal: f64,
    pub dual: f64,
    pub step_size: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SinkhornOptions {
    /// Evaluate the primal objective after every sweep (one extra pass each).
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornResult {
    pub report: SolveReport,
    /// Single-time marginals `P_t(M)` at the final potentials.
    pub projections: Vec<Array2<f64>>,
    pub potentials: LogPotentials,
    pub trace: Vec<SweepRecord>,
}

/// Replace `potentials` at time `t` so that the chosen marginal of
/// `log_projection` matches its target. The projection is updated in place to
/// reflect the new potentials.
pub fn update_potentials_at(
    t: usize,
    side: Side,
    log_projection: &mut Array2<f64>,
    marginals: &Marginals,
    pot: &mut LogPotentials,
) -> Result<(), SinkhornError> {
    let (rows, cols) = log_projection.dim();
    match side {
        Side::Rows => {
            for i in 0..rows {
                let total = log_sum_exp_iter(log_projection.row(i).iter().copied());
                let delta = checked_delta(marginals.mu_bar[i], total, t, side, i)?;
                pot.rows[t][i] += delta;
                log_projection.row_mut(i).mapv_inplace(|v| v + delta);
            }
        }
        Side::Cols => {
            for j in 0..cols {
                let total = log_sum_exp_iter(log_projection.column(j).iter().copied());
                let delta = checked_delta(marginals.mu_tilde[j], total, t, side, j)?;
                pot.cols[t][j] += delta;
                log_projection.column_mut(j).mapv_inplace(|v| v + delta);
            }
        }
    }
    Ok(())
}

fn checked_delta(target: f64, log_total: f64, t: usize, side: Side, index: usize) -> Result<f64, SinkhornError> {
    if log_total.is_nan() {
        return Err(SinkhornError::NotANumber { t });
    }
    if target == 0.0 {
        // Zero target mass leaves nothing to match; the potential stays put.
        return Ok(0.0);
    }
    if log_total == f64::NEG_INFINITY {
        return Err(SinkhornError::Infeasible { t, side, index });
    }
    Ok(target.ln() - log_total)
}

/// Natural log of the total tensor mass, from a forward pass.
pub fn log_total_mass(kernels: &Kernels, pot: &LogPotentials) -> f64 {
    let horizon = kernels.time_steps();
    let mut fwd = Array2::zeros(kernels.log_frame[0].dim());
    for t in 0..horizon - 1 {
        fwd = forward_step(&fwd, t, kernels, pot);
    }
    add_node_weights(&mut fwd, horizon - 1, kernels, pot);
    log_sum_exp_iter(fwd.iter().copied())
}

pub fn dual_objective(pot: &LogPotentials, kernels: &Kernels, marginals: &Marginals) -> DualValue {
    let mass = log_total_mass(kernels, pot).exp();
    dual_from_mass(mass, pot, kernels, marginals)
}

fn dual_from_mass(mass: f64, pot: &LogPotentials, kernels: &Kernels, marginals: &Marginals) -> DualValue {
    let eps = kernels.epsilon;
    let linear: f64 = pot
        .rows
        .iter()
        .zip(&pot.cols)
        .map(|(a, b)| {
            let rows: f64 = a.iter().zip(&marginals.mu_bar).map(|(x, mu)| mul_ext(*mu, *x)).sum();
            let cols: f64 = b.iter().zip(&marginals.mu_tilde).map(|(x, mu)| mul_ext(*mu, *x)).sum();
            rows + cols
        })
        .sum();
    let (m, n) = (kernels.m(), kernels.n());
    DualValue {
        reduced: -eps * mass + eps * linear,
        log_count: kernels.time_steps() as f64 * (((m + 1) * (n + 1)) as f64).ln(),
        epsilon: eps,
    }
}

/// `sum_t <D^t, P_t> + sum_t <F, P_{t,t+1}>` with `0 * inf = 0`.
pub fn primal_objective(
    projections: &[Array2<f64>],
    pair_projections: &[PairProjection],
    frames: &FrameCosts,
    switch: &SwitchCost,
) -> f64 {
    let frame_term: f64 = projections
        .iter()
        .zip(&frames.frames)
        .map(|(p, d)| p.iter().zip(d.iter()).map(|(a, b)| mul_ext(*a, *b)).sum::<f64>())
        .sum();
    let mut switch_term = 0.0;
    for pair in pair_projections {
        for (i, block) in pair.blocks.iter().enumerate() {
            for ((j, l), &v) in block.indexed_iter() {
                switch_term += mul_ext(v, switch.within_row(i, j, l));
            }
        }
    }
    frame_term + switch_term
}

/// Projections, primal value and marginal residual at the given potentials.
struct Evaluation {
    projections: Vec<Array2<f64>>,
    primal: f64,
    log_mass: f64,
    residual: f64,
}

fn evaluate(kernels: &Kernels, frames: &FrameCosts, marginals: &Marginals, pot: &LogPotentials) -> Result<Evaluation, SinkhornError> {
    let messages = Messages::compute(kernels, pot);
    let horizon = kernels.time_steps();
    let mut projections = Vec::with_capacity(horizon);
    let mut primal = 0.0;
    let mut residual: f64 = 0.0;
    for t in 0..horizon {
        let p = log_project_single(t, &messages.forward[t], &messages.backward[t], kernels, pot).mapv(f64::exp);
        if p.iter().any(|v| v.is_nan()) {
            return Err(SinkhornError::NotANumber { t });
        }
        primal += p.iter().zip(frames.frames[t].iter()).map(|(a, b)| a * b).sum::<f64>();
        for (i, row) in p.rows().into_iter().enumerate() {
            residual = residual.max((row.sum() - marginals.mu_bar[i]).abs());
        }
        for (j, col) in p.columns().into_iter().enumerate() {
            residual = residual.max((col.sum() - marginals.mu_tilde[j]).abs());
        }
        if t + 1 < horizon {
            let mut left = messages.forward[t].clone();
            add_node_weights(&mut left, t, kernels, pot);
            let mut right = messages.backward[t + 1].clone();
            add_node_weights(&mut right, t + 1, kernels, pot);
            primal += expected_switch_cost(kernels, &left, &right);
        }
        projections.push(p);
    }
    let mut last = messages.forward[horizon - 1].clone();
    add_node_weights(&mut last, horizon - 1, kernels, pot);
    let log_mass = log_sum_exp_iter(last.iter().copied());
    Ok(Evaluation { projections, primal, log_mass, residual })
}

/// One sweep; returns the log tensor mass after the final update.
fn sweep(kernels: &Kernels, marginals: &Marginals, pot: &mut LogPotentials) -> Result<f64, SinkhornError> {
    let horizon = kernels.time_steps();
    let backward = backward_pass(kernels, pot);
    let mut forward = Array2::zeros(kernels.log_frame[0].dim());
    let mut log_mass = f64::NAN;
    for (t, backward_t) in backward.iter().enumerate() {
        let mut proj = log_project_single(t, &forward, backward_t, kernels, pot);
        update_potentials_at(t, Side::Rows, &mut proj, marginals, pot)?;
        update_potentials_at(t, Side::Cols, &mut proj, marginals, pot)?;
        if t + 1 < horizon {
            forward = forward_step(&forward, t, kernels, pot);
        } else {
            log_mass = log_sum_exp_iter(proj.iter().copied());
        }
    }
    Ok(log_mass)
}

/// `||u - u_prev|| / ||u_prev||` over all potentials, shifted by the largest
/// previous log-potential so nothing overflows.
fn relative_step(prev: &[f64], cur: &[f64]) -> f64 {
    let shift = prev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut diff, mut base) = (0.0, 0.0);
    for (p, c) in prev.iter().zip(cur) {
        let (ep, ec) = ((p - shift).exp(), (c - shift).exp());
        diff += (ec - ep) * (ec - ep);
        base += ep * ep;
    }
    (diff / base).sqrt()
}

pub fn run_sinkhorn(s: &Scenario, cfg: &Config) -> Result<SinkhornResult, SinkhornError> {
    run_sinkhorn_with(s, cfg, &SinkhornOptions::default())
}

pub fn run_sinkhorn_with(s: &Scenario, cfg: &Config, opts: &SinkhornOptions) -> Result<SinkhornResult, SinkhornError> {
    cfg.validate()?;
    let started = Instant::now();
    let frames = build_frame_costs(s, cfg.p, cfg.c)?;
    let (m, n, horizon) = (s.m(), s.n(), s.time_steps);
    let switch = SwitchCost::new(m, n, cfg.gamma, cfg.p);
    let epsilon = epsilon_from_eta(cfg.eta, horizon, &frames, &switch);
    let marginals = build_marginals(m, n);
    if m == 0 || n == 0 {
        return Ok(degenerate(&frames, &marginals, epsilon, cfg.p, started));
    }
    let kernels = build_kernels(&frames, &switch, epsilon);
    let mut pot = LogPotentials::ones(horizon, m, n);
    let mut dual_history = Vec::new();
    let mut trace = Vec::new();
    let mut step_size = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let prev = pot.flatten();
        let log_mass = sweep(&kernels, &marginals, &mut pot)?;
        iterations += 1;
        step_size = relative_step(&prev, &pot.flatten());
        let dual = dual_from_mass(log_mass.exp(), &pot, &kernels, &marginals).reduced;
        dual_history.push(dual);
        if opts.trace {
            let eval = evaluate(&kernels, &frames, &marginals, &pot)?;
            trace.push(SweepRecord { iteration: iterations, primal: eval.primal, dual, step_size });
        }
        if step_size < cfg.tol {
            break;
        }
    }
    let eval = evaluate(&kernels, &frames, &marginals, &pot)?;
    let report = SolveReport {
        iterations,
        primal_objective: eval.primal,
        metric: tgospa_metric(eval.primal, cfg.p),
        dual_objective: dual_from_mass(eval.log_mass.exp(), &pot, &kernels, &marginals),
        marginal_residual_inf: eval.residual,
        step_size,
        converged: step_size < cfg.tol,
        wall_time: started.elapsed(),
        epsilon,
        dual_history,
    };
    Ok(SinkhornResult { report, projections: eval.projections, potentials: pot, trace })
}

/// With no truths or no estimates every alive trajectory sits on the dummy.
fn degenerate(frames: &FrameCosts, marginals: &Marginals, epsilon: f64, p: f64, started: Instant) -> SinkhornResult {
    let (m, n) = (frames.m, frames.n);
    let projections: Vec<Array2<f64>> = frames
        .frames
        .iter()
        .map(|_| {
            let mut w = Array2::zeros((m + 1, n + 1));
            for i in 0..m {
                w[[i, n]] = marginals.mu_bar[i];
            }
            for j in 0..n {
                w[[m, j]] = marginals.mu_tilde[j];
            }
            w
        })
        .collect();
    let primal: f64 = projections.iter().zip(&frames.frames).map(|(w, d)| (w * d).sum()).sum();
    let horizon = frames.time_steps();
    let report = SolveReport {
        iterations: 0,
        primal_objective: primal,
        metric: tgospa_metric(primal, p),
        dual_objective: DualValue {
            reduced: primal,
            log_count: horizon as f64 * (((m + 1) * (n + 1)) as f64).ln(),
            epsilon,
        },
        marginal_residual_inf: 0.0,
        step_size: 0.0,
        converged: true,
        wall_time: started.elapsed(),
        epsilon,
        dual_history: Vec::new(),
    };
    SinkhornResult {
        report,
        projections,
        potentials: LogPotentials::ones(horizon, m, n),
        trace: Vec::new(),
    }
}
