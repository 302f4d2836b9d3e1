//! Entropy-regularized multimarginal transport solver for the relaxed metric.
//!
//! The transport tensor is never materialized: marginals come from forward
//! and backward messages over time, and the potentials are updated one time
//! step at a time.

mod messages;
mod solver;

pub use messages::{
    backward_pass, forward_step, log_project_single, project_pair, project_single, LogPotentials, Messages, PairProjection,
};
pub use solver::{
    dual_objective, log_total_mass, primal_objective, run_sinkhorn, run_sinkhorn_with, update_potentials_at, DualValue,
    Side, SinkhornError, SinkhornOptions, SinkhornResult, SolveReport, SweepRecord,
};
