//! Evaluation of the TGOSPA metric between sets of trajectories.
//!
//! Three routes to the same quantity are provided:
//!
//! * [`exact::brute_force_tgospa`]: the integer metric by exhaustive search over
//!   per-frame assignments (tiny instances only),
//! * [`exact::solve_relaxed_lp`]: the LP-relaxed metric, solved exactly,
//! * [`sinkhorn::run_sinkhorn`]: a fast approximation of the LP-relaxed metric
//!   through entropy-regularized multimarginal optimal transport, solved by
//!   block coordinate ascent with forward/backward message passing.
//!
//! ```
//! use tgospa::{Config, Scenario, Trajectory};
//!
//! let mut s = Scenario::new(2, 2);
//! s.ground_truth.push(Trajectory::new("a").with_point(1, vec![0.0, 0.0]).with_point(2, vec![1.0, 0.0]));
//! s.estimates.push(Trajectory::new("x").with_point(1, vec![0.1, 0.0]).with_point(2, vec![1.1, 0.0]));
//!
//! let cfg = Config::default();
//! let exact = tgospa::exact::solve_relaxed_lp(&s, &cfg).unwrap();
//! assert!((exact.objective - 0.2).abs() < 1e-9);
//!
//! let approx = tgospa::sinkhorn::run_sinkhorn(&s, &cfg).unwrap();
//! assert!((approx.report.primal_objective - 0.2).abs() < 1e-3);
//! ```

pub mod bench;
pub mod config;
pub mod cost;
pub mod exact;
pub mod generator;
pub mod numeric;
pub mod scenario;
pub mod sinkhorn;

pub use config::Config;
pub use scenario::{Scenario, State, Trajectory};

// The guide's code listings run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/exact.md")]
    mod exact {}
    #[doc = include_str!("../../../book/src/sinkhorn.md")]
    mod sinkhorn {}
    #[doc = include_str!("../../../book/src/generator.md")]
    mod generator {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
    #[doc = include_str!("../../../book/src/design.md")]
    mod design {}
}
