//! Integer metric by exhaustive search over per-frame partial matchings.
//!
//! The objective couples only consecutive frames, so the search over all
//! `S^T` plans (`S` partial matchings per frame) runs as a dynamic program
//! over frames. Every plan is still covered; the budget is checked against
//! the full `S^T` count.

use std::time::Instant;

use ndarray::Array2;

use super::{tgospa_metric, AssignmentPlan, ExactError, ExactResult, SolverStats};
use crate::config::Config;
use crate::cost::{build_frame_costs, FrameCosts};
use crate::scenario::Scenario;

pub const DEFAULT_ENUMERATION_BUDGET: f64 = 1e7;

/// A partial matching: `assign[i] = Some(j)` pairs truth `i` with estimate `j`.
type Matching = Vec<Option<usize>>;

/// Number of partial matchings between `m` truths and `n` estimates:
/// `sum_k C(m, k) C(n, k) k!`.
pub fn count_frame_matchings(m: usize, n: usize) -> f64 {
    let mut total = 0.0;
    let mut term = 1.0; // C(m,k) C(n,k) k!
    for k in 0..=m.min(n) {
        total += term;
        term *= ((m - k) * (n - k)) as f64 / (k + 1) as f64;
    }
    total
}

fn enumerate_matchings(m: usize, n: usize) -> Vec<Matching> {
    fn rec(i: usize, m: usize, n: usize, used: &mut Vec<bool>, cur: &mut Matching, out: &mut Vec<Matching>) {
        if i == m {
            out.push(cur.clone());
            return;
        }
        cur[i] = None;
        rec(i + 1, m, n, used, cur, out);
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                cur[i] = Some(j);
                rec(i + 1, m, n, used, cur, out);
                used[j] = false;
            }
        }
        cur[i] = None;
    }
    let mut out = Vec::new();
    rec(0, m, n, &mut vec![false; n], &mut vec![None; m], &mut out);
    // Ascending in the row-major 0/1 pattern of the real block.
    let key = |a: &Matching| -> Vec<u8> {
        let mut bits = vec![0u8; m * n];
        for (i, j) in a.iter().enumerate() {
            if let Some(j) = j {
                bits[i * n + j] = 1;
            }
        }
        bits
    };
    out.sort_by_key(key);
    out
}

fn frame_cost(a: &Matching, d: &Array2<f64>, m: usize, n: usize) -> f64 {
    let mut assigned = vec![false; n];
    let mut total = 0.0;
    for (i, j) in a.iter().enumerate() {
        match j {
            Some(j) => {
                assigned[*j] = true;
                total += d[[i, *j]];
            }
            None => total += d[[i, n]],
        }
    }
    for (j, used) in assigned.iter().enumerate() {
        if !used {
            total += d[[m, j]];
        }
    }
    total
}

/// Number of real-by-real entries that differ between two matchings.
fn changed_entries(a: &Matching, b: &Matching) -> usize {
    a.iter()
        .zip(b)
        .filter(|(x, y)| x != y)
        .map(|(x, y)| x.is_some() as usize + y.is_some() as usize)
        .sum()
}

fn to_matrix(a: &Matching, m: usize, n: usize) -> Array2<f64> {
    let mut w = Array2::zeros((m + 1, n + 1));
    let mut assigned = vec![false; n];
    for (i, j) in a.iter().enumerate() {
        match j {
            Some(j) => {
                w[[i, *j]] = 1.0;
                assigned[*j] = true;
            }
            None => w[[i, n]] = 1.0,
        }
    }
    for (j, used) in assigned.iter().enumerate() {
        if !used {
            w[[m, j]] = 1.0;
        }
    }
    w
}

pub fn brute_force_tgospa(s: &Scenario, cfg: &Config) -> Result<ExactResult, ExactError> {
    brute_force_tgospa_with(s, cfg, DEFAULT_ENUMERATION_BUDGET)
}

pub fn brute_force_tgospa_with(s: &Scenario, cfg: &Config, budget: f64) -> Result<ExactResult, ExactError> {
    cfg.validate()?;
    let frames = build_frame_costs(s, cfg.p, cfg.c)?;
    let started = Instant::now();
    let (m, n, horizon) = (s.m(), s.n(), s.time_steps);
    let per_frame = count_frame_matchings(m, n);
    let candidates = per_frame.powi(horizon as i32);
    if candidates > budget {
        return Err(ExactError::BudgetExceeded { candidates, budget });
    }
    let matchings = enumerate_matchings(m, n);
    let (objective, path) = optimal_path(&matchings, &frames, cfg.switch_penalty() / 2.0);
    let plan = AssignmentPlan {
        frames: path.iter().map(|&k| to_matrix(&matchings[k], m, n)).collect(),
    };
    Ok(ExactResult {
        objective,
        metric: tgospa_metric(objective, cfg.p),
        plan,
        stats: SolverStats {
            iterations: matchings.len() * matchings.len() * horizon.saturating_sub(1) + matchings.len(),
            wall_time: started.elapsed(),
            subproblems: 1,
            ..SolverStats::default()
        },
    })
}

/// Minimum over matching sequences; among optimal sequences the one that
/// is smallest frame by frame in matching order.
fn optimal_path(matchings: &[Matching], frames: &FrameCosts, half_switch: f64) -> (f64, Vec<usize>) {
    let (m, n) = (frames.m, frames.n);
    let s = matchings.len();
    let horizon = frames.time_steps();
    let local: Vec<Vec<f64>> = frames
        .frames
        .iter()
        .map(|d| matchings.iter().map(|a| frame_cost(a, d, m, n)).collect())
        .collect();
    let switch: Vec<f64> = matchings
        .iter()
        .flat_map(|a| matchings.iter().map(move |b| half_switch * changed_entries(a, b) as f64))
        .collect();
    // to_go[t][k]: best cost of frames t..T given matching k at frame t.
    let mut to_go = vec![vec![0.0; s]; horizon];
    to_go[horizon - 1].clone_from(&local[horizon - 1]);
    for t in (0..horizon - 1).rev() {
        for a in 0..s {
            let best = (0..s)
                .map(|b| switch[a * s + b] + to_go[t + 1][b])
                .fold(f64::INFINITY, f64::min);
            to_go[t][a] = local[t][a] + best;
        }
    }
    const TIE: f64 = 1e-12;
    let first_min = |vals: &mut dyn Iterator<Item = f64>| -> usize {
        let vals: Vec<f64> = vals.collect();
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        vals.iter().position(|&v| v <= min + TIE).expect("non-empty")
    };
    let mut path = Vec::with_capacity(horizon);
    let mut k = first_min(&mut to_go[0].iter().copied());
    let objective = to_go[0][k];
    path.push(k);
    for t in 1..horizon {
        k = first_min(&mut (0..s).map(|b| switch[k * s + b] + to_go[t][b]));
        path.push(k);
    }
    (objective, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::evaluate_plan_objective;
    use crate::scenario::Trajectory;

    #[test]
    fn matching_counts() {
        assert_eq!(count_frame_matchings(0, 5), 1.0);
        assert_eq!(count_frame_matchings(1, 1), 2.0);
        assert_eq!(count_frame_matchings(2, 2), 7.0);
        assert_eq!(count_frame_matchings(3, 3), 34.0);
        for (m, n) in [(2, 3), (3, 2), (3, 4)] {
            assert_eq!(enumerate_matchings(m, n).len() as f64, count_frame_matchings(m, n));
        }
    }

    #[test]
    fn identical_sets_cost_nothing() {
        let mut s = Scenario::new(3, 2);
        let a = Trajectory::new("a").with_point(1, vec![0.0, 0.0]).with_point(2, vec![1.0, 0.0]);
        let b = Trajectory::new("b").with_point(2, vec![5.0, 5.0]).with_point(3, vec![5.0, 6.0]);
        s.ground_truth = vec![a.clone(), b.clone()];
        s.estimates = vec![a, b];
        let r = brute_force_tgospa(&s, &Config::default()).unwrap();
        assert_eq!(r.objective, 0.0);
        assert!(r.plan.is_integral());
        assert_eq!(r.plan.frames[1][[0, 0]], 1.0);
        assert_eq!(r.plan.frames[1][[1, 1]], 1.0);
    }

    #[test]
    fn far_pair_single_frame() {
        let mut s = Scenario::new(1, 1);
        s.ground_truth.push(Trajectory::new("g").with_point(1, vec![0.0]));
        s.estimates.push(Trajectory::new("e").with_point(1, vec![3.0]));
        let r = brute_force_tgospa(&s, &Config::default()).unwrap();
        assert!((r.objective - 0.25).abs() < 1e-15);
        // Tie between matching and both-unassigned: the all-zero real block wins.
        assert_eq!(r.plan.frames[0][[0, 0]], 0.0);
    }

    #[test]
    fn budget_is_enforced() {
        let mut s = Scenario::new(10, 1);
        for k in 0..3 {
            s.ground_truth.push(Trajectory::new(format!("g{k}")).with_point(1, vec![k as f64]));
            s.estimates.push(Trajectory::new(format!("e{k}")).with_point(1, vec![k as f64]));
        }
        assert!(matches!(
            brute_force_tgospa(&s, &Config::default()),
            Err(ExactError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn reported_objective_matches_plan() {
        let mut s = Scenario::new(3, 1);
        s.ground_truth.push(Trajectory::new("g0").with_point(1, vec![0.0]).with_point(2, vec![0.1]).with_point(3, vec![0.2]));
        s.ground_truth.push(Trajectory::new("g1").with_point(1, vec![0.05]).with_point(2, vec![0.12]).with_point(3, vec![0.5]));
        s.estimates.push(Trajectory::new("e0").with_point(1, vec![0.04]).with_point(2, vec![0.11]).with_point(3, vec![0.21]));
        s.estimates.push(Trajectory::new("e1").with_point(2, vec![0.0]).with_point(3, vec![0.45]));
        let cfg = Config::default();
        let r = brute_force_tgospa(&s, &cfg).unwrap();
        let frames = build_frame_costs(&s, cfg.p, cfg.c).unwrap();
        let v = evaluate_plan_objective(&r.plan, &frames, cfg.gamma, cfg.p).unwrap();
        assert!((v - r.objective).abs() < 1e-12);
    }
}
