//! Independent reference implementations used as test oracles.
//!
//! Everything here works on the fully materialized transport tensor, indexed
//! by one `(truth row, estimate column)` position per time step, and is built
//! from the metric's definition rather than from the library's cost code.
#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tgospa::exact::simplex::{LinearProgram, Relation};
use tgospa::{Scenario, State, Trajectory};

/// Per-frame costs with the dummy row `m` and dummy column `n`.
pub fn frame_costs(s: &Scenario, p: f64, c: f64) -> Vec<Array2<f64>> {
    let (m, n) = (s.m(), s.n());
    let half = c.powf(p) / 2.0;
    (1..=s.time_steps)
        .map(|t| {
            Array2::from_shape_fn((m + 1, n + 1), |(i, j)| {
                let x = if i < m { s.ground_truth[i].state_at(t) } else { None };
                let y = if j < n { s.estimates[j].state_at(t) } else { None };
                match (x, y) {
                    (Some(x), Some(y)) => {
                        let d: f64 = x.coords().iter().zip(y.coords()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                        d.min(c).powf(p)
                    }
                    (None, None) => 0.0,
                    _ => half,
                }
            })
        })
        .collect()
}

/// Cost of moving from `(i, j)` to `(k, l)` between consecutive frames.
pub fn switch(m: usize, n: usize, full: f64, (i, j): (usize, usize), (k, l): (usize, usize)) -> f64 {
    if i != k {
        f64::INFINITY
    } else if i == m || j == l {
        0.0
    } else if j == n || l == n {
        full / 2.0
    } else {
        full
    }
}

/// Dense transport tensor over `((m + 1)(n + 1))^T` position paths.
pub struct Tensor {
    pub m: usize,
    pub n: usize,
    pub horizon: usize,
    /// Row-major over paths; the position at time `t` is `path[t] = i * (n + 1) + j`.
    pub values: Vec<f64>,
}

impl Tensor {
    pub fn positions(&self) -> usize {
        (self.m + 1) * (self.n + 1)
    }

    /// The `(i, j)` positions of the path with flat index `index`.
    pub fn path(&self, mut index: usize) -> Vec<(usize, usize)> {
        let size = self.positions();
        let mut out = vec![(0, 0); self.horizon];
        for t in (0..self.horizon).rev() {
            let pos = index % size;
            index /= size;
            out[t] = (pos / (self.n + 1), pos % (self.n + 1));
        }
        out
    }

    pub fn marginal(&self, t: usize) -> Array2<f64> {
        let mut out = Array2::zeros((self.m + 1, self.n + 1));
        for (idx, &v) in self.values.iter().enumerate() {
            out[self.path(idx)[t]] += v;
        }
        out
    }

    /// Pairwise marginal keyed by `[i, j, k, l]`.
    pub fn pair_marginal(&self, t: usize) -> ndarray::Array4<f64> {
        let (a, b) = (self.m + 1, self.n + 1);
        let mut out = ndarray::Array4::zeros((a, b, a, b));
        for (idx, &v) in self.values.iter().enumerate() {
            let path = self.path(idx);
            let ((i, j), (k, l)) = (path[t], path[t + 1]);
            out[[i, j, k, l]] += v;
        }
        out
    }
}

/// Full path cost: frame costs plus switch costs, `+inf` on row changes.
pub fn path_cost(frames: &[Array2<f64>], full_switch: f64, path: &[(usize, usize)]) -> f64 {
    let (m, n) = (frames[0].nrows() - 1, frames[0].ncols() - 1);
    let mut total: f64 = path.iter().zip(frames).map(|(&pos, d)| d[pos]).sum();
    for w in path.windows(2) {
        total += switch(m, n, full_switch, w[0], w[1]);
    }
    total
}

/// Materialize `exp(-C / eps) * prod_t exp(row_t[i_t]) exp(col_t[j_t])`.
pub fn gibbs_tensor(
    frames: &[Array2<f64>],
    full_switch: f64,
    eps: f64,
    rows: &[Vec<f64>],
    cols: &[Vec<f64>],
) -> Tensor {
    let (m, n) = (frames[0].nrows() - 1, frames[0].ncols() - 1);
    let horizon = frames.len();
    let mut tensor = Tensor { m, n, horizon, values: Vec::new() };
    let total = tensor.positions().pow(horizon as u32);
    tensor.values = (0..total)
        .map(|idx| {
            let path = tensor.path(idx);
            let cost = path_cost(frames, full_switch, &path);
            if cost.is_infinite() {
                return 0.0;
            }
            let potential: f64 = path.iter().enumerate().map(|(t, &(i, j))| rows[t][i] + cols[t][j]).sum();
            (potential - cost / eps).exp()
        })
        .collect();
    tensor
}

/// `<C, M> + eps * sum (M log M - M + 1)`, with `0 log 0 = 0` and `0 * inf = 0`.
pub fn regularized_primal(tensor: &Tensor, frames: &[Array2<f64>], full_switch: f64, eps: f64) -> f64 {
    let mut total = 0.0;
    for (idx, &v) in tensor.values.iter().enumerate() {
        if v > 0.0 {
            total += v * path_cost(frames, full_switch, &tensor.path(idx));
            total += eps * (v * v.ln() - v);
        }
        total += eps;
    }
    total
}

/// Optimal value of the transport LP over the materialized tensor, with the
/// unit-plus-dummy marginals as equality constraints at every time step.
/// Paths with infinite cost are left out rather than given a huge price.
pub fn mot_lp_value(frames: &[Array2<f64>], full_switch: f64) -> f64 {
    let (m, n) = (frames[0].nrows() - 1, frames[0].ncols() - 1);
    let horizon = frames.len();
    let probe = Tensor { m, n, horizon, values: Vec::new() };
    let total = probe.positions().pow(horizon as u32);
    let paths: Vec<(Vec<(usize, usize)>, f64)> = (0..total)
        .map(|idx| probe.path(idx))
        .map(|p| {
            let c = path_cost(frames, full_switch, &p);
            (p, c)
        })
        .filter(|(_, c)| c.is_finite())
        .collect();
    let mut lp = LinearProgram::new(paths.len());
    for (v, (_, c)) in paths.iter().enumerate() {
        lp.set_objective(v, *c);
    }
    for t in 0..horizon {
        for i in 0..=m {
            let coeffs = paths.iter().enumerate().filter(|(_, (p, _))| p[t].0 == i).map(|(v, _)| (v, 1.0)).collect();
            lp.add_constraint(coeffs, Relation::Eq, if i < m { 1.0 } else { n as f64 });
        }
        for j in 0..=n {
            let coeffs = paths.iter().enumerate().filter(|(_, (p, _))| p[t].1 == j).map(|(v, _)| (v, 1.0)).collect();
            lp.add_constraint(coeffs, Relation::Eq, if j < n { 1.0 } else { m as f64 });
        }
    }
    lp.solve().expect("materialized transport LP is feasible and bounded").objective
}

fn random_track(rng: &mut ChaCha8Rng, id: String, horizon: usize, near: Option<&Trajectory>) -> Trajectory {
    let mut track = Trajectory::new(id);
    let mut pos = [rng.random_range(0.0..0.4), rng.random_range(0.0..0.4)];
    for t in 1..=horizon {
        pos[0] += rng.random_range(-0.08..0.08);
        pos[1] += rng.random_range(-0.08..0.08);
        let here = match near.and_then(|tr| tr.state_at(t)) {
            Some(s) => [s.coords()[0] + rng.random_range(-0.15..0.15), s.coords()[1] + rng.random_range(-0.15..0.15)],
            None => pos,
        };
        if rng.random_bool(0.75) {
            track.insert(t, Some(State::new(here.to_vec())));
        }
    }
    track
}

/// Random planar trajectory set of exactly `count` tracks; each state is
/// present with probability 3/4, so gaps and empty tracks occur.
pub fn random_set(rng: &mut ChaCha8Rng, prefix: &str, count: usize, horizon: usize) -> Vec<Trajectory> {
    (0..count).map(|k| random_track(rng, format!("{prefix}-{k}"), horizon, None)).collect()
}

/// Small scenario in which most estimates shadow some truth track, at a
/// spatial scale comparable to the default cut-off.
pub fn random_tiny_scenario(rng: &mut ChaCha8Rng, max_m: usize, max_n: usize, max_t: usize) -> Scenario {
    let horizon = rng.random_range(1..=max_t);
    let m = rng.random_range(0..=max_m);
    let n = rng.random_range(0..=max_n);
    let truth = random_set(rng, "truth", m, horizon);
    let estimates = (0..n)
        .map(|k| {
            let near = if m > 0 && rng.random_bool(0.6) { Some(&truth[rng.random_range(0..m)]) } else { None };
            random_track(rng, format!("est-{k}"), horizon, near)
        })
        .collect::<Vec<_>>();
    Scenario::from_sets(horizon, 2, &truth, &estimates)
}
