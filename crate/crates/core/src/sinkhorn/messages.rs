//! Forward/backward messages and marginal projections of the transport
//! tensor, all in the log domain.
//!
//! Mass never moves between rows over time (`F = inf` there), so every
//! message update is a per-row contraction over columns. Within a truth row
//! the switch kernel is `1` on the diagonal, `exp(-gamma^p / eps)` between two
//! real columns and `exp(-gamma^p / (2 eps))` to or from the dummy column; in
//! the dummy row it is identically one. Each contraction therefore costs
//! `O(n)` per row through a leave-one-out sum instead of `O(n^2)`.

use ndarray::Array2;

use crate::cost::Kernels;

/// Transformed dual variables: `log u_bar^t` (length `m + 1`) and
/// `log u_tilde^t` (length `n + 1`) for every time step.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPotentials {
    pub rows: Vec<Vec<f64>>,
    pub cols: Vec<Vec<f64>>,
}

impl LogPotentials {
    /// All potentials equal to one (`log = 0`).
    pub fn ones(time_steps: usize, m: usize, n: usize) -> Self {
        LogPotentials {
            rows: vec![vec![0.0; m + 1]; time_steps],
            cols: vec![vec![0.0; n + 1]; time_steps],
        }
    }

    pub fn time_steps(&self) -> usize {
        self.rows.len()
    }

    /// Concatenation of every row and column potential, time step by time step.
    pub fn flatten(&self) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.cols)
            .flat_map(|(r, c)| r.iter().chain(c.iter()).copied())
            .collect()
    }
}

/// `log Phi_forward^t` and `log Phi_backward^t`, one `(m + 1) x (n + 1)`
/// matrix per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Messages {
    pub forward: Vec<Array2<f64>>,
    pub backward: Vec<Array2<f64>>,
}

impl Messages {
    /// Both passes at the given potentials.
    pub fn compute(kernels: &Kernels, pot: &LogPotentials) -> Self {
        let backward = backward_pass(kernels, pot);
        let mut forward = Vec::with_capacity(kernels.time_steps());
        forward.push(Array2::zeros(kernels.log_frame[0].dim()));
        for t in 0..kernels.time_steps() - 1 {
            let next = forward_step(&forward[t], t, kernels, pot);
            forward.push(next);
        }
        Messages { forward, backward }
    }
}

/// Scratch buffers for [`contract_row`].
pub(crate) struct RowScratch {
    exps: Vec<f64>,
}

impl RowScratch {
    pub(crate) fn new(n: usize) -> Self {
        RowScratch {
            exps: vec![0.0; n + 1],
        }
    }
}

/// `out[j] = log sum_l k_hat(i; j, l) exp(v[l])` for one row `i`.
///
/// `v` and `out` have length `n + 1` with the dummy column last.
pub(crate) fn contract_row(kernels: &Kernels, dummy_row: bool, v: &[f64], out: &mut [f64], scratch: &mut RowScratch) {
    let n = v.len() - 1;
    let shift = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        out.iter_mut().for_each(|o| *o = f64::NEG_INFINITY);
        return;
    }
    let e = &mut scratch.exps;
    for (dst, &x) in e.iter_mut().zip(v) {
        *dst = (x - shift).exp();
    }
    let real_sum: f64 = e[..n].iter().sum();
    if dummy_row {
        let total = (real_sum + e[n]).ln() + shift;
        out.iter_mut().for_each(|o| *o = total);
        return;
    }
    if kernels.log_full_switch > LINEAR_FLOOR {
        let full = kernels.log_full_switch.exp();
        let half = kernels.log_half_switch.exp();
        let from_dummy = half * e[n];
        for j in 0..n {
            // Others may cancel against a dominant e[j]; that error is scaled by
            // `full` relative to e[j] and is harmless.
            let others = (real_sum - e[j]).max(0.0);
            out[j] = (e[j] + full * others + from_dummy).ln() + shift;
        }
        out[n] = (e[n] + half * real_sum).ln() + shift;
    } else {
        // Switch kernels underflow; combine the three terms in log space.
        let from_dummy = kernels.log_half_switch + v[n];
        for j in 0..n {
            let others = (real_sum - e[j]).max(0.0).ln() + shift + kernels.log_full_switch;
            out[j] = log_add3(v[j], others, from_dummy);
        }
        out[n] = log_add3(v[n], real_sum.ln() + shift + kernels.log_half_switch, f64::NEG_INFINITY);
    }
}

/// Below this log-kernel value the linear-domain row update would underflow.
const LINEAR_FLOOR: f64 = -600.0;

fn log_add3(a: f64, b: f64, c: f64) -> f64 {
    let top = a.max(b).max(c);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + ((a - top).exp() + (b - top).exp() + (c - top).exp()).ln()
}

/// Node log-weights `log k^t + log u_bar^t_i + log u_tilde^t_j` added into `acc`.
pub(crate) fn add_node_weights(acc: &mut Array2<f64>, t: usize, kernels: &Kernels, pot: &LogPotentials) {
    let cols = acc.ncols();
    let lk = kernels.log_frame[t].as_slice().expect("standard layout");
    let acc = acc.as_slice_mut().expect("standard layout");
    let b = &pot.cols[t];
    for ((row, lk_row), &a) in acc.chunks_exact_mut(cols).zip(lk.chunks_exact(cols)).zip(&pot.rows[t]) {
        for ((v, &k), &bj) in row.iter_mut().zip(lk_row).zip(b) {
            *v += k + a + bj;
        }
    }
}

fn contract(kernels: &Kernels, v: &Array2<f64>) -> Array2<f64> {
    let (rows, cols) = v.dim();
    let mut out = Array2::zeros((rows, cols));
    let mut scratch = RowScratch::new(cols - 1);
    let src = v.as_slice().expect("standard layout");
    let dst = out.as_slice_mut().expect("standard layout");
    for (i, (s, d)) in src.chunks_exact(cols).zip(dst.chunks_exact_mut(cols)).enumerate() {
        contract_row(kernels, i == rows - 1, s, d, &mut scratch);
    }
    out
}

/// `log Phi_backward^t` for `t = 0..T` (0-based), with the last one identically zero.
pub fn backward_pass(kernels: &Kernels, pot: &LogPotentials) -> Vec<Array2<f64>> {
    let horizon = kernels.time_steps();
    let dim = kernels.log_frame[0].dim();
    let mut out = vec![Array2::zeros(dim); horizon];
    for t in (0..horizon - 1).rev() {
        let mut v = out[t + 1].clone();
        add_node_weights(&mut v, t + 1, kernels, pot);
        out[t] = contract(kernels, &v);
    }
    out
}

/// `log Phi_forward^{t+1}` from `log Phi_forward^t` (0-based `t`).
pub fn forward_step(forward_t: &Array2<f64>, t: usize, kernels: &Kernels, pot: &LogPotentials) -> Array2<f64> {
    let mut v = forward_t.clone();
    add_node_weights(&mut v, t, kernels, pot);
    contract(kernels, &v)
}

/// Log of the single-time marginal `P_t(M)`.
pub fn log_project_single(
    t: usize,
    forward_t: &Array2<f64>,
    backward_t: &Array2<f64>,
    kernels: &Kernels,
    pot: &LogPotentials,
) -> Array2<f64> {
    let mut v = forward_t + backward_t;
    add_node_weights(&mut v, t, kernels, pot);
    v
}

/// Single-time marginal `P_t(M)`.
pub fn project_single(
    t: usize,
    messages: &Messages,
    kernels: &Kernels,
    pot: &LogPotentials,
) -> Array2<f64> {
    log_project_single(t, &messages.forward[t], &messages.backward[t], kernels, pot).mapv(f64::exp)
}

/// Pairwise marginal `P_{t,t+1}(M)`. Entries between different rows are
/// structurally zero; `blocks[i][[j, l]]` holds the entry for `(i, j) -> (i, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairProjection {
    pub blocks: Vec<Array2<f64>>,
}

impl PairProjection {
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        if i != k {
            0.0
        } else {
            self.blocks[i][[j, l]]
        }
    }

    /// Sum over the destination position, a matrix over `(i, j)`.
    pub fn outgoing(&self) -> Array2<f64> {
        let rows = self.blocks.len();
        let cols = self.blocks[0].nrows();
        Array2::from_shape_fn((rows, cols), |(i, j)| self.blocks[i].row(j).sum())
    }

    /// Sum over the source position, a matrix over `(k, l)`.
    pub fn incoming(&self) -> Array2<f64> {
        let rows = self.blocks.len();
        let cols = self.blocks[0].nrows();
        Array2::from_shape_fn((rows, cols), |(k, l)| self.blocks[k].column(l).sum())
    }
}

pub fn project_pair(t: usize, messages: &Messages, kernels: &Kernels, pot: &LogPotentials) -> PairProjection {
    let mut left = messages.forward[t].clone();
    add_node_weights(&mut left, t, kernels, pot);
    let mut right = messages.backward[t + 1].clone();
    add_node_weights(&mut right, t + 1, kernels, pot);
    let (rows, cols) = left.dim();
    let blocks = (0..rows)
        .map(|i| {
            Array2::from_shape_fn((cols, cols), |(j, l)| {
                (left[[i, j]] + kernels.log_within_row(i, j, l) + right[[i, l]]).exp()
            })
        })
        .collect();
    PairProjection { blocks }
}

/// `<F, P_{t,t+1}(M)>` without materializing the pairwise marginal.
///
/// `left = log Phi_forward^t + node weights at t`, `right = log Phi_backward^{t+1}
/// + node weights at t + 1`.
pub(crate) fn expected_switch_cost(kernels: &Kernels, left: &Array2<f64>, right: &Array2<f64>) -> f64 {
    let (rows, cols) = left.dim();
    let (m, n) = (rows - 1, cols - 1);
    let full_cost = kernels.switch.full;
    if full_cost == 0.0 || n == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut ey = vec![0.0; cols];
    for i in 0..m {
        let x = left.row(i);
        let y = right.row(i);
        let shift_x = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shift_y = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if shift_x == f64::NEG_INFINITY || shift_y == f64::NEG_INFINITY {
            continue;
        }
        for (dst, &v) in ey.iter_mut().zip(y.iter()) {
            *dst = (v - shift_y).exp();
        }
        let y_real: f64 = ey[..n].iter().sum();
        let mut real_real = 0.0;
        let mut x_real = 0.0;
        for j in 0..n {
            let ex = (x[j] - shift_x).exp();
            x_real += ex;
            real_real += ex * (y_real - ey[j]).max(0.0);
        }
        let ex_dummy = (x[n] - shift_x).exp();
        let to_from_dummy = x_real * ey[n] + ex_dummy * y_real;
        let scale = shift_x + shift_y;
        total += full_cost * (real_real.ln() + kernels.log_full_switch + scale).exp();
        total += full_cost / 2.0 * (to_from_dummy.ln() + kernels.log_half_switch + scale).exp();
    }
    total
}
