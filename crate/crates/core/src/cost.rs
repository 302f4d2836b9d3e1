//! Cost objects of the trajectory assignment problem.
//!
//! Indices are 0-based: truths are `0..m`, estimates `0..n`, and the dummy
//! ("unassigned") row and column sit at index `m` and `n` respectively.

use ndarray::Array2;
use thiserror::Error;

use crate::scenario::{validate_scenario, Scenario, State, Violation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("state dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("index ({i}, {j}), ({k}, {l}) out of range for m={m}, n={n}")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        k: usize,
        l: usize,
        m: usize,
        n: usize,
    },
    #[error("invalid scenario: {} violation(s), first: {}", .0.len(), .0[0])]
    InvalidScenario(Vec<Violation>),
}

/// Single-frame cost between an optional truth state and an optional estimate.
///
/// `min(|x - y|, c)^p` when both are present, `0` when both are absent and
/// `c^p / 2` otherwise.
pub fn base_cost(x: Option<&State>, y: Option<&State>, p: f64, c: f64) -> Result<f64, CostError> {
    match (x, y) {
        (Some(x), Some(y)) => {
            if x.dim() != y.dim() {
                return Err(CostError::DimensionMismatch(x.dim(), y.dim()));
            }
            Ok(x.distance(y).min(c).powf(p))
        }
        (None, None) => Ok(0.0),
        _ => Ok(c.powf(p) / 2.0),
    }
}

/// Switch cost `F` between consecutive positions `(i, j)` and `(k, l)`.
///
/// Stored as three scalars: moving between two rows is forbidden (`+inf`),
/// staying put is free, and within a truth row a real-to-real change costs
/// `gamma^p` while a change to or from the dummy column costs half of that.
/// The dummy row moves freely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchCost {
    pub m: usize,
    pub n: usize,
    /// `gamma^p`.
    pub full: f64,
}

impl SwitchCost {
    pub fn new(m: usize, n: usize, gamma: f64, p: f64) -> Self {
        SwitchCost {
            m,
            n,
            full: gamma.powf(p),
        }
    }

    /// Value for in-range indices; `+inf` when `i != k`.
    #[inline]
    pub fn value(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        if i != k {
            return f64::INFINITY;
        }
        self.within_row(i, j, l)
    }

    /// `F_{(i, j), (i, l)}`.
    #[inline]
    pub fn within_row(&self, i: usize, j: usize, l: usize) -> f64 {
        if j == l {
            return 0.0;
        }
        let real = |idx: usize| (idx != self.n) as u8 as f64;
        let row_real = (i != self.m) as u8 as f64;
        // (1 - d_{k,m+1})(1 - d_{l,n+1}) + (1 - d_{i,m+1})(1 - d_{j,n+1}) with k = i.
        self.full / 2.0 * (row_real * real(l) + row_real * real(j))
    }

    /// Largest finite entry of `F`.
    pub fn max_finite(&self) -> f64 {
        match (self.m, self.n) {
            (0, _) | (_, 0) => 0.0,
            (_, 1) => self.full / 2.0,
            _ => self.full,
        }
    }
}

/// Checked switch cost over 0-based indices (`i, k <= m`, `j, l <= n`).
pub fn switch_cost(
    i: usize,
    j: usize,
    k: usize,
    l: usize,
    m: usize,
    n: usize,
    gamma: f64,
    p: f64,
) -> Result<f64, CostError> {
    if i > m || k > m || j > n || l > n {
        return Err(CostError::IndexOutOfRange { i, j, k, l, m, n });
    }
    Ok(SwitchCost::new(m, n, gamma, p).value(i, j, k, l))
}

/// Per-frame cost matrices `D^t`, each `(m + 1) x (n + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCosts {
    pub m: usize,
    pub n: usize,
    pub frames: Vec<Array2<f64>>,
}

impl FrameCosts {
    pub fn time_steps(&self) -> usize {
        self.frames.len()
    }

    pub fn max_entry(&self) -> f64 {
        self.frames
            .iter()
            .flat_map(|d| d.iter().copied())
            .fold(0.0, f64::max)
    }
}

pub fn build_frame_costs(s: &Scenario, p: f64, c: f64) -> Result<FrameCosts, CostError> {
    let violations = validate_scenario(s);
    if !violations.is_empty() {
        return Err(CostError::InvalidScenario(violations));
    }
    let (m, n) = (s.m(), s.n());
    let mut frames = Vec::with_capacity(s.time_steps);
    for t in 1..=s.time_steps {
        let truth: Vec<Option<&State>> = s
            .ground_truth
            .iter()
            .map(|g| g.state_at(t))
            .chain(std::iter::once(None))
            .collect();
        let est: Vec<Option<&State>> = s
            .estimates
            .iter()
            .map(|e| e.state_at(t))
            .chain(std::iter::once(None))
            .collect();
        let mut d = Array2::zeros((m + 1, n + 1));
        for (i, x) in truth.iter().enumerate() {
            for (j, y) in est.iter().enumerate() {
                d[[i, j]] = base_cost(*x, *y, p, c)?;
            }
        }
        frames.push(d);
    }
    Ok(FrameCosts { m, n, frames })
}

/// Row and column marginals `(1, ..., 1, n)` and `(1, ..., 1, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub mu_bar: Vec<f64>,
    pub mu_tilde: Vec<f64>,
}

pub fn build_marginals(m: usize, n: usize) -> Marginals {
    let mut mu_bar = vec![1.0; m + 1];
    mu_bar[m] = n as f64;
    let mut mu_tilde = vec![1.0; n + 1];
    mu_tilde[n] = m as f64;
    Marginals { mu_bar, mu_tilde }
}

/// `epsilon = eta * T * max(max D, max finite F)`, falling back to `eta`
/// when every cost is zero.
pub fn epsilon_from_eta(eta: f64, time_steps: usize, frames: &FrameCosts, switch: &SwitchCost) -> f64 {
    let scale = frames.max_entry().max(switch.max_finite());
    if scale > 0.0 {
        eta * time_steps as f64 * scale
    } else {
        eta
    }
}

/// Log-domain kernels: `-D^t / epsilon` per frame and the three distinct
/// finite values of `-F / epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernels {
    pub epsilon: f64,
    pub log_frame: Vec<Array2<f64>>,
    pub switch: SwitchCost,
    /// `-gamma^p / epsilon`, real column to another real column.
    pub log_full_switch: f64,
    /// `-gamma^p / (2 epsilon)`, real column to or from the dummy column.
    pub log_half_switch: f64,
}

impl Kernels {
    pub fn m(&self) -> usize {
        self.switch.m
    }

    pub fn n(&self) -> usize {
        self.switch.n
    }

    pub fn time_steps(&self) -> usize {
        self.log_frame.len()
    }

    /// `log k_hat` for a pair of positions; `-inf` exactly where `F = inf`.
    pub fn log_pair(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        if i != k {
            f64::NEG_INFINITY
        } else {
            self.log_within_row(i, j, l)
        }
    }

    #[inline]
    pub fn log_within_row(&self, i: usize, j: usize, l: usize) -> f64 {
        let n = self.n();
        if j == l || i == self.m() {
            0.0
        } else if j == n || l == n {
            self.log_half_switch
        } else {
            self.log_full_switch
        }
    }
}

pub fn build_kernels(frames: &FrameCosts, switch: &SwitchCost, epsilon: f64) -> Kernels {
    Kernels {
        epsilon,
        log_frame: frames.frames.iter().map(|d| d.mapv(|v| -v / epsilon)).collect(),
        switch: *switch,
        log_full_switch: -switch.full / epsilon,
        log_half_switch: -switch.full / (2.0 * epsilon),
    }
}
