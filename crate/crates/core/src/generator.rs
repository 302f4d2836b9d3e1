//! Seeded synthetic scenarios: near-constant-velocity targets in a square,
//! noisy thinned estimates, missed truths, false tracks and identity swaps.
//!
//! Interpretation of the parameters:
//!
//! * positions live in `[0, sqrt(n_max)]^2` and reflect off the walls;
//! * `r` scales the nominal speed (uniform in `[0.5 r, 1.5 r]` per step) and the
//!   birth/death rate: a target is born after an exponential delay with mean
//!   `T / (20 r)` and dies the same way before `T`, living one contiguous interval;
//! * `q` keeps each estimate point independently;
//! * `n_ts` switch opportunities each fire with probability `c_s` and swap the
//!   remaining suffixes of two detected estimates at a uniform time in `2..=T`.
//!
//! Randomness comes from ChaCha8 seeded with `seed`. Every trajectory draws from
//! its own stream `(kind << 32) | index`, so changing one count never perturbs
//! trajectories of another kind or lower index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use thiserror::Error;

use crate::scenario::{Scenario, State, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    /// Truths that have an estimate counterpart.
    pub m_t: usize,
    /// Truths that are never estimated.
    pub m_f: usize,
    /// Estimates with no truth counterpart.
    pub n_f: usize,
    pub time_steps: usize,
    pub r: f64,
    pub q: f64,
    pub c_s: f64,
    pub n_ts: usize,
    pub n_max: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for GenParams {
    /// The small illustrative scenario with 16 truths and 15 estimates.
    fn default() -> Self {
        GenParams {
            m_t: 14,
            m_f: 2,
            n_f: 1,
            time_steps: 20,
            r: 1.0,
            q: 0.9,
            c_s: 0.25,
            n_ts: 20,
            n_max: 1e5,
            sigma: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid generator parameters: {0}")]
pub struct GenParamsError(pub String);

impl GenParams {
    pub fn validate(&self) -> Result<(), GenParamsError> {
        let checks = [
            (self.time_steps > 0, "T must be positive"),
            (self.r > 0.0 && self.r.is_finite(), "r must be positive"),
            (self.q > 0.0 && self.q <= 1.0, "q must lie in (0, 1]"),
            ((0.0..=1.0).contains(&self.c_s), "c_s must lie in [0, 1]"),
            (self.n_max > 0.0 && self.n_max.is_finite(), "n_max must be positive"),
            (self.sigma >= 0.0 && self.sigma.is_finite(), "sigma must be non-negative"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(GenParamsError(msg.to_string())),
            None => Ok(()),
        }
    }

    /// Side length of the square domain.
    pub fn domain_side(&self) -> f64 {
        self.n_max.sqrt()
    }
}

#[derive(Clone, Copy)]
#[repr(u64)]
enum Stream {
    Truth = 0,
    Detection = 1,
    FalseTrack = 2,
    Switches = 3,
}

fn rng_for(seed: u64, kind: Stream, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((kind as u64) << 32) | index as u64);
    rng
}

/// Reflect `x` into `[0, side]`, flipping the velocity on each bounce.
fn reflect(x: &mut f64, v: &mut f64, side: f64) {
    for _ in 0..4 {
        if *x < 0.0 {
            *x = -*x;
            *v = -*v;
        } else if *x > side {
            *x = 2.0 * side - *x;
            *v = -*v;
        } else {
            return;
        }
    }
    *x = x.clamp(0.0, side);
}

/// One target path: alive interval plus a position per alive step.
fn motion_path(params: &GenParams, rng: &mut ChaCha8Rng) -> Vec<(usize, [f64; 2])> {
    let horizon = params.time_steps;
    let side = params.domain_side();
    let lifetime = Exp::new(20.0 * params.r / horizon as f64).expect("positive rate");
    let birth = 1 + (lifetime.sample(rng) as usize).min(horizon - 1);
    let death = horizon.saturating_sub(lifetime.sample(rng) as usize).max(birth);

    let mut pos = [rng.random_range(0.0..=side), rng.random_range(0.0..=side)];
    let heading = rng.random_range(0.0..std::f64::consts::TAU);
    let speed = params.r * rng.random_range(0.5..1.5);
    let mut vel = [speed * heading.cos(), speed * heading.sin()];
    let process = Normal::new(0.0, 0.1 * params.r).expect("finite std");

    let mut out = Vec::with_capacity(death - birth + 1);
    for t in birth..=death {
        if t > birth {
            for k in 0..2 {
                vel[k] += process.sample(rng);
                pos[k] += vel[k];
                reflect(&mut pos[k], &mut vel[k], side);
            }
        }
        out.push((t, pos));
    }
    out
}

fn to_trajectory(id: String, path: &[(usize, [f64; 2])]) -> Trajectory {
    let mut traj = Trajectory::new(id);
    for (t, x) in path {
        traj.insert(*t, Some(State(x.to_vec())));
    }
    traj
}

pub fn generate_scenario(params: &GenParams) -> Result<Scenario, GenParamsError> {
    params.validate()?;
    let side = params.domain_side();
    let noise = Normal::new(0.0, params.sigma).expect("validated sigma");
    let mut s = Scenario::new(params.time_steps, 2);

    for k in 0..params.m_t + params.m_f {
        let path = motion_path(params, &mut rng_for(params.seed, Stream::Truth, k));
        s.ground_truth.push(to_trajectory(format!("truth-{k}"), &path));
        if k >= params.m_t {
            continue;
        }
        let mut rng = rng_for(params.seed, Stream::Detection, k);
        let mut est = Trajectory::new(format!("est-{k}"));
        for (t, x) in &path {
            let keep = params.q >= 1.0 || rng.random_bool(params.q);
            let jitter = [noise.sample(&mut rng), noise.sample(&mut rng)];
            if keep {
                let y = [(x[0] + jitter[0]).clamp(0.0, side), (x[1] + jitter[1]).clamp(0.0, side)];
                est.insert(*t, Some(State(y.to_vec())));
            }
        }
        s.estimates.push(est);
    }
    for k in 0..params.n_f {
        let path = motion_path(params, &mut rng_for(params.seed, Stream::FalseTrack, k));
        s.estimates.push(to_trajectory(format!("false-{k}"), &path));
    }
    apply_switches(&mut s.estimates[..params.m_t], params);
    Ok(s)
}

/// Swap the suffixes from time `at` on of two trajectories.
fn swap_suffix(a: &mut Trajectory, b: &mut Trajectory, at: usize) {
    let tail_a = a.points.split_off(&at);
    let tail_b = b.points.split_off(&at);
    a.points.extend(tail_b);
    b.points.extend(tail_a);
}

fn apply_switches(detected: &mut [Trajectory], params: &GenParams) {
    if detected.len() < 2 || params.time_steps < 2 {
        return;
    }
    let mut rng = rng_for(params.seed, Stream::Switches, 0);
    for _ in 0..params.n_ts {
        let fire = rng.random_bool(params.c_s);
        let a = rng.random_range(0..detected.len());
        let b = (a + rng.random_range(1..detected.len())) % detected.len();
        let at = rng.random_range(2..=params.time_steps);
        if fire {
            let (lo, hi) = (a.min(b), a.max(b));
            let (left, right) = detected.split_at_mut(hi);
            swap_suffix(&mut left[lo], &mut right[0], at);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Vary the total truth count `m` at `T = 100`.
    Targets,
    /// Vary `T` at `m = 100`.
    TimeSteps,
}

/// Parameters for a size sweep: `m_f = round(m / 10)`, `m_t = m - m_f`,
/// `n_f = m_f`, `n_ts = m`, `n_max = 100 m`; everything else from `base`.
pub fn sweep_params(base: &GenParams, axis: SweepAxis, values: &[usize]) -> Vec<GenParams> {
    values
        .iter()
        .map(|&v| {
            let (m, horizon) = match axis {
                SweepAxis::Targets => (v, 100),
                SweepAxis::TimeSteps => (100, v),
            };
            let m_f = (m as f64 / 10.0).round() as usize;
            GenParams {
                m_t: m - m_f,
                m_f,
                n_f: m_f,
                time_steps: horizon,
                n_ts: m,
                n_max: 100.0 * m as f64,
                ..*base
            }
        })
        .collect()
}
