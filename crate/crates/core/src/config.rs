//! Solver parameters shared by the exact and regularized solvers.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Config {
    /// Exponent `p >= 1` of the metric.
    pub p: f64,
    /// Cut-off distance `c > 0`.
    pub c: f64,
    /// Track-switch penalty `gamma > 0`.
    pub gamma: f64,
    /// Scaled regularization: `epsilon = eta * T * max cost`.
    pub eta: f64,
    /// Relative step-size threshold that stops the Sinkhorn iterations.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            p: 1.0,
            c: 0.25,
            gamma: 1.0,
            eta: 1e-4,
            tol: 1e-3,
            max_iter: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid config: {0}")]
pub struct ConfigError(pub String);

impl Config {
    /// Tight regime used for convergence plots and the eta sweep.
    pub fn high_precision() -> Self {
        Config {
            eta: 1e-5,
            tol: 1.5e-6,
            max_iter: 1_000_000,
            ..Config::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let checks = [
            (self.p >= 1.0 && self.p.is_finite(), "p must be a finite value >= 1"),
            (self.c > 0.0 && self.c.is_finite(), "c must be positive"),
            (self.gamma > 0.0 && self.gamma.is_finite(), "gamma must be positive"),
            (self.eta > 0.0 && self.eta.is_finite(), "eta must be positive"),
            (self.tol > 0.0, "tol must be positive"),
            (self.max_iter > 0, "max_iter must be positive"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(ConfigError(msg.to_string())),
            None => Ok(()),
        }
    }

    /// `c^p`, the cost of a fully mismatched pair.
    pub fn cutoff_cost(&self) -> f64 {
        self.c.powf(self.p)
    }

    /// `gamma^p`, the cost of one full track switch.
    pub fn switch_penalty(&self) -> f64 {
        self.gamma.powf(self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        Config::default().validate().unwrap();
        Config::high_precision().validate().unwrap();
        assert_eq!(Config::high_precision().tol, 1.5e-6);
    }

    #[test]
    fn rejects_bad_parameters() {
        for cfg in [
            Config { p: 0.5, ..Config::default() },
            Config { c: 0.0, ..Config::default() },
            Config { gamma: -1.0, ..Config::default() },
            Config { eta: 0.0, ..Config::default() },
            Config { tol: 0.0, ..Config::default() },
            Config { max_iter: 0, ..Config::default() },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }
}
