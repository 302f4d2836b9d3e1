//! Trajectory sets, scenario validation and the scenario file format.
//!
//! A [`Scenario`] holds `m` ground-truth and `n` estimated trajectories over
//! time steps `1..=T`. Each trajectory maps a time step to an optional state;
//! a missing key and an explicit `None` both mean the trajectory is not alive
//! at that step. The order of trajectories in the scenario (and in the file)
//! fixes the row/column indices used by every cost matrix and plan.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single-target state: a point in `R^state_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(pub Vec<f64>);

impl State {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        State(coords.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Euclidean distance to `other`. Both states must share a dimension.
    pub fn distance(&self, other: &State) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<Vec<f64>> for State {
    fn from(v: Vec<f64>) -> Self {
        State(v)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub id: String,
    /// Keyed by 1-based time step. `None` is an explicit "not alive" entry.
    pub points: BTreeMap<usize, Option<State>>,
}

impl Trajectory {
    pub fn new(id: impl Into<String>) -> Self {
        Trajectory {
            id: id.into(),
            points: BTreeMap::new(),
        }
    }

    /// Builder-style insertion of a live state at time step `t`.
    pub fn with_point(mut self, t: usize, state: impl Into<State>) -> Self {
        self.points.insert(t, Some(state.into()));
        self
    }

    pub fn insert(&mut self, t: usize, state: Option<State>) {
        self.points.insert(t, state);
    }

    /// The state at time step `t`, or `None` when the trajectory is not alive.
    pub fn state_at(&self, t: usize) -> Option<&State> {
        self.points.get(&t).and_then(Option::as_ref)
    }

    pub fn is_alive(&self, t: usize) -> bool {
        self.state_at(t).is_some()
    }

    /// Number of time steps in `1..=horizon` at which the trajectory is alive.
    pub fn alive_count(&self, horizon: usize) -> usize {
        self.points
            .iter()
            .filter(|(t, s)| (1..=horizon).contains(*t) && s.is_some())
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Number of time steps `T`.
    pub time_steps: usize,
    pub state_dim: usize,
    pub ground_truth: Vec<Trajectory>,
    pub estimates: Vec<Trajectory>,
}

impl Scenario {
    pub fn new(time_steps: usize, state_dim: usize) -> Self {
        Scenario {
            time_steps,
            state_dim,
            ground_truth: Vec::new(),
            estimates: Vec::new(),
        }
    }

    /// Number of ground-truth trajectories.
    pub fn m(&self) -> usize {
        self.ground_truth.len()
    }

    /// Number of estimated trajectories.
    pub fn n(&self) -> usize {
        self.estimates.len()
    }

    /// The same scenario with the roles of ground truth and estimates exchanged.
    pub fn swapped(&self) -> Scenario {
        Scenario {
            time_steps: self.time_steps,
            state_dim: self.state_dim,
            ground_truth: self.estimates.clone(),
            estimates: self.ground_truth.clone(),
        }
    }

    /// A scenario comparing `truth` against `estimates`, both given as plain
    /// trajectory lists sharing `(time_steps, state_dim)`.
    pub fn from_sets(
        time_steps: usize,
        state_dim: usize,
        truth: &[Trajectory],
        estimates: &[Trajectory],
    ) -> Scenario {
        Scenario {
            time_steps,
            state_dim,
            ground_truth: truth.to_vec(),
            estimates: estimates.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    GroundTruth,
    Estimate,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::GroundTruth => f.write_str("ground_truth"),
            Side::Estimate => f.write_str("estimates"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    ZeroTimeSteps,
    ZeroStateDim,
    TimeOutOfRange { t: usize },
    DimensionMismatch { t: usize, found: usize },
    NonFinite { t: usize },
}

/// One broken invariant, located by trajectory and time step where relevant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub side: Option<Side>,
    pub index: Option<usize>,
    pub trajectory_id: Option<String>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let (Some(side), Some(index), Some(id)) = (self.side, self.index, &self.trajectory_id) {
            write!(f, "{side}[{index}] (id {id:?}): ")?;
        }
        match &self.kind {
            ViolationKind::ZeroTimeSteps => write!(f, "T must be positive"),
            ViolationKind::ZeroStateDim => write!(f, "state_dim must be positive"),
            ViolationKind::TimeOutOfRange { t } => write!(f, "time step {t} outside 1..=T"),
            ViolationKind::DimensionMismatch { t, found } => {
                write!(f, "state at t={t} has dimension {found}")
            }
            ViolationKind::NonFinite { t } => write!(f, "state at t={t} has a non-finite coordinate"),
        }
    }
}

/// Every invariant violation in `s`. An empty list means the scenario is valid.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    if s.time_steps == 0 {
        out.push(Violation {
            side: None,
            index: None,
            trajectory_id: None,
            kind: ViolationKind::ZeroTimeSteps,
        });
    }
    if s.state_dim == 0 {
        out.push(Violation {
            side: None,
            index: None,
            trajectory_id: None,
            kind: ViolationKind::ZeroStateDim,
        });
    }
    let sides = [
        (Side::GroundTruth, &s.ground_truth),
        (Side::Estimate, &s.estimates),
    ];
    for (side, list) in sides {
        for (index, traj) in list.iter().enumerate() {
            let mut push = |kind| {
                out.push(Violation {
                    side: Some(side),
                    index: Some(index),
                    trajectory_id: Some(traj.id.clone()),
                    kind,
                })
            };
            for (&t, state) in &traj.points {
                if t == 0 || t > s.time_steps {
                    push(ViolationKind::TimeOutOfRange { t });
                }
                if let Some(state) = state {
                    if state.dim() != s.state_dim {
                        push(ViolationKind::DimensionMismatch { t, found: state.dim() });
                    }
                    if state.0.iter().any(|v| !v.is_finite()) {
                        push(ViolationKind::NonFinite { t });
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate time step {t} in trajectory {id:?}")]
    DuplicateTimeStep { id: String, t: usize },
    #[error("invalid scenario: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

// On-disk representation. Field names are the file format.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(rename = "T")]
    time_steps: usize,
    state_dim: usize,
    ground_truth: Vec<TrajectoryFile>,
    estimates: Vec<TrajectoryFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryFile {
    id: String,
    points: Vec<PointFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointFile {
    t: usize,
    state: Option<Vec<f64>>,
}

impl TrajectoryFile {
    fn from_trajectory(traj: &Trajectory) -> Self {
        TrajectoryFile {
            id: traj.id.clone(),
            points: traj
                .points
                .iter()
                .map(|(&t, s)| PointFile {
                    t,
                    state: s.as_ref().map(|s| s.0.clone()),
                })
                .collect(),
        }
    }

    fn into_trajectory(self) -> Result<Trajectory, ScenarioError> {
        let mut traj = Trajectory::new(self.id);
        for p in self.points {
            if traj.points.insert(p.t, p.state.map(State)).is_some() {
                return Err(ScenarioError::DuplicateTimeStep { id: traj.id, t: p.t });
            }
        }
        Ok(traj)
    }
}

/// Serializes a scenario to its text form. Coordinates are written with the
/// shortest decimal representation that parses back to the same `f64`.
pub fn scenario_to_string(s: &Scenario) -> Result<String, ScenarioError> {
    let violations = validate_scenario(s);
    if !violations.is_empty() {
        return Err(ScenarioError::Invalid(violations));
    }
    let file = ScenarioFile {
        time_steps: s.time_steps,
        state_dim: s.state_dim,
        ground_truth: s.ground_truth.iter().map(TrajectoryFile::from_trajectory).collect(),
        estimates: s.estimates.iter().map(TrajectoryFile::from_trajectory).collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    text.push('\n');
    Ok(text)
}

/// Parses and validates a scenario document.
pub fn scenario_from_str(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let scenario = Scenario {
        time_steps: file.time_steps,
        state_dim: file.state_dim,
        ground_truth: file
            .ground_truth
            .into_iter()
            .map(TrajectoryFile::into_trajectory)
            .collect::<Result<_, _>>()?,
        estimates: file
            .estimates
            .into_iter()
            .map(TrajectoryFile::into_trajectory)
            .collect::<Result<_, _>>()?,
    };
    let violations = validate_scenario(&scenario);
    if violations.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Invalid(violations))
    }
}

pub fn save_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    let text = scenario_to_string(s)?;
    fs::write(path, text).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    scenario_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_by_two() -> Scenario {
        let mut s = Scenario::new(3, 2);
        s.ground_truth.push(
            Trajectory::new("a")
                .with_point(1, vec![0.0, 0.0])
                .with_point(2, vec![0.1, 0.2])
                .with_point(3, vec![0.3, 0.1]),
        );
        s.ground_truth.push(Trajectory::new("b").with_point(2, vec![1.0, -1.0]));
        s.estimates.push(
            Trajectory::new("x")
                .with_point(1, vec![0.01, -0.02])
                .with_point(2, vec![0.1 + 1e-17, 1.0 / 3.0]),
        );
        s.estimates.push(Trajectory::new("y").with_point(3, vec![f64::MIN_POSITIVE, 1e300]));
        s
    }

    #[test]
    fn empty_scenario_is_valid() {
        assert!(validate_scenario(&Scenario::new(1, 2)).is_empty());
    }

    #[test]
    fn time_zero_is_reported_with_its_trajectory() {
        let mut s = Scenario::new(5, 2);
        s.ground_truth.push(Trajectory::new("early").with_point(0, vec![0.0, 0.0]));
        let v = validate_scenario(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].trajectory_id.as_deref(), Some("early"));
        assert_eq!(v[0].kind, ViolationKind::TimeOutOfRange { t: 0 });
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut s = Scenario::new(2, 2);
        s.estimates.push(Trajectory::new("e").with_point(1, vec![0.0, 0.0, 0.0]));
        let v = validate_scenario(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::DimensionMismatch { t: 1, found: 3 });
        assert_eq!(v[0].side, Some(Side::Estimate));
    }

    #[test]
    fn non_finite_and_zero_sizes() {
        let mut s = Scenario::new(0, 0);
        s.estimates.push(Trajectory::new("e").with_point(1, vec![f64::NAN]));
        let kinds: Vec<_> = validate_scenario(&s).into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::ZeroTimeSteps));
        assert!(kinds.contains(&ViolationKind::ZeroStateDim));
        assert!(kinds.contains(&ViolationKind::NonFinite { t: 1 }));
    }

    #[test]
    fn round_trip_small_scenario() {
        let s = two_by_two();
        let back = scenario_from_str(&scenario_to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let s = two_by_two();
        save_scenario(&s, &path).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), s);
    }

    #[test]
    fn intermittent_trajectory_keeps_its_gap() {
        let mut s = Scenario::new(3, 1);
        let mut traj = Trajectory::new("blink")
            .with_point(1, vec![1.0])
            .with_point(3, vec![2.0]);
        traj.insert(2, None);
        s.ground_truth.push(traj);
        s.estimates.push(Trajectory::new("gap").with_point(1, vec![1.0]).with_point(3, vec![2.0]));
        let back = scenario_from_str(&scenario_to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(!back.ground_truth[0].is_alive(2));
        assert!(!back.estimates[0].is_alive(2));
        assert_eq!(back.ground_truth[0].points.get(&2), Some(&None));
    }

    #[test]
    fn missing_t_field_is_named() {
        let text = r#"{"state_dim": 2, "ground_truth": [], "estimates": []}"#;
        match scenario_from_str(text) {
            Err(ScenarioError::Parse { message, line, .. }) => {
                assert!(message.contains("`T`"), "{message}");
                assert_eq!(line, 1);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "{\n  \"T\": 2,\n  \"state_dim\": \"two\",\n  \"ground_truth\": [],\n  \"estimates\": []\n}";
        match scenario_from_str(text) {
            Err(ScenarioError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_file_surfaces_violations() {
        let text = r#"{"T": 2, "state_dim": 1, "ground_truth": [{"id": "g", "points": [{"t": 3, "state": [0.0]}]}], "estimates": []}"#;
        match scenario_from_str(text) {
            Err(ScenarioError::Invalid(v)) => {
                assert_eq!(v[0].kind, ViolationKind::TimeOutOfRange { t: 3 })
            }
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_time_step_rejected() {
        let text = r#"{"T": 2, "state_dim": 1, "ground_truth": [{"id": "g", "points": [{"t": 1, "state": [0.0]}, {"t": 1, "state": null}]}], "estimates": []}"#;
        assert!(matches!(
            scenario_from_str(text),
            Err(ScenarioError::DuplicateTimeStep { t: 1, .. })
        ));
    }

    fn arb_trajectory(t_max: usize, dim: usize, valid: bool) -> impl Strategy<Value = Trajectory> {
        let (times, dims) = if valid {
            (1..=t_max, dim..dim + 1)
        } else {
            (0..=t_max + 1, dim..dim + 2)
        };
        let point = (
            times,
            prop::option::weighted(0.8, prop::collection::vec(prop::num::f64::NORMAL, dims)),
        );
        ("[a-z]{1,4}", prop::collection::vec(point, 0..6)).prop_map(|(id, pts)| {
            let mut traj = Trajectory::new(id);
            for (t, s) in pts {
                traj.insert(t, s.map(State));
            }
            traj
        })
    }

    fn arb_scenario(valid: bool) -> impl Strategy<Value = Scenario> {
        (1usize..5, 1usize..4).prop_flat_map(move |(t, d)| {
            (
                prop::collection::vec(arb_trajectory(t, d, valid), 0..3),
                prop::collection::vec(arb_trajectory(t, d, valid), 0..3),
            )
                .prop_map(move |(g, e)| Scenario::from_sets(t, d, &g, &e))
        })
    }

    proptest! {
        #[test]
        fn validation_matches_invariants(s in arb_scenario(false)) {
            let expect_valid = s.ground_truth.iter().chain(&s.estimates).all(|traj| {
                traj.points.iter().all(|(&t, st)| {
                    (1..=s.time_steps).contains(&t)
                        && st.as_ref().is_none_or(|st| st.dim() == s.state_dim)
                })
            });
            prop_assert_eq!(validate_scenario(&s).is_empty(), expect_valid);
        }

        #[test]
        fn save_load_is_identity_on_valid_scenarios(s in arb_scenario(true)) {
            prop_assert!(validate_scenario(&s).is_empty());
            let back = scenario_from_str(&scenario_to_string(&s).unwrap()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
