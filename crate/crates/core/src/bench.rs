//! Accuracy and timing benchmarks: per-scenario records, aggregation by
//! size, and tab-separated output.

use std::io::{self, Write};
use std::time::{Duration, Instant};

use crate::config::Config;
use crate::exact::solve_relaxed_lp;
use crate::generator::{generate_scenario, GenParams, SweepAxis};
use crate::sinkhorn::run_sinkhorn;

/// Error of an approximation `f` against the exact optimum `f_opt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeError {
    pub value: f64,
    /// `true` when `f_opt == 0` and `value` is the absolute error instead.
    pub absolute: bool,
}

pub fn relative_error(f: f64, f_opt: f64) -> RelativeError {
    if f_opt > 0.0 {
        RelativeError { value: (f_opt - f).abs() / f_opt, absolute: false }
    } else {
        RelativeError { value: (f - f_opt).abs(), absolute: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Lp,
    Sinkhorn,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Lp => "lp",
            SolverKind::Sinkhorn => "sinkhorn",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub scenario_id: String,
    /// Swept value (`m` or `T`).
    pub size: usize,
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub time_steps: usize,
    pub solver: SolverKind,
    pub objective: Option<f64>,
    pub metric: Option<f64>,
    pub f_opt: Option<f64>,
    pub relative_error: Option<RelativeError>,
    pub wall_time: Duration,
    pub iterations: usize,
    pub converged: bool,
    /// Diagnostic when the solver failed; the run continues.
    pub failure: Option<String>,
}

/// Generate one scenario and solve it with the exact LP and with Sinkhorn.
/// Returns the LP record followed by the Sinkhorn record.
pub fn bench_instance(size: usize, params: &GenParams, cfg: &Config) -> Vec<BenchRecord> {
    let scenario_id = format!("size{size}-seed{}", params.seed);
    let blank = |solver| BenchRecord {
        scenario_id: scenario_id.clone(),
        size,
        seed: params.seed,
        m: 0,
        n: 0,
        time_steps: params.time_steps,
        solver,
        objective: None,
        metric: None,
        f_opt: None,
        relative_error: None,
        wall_time: Duration::ZERO,
        iterations: 0,
        converged: false,
        failure: None,
    };
    let s = match generate_scenario(params) {
        Ok(s) => s,
        Err(e) => {
            return [SolverKind::Lp, SolverKind::Sinkhorn]
                .map(|k| BenchRecord { failure: Some(e.to_string()), ..blank(k) })
                .to_vec()
        }
    };
    let (m, n) = (s.m(), s.n());

    let started = Instant::now();
    let mut lp = BenchRecord { m, n, ..blank(SolverKind::Lp) };
    match solve_relaxed_lp(&s, cfg) {
        Ok(r) => {
            lp.objective = Some(r.objective);
            lp.metric = Some(r.metric);
            lp.f_opt = Some(r.objective);
            lp.relative_error = Some(relative_error(r.objective, r.objective));
            lp.iterations = r.stats.iterations;
            lp.converged = true;
        }
        Err(e) => lp.failure = Some(e.to_string()),
    }
    lp.wall_time = started.elapsed();

    let mut sk = BenchRecord { m, n, f_opt: lp.f_opt, ..blank(SolverKind::Sinkhorn) };
    match run_sinkhorn(&s, cfg) {
        Ok(r) => {
            let rep = r.report;
            sk.objective = Some(rep.primal_objective);
            sk.metric = Some(rep.metric);
            sk.relative_error = lp.f_opt.map(|opt| relative_error(rep.primal_objective, opt));
            sk.iterations = rep.iterations;
            sk.converged = rep.converged;
            sk.wall_time = rep.wall_time;
        }
        Err(e) => sk.failure = Some(e.to_string()),
    }
    vec![lp, sk]
}

/// Parameters of every instance of a sweep, ordered by size then repetition.
/// Repetition `k` uses seed `base.seed + k`.
pub fn bench_plan(base: &GenParams, axis: SweepAxis, sizes: &[usize], repetitions: usize) -> Vec<(usize, GenParams)> {
    sizes
        .iter()
        .zip(crate::generator::sweep_params(base, axis, sizes))
        .flat_map(|(&size, p)| (0..repetitions as u64).map(move |k| (size, GenParams { seed: base.seed + k, ..p })))
        .collect()
}

/// One row per size: accuracy of Sinkhorn against the LP and mean timings.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub size: usize,
    pub repetitions: usize,
    /// Instances where either solver failed.
    pub failures: usize,
    pub mean_relative_error: f64,
    pub max_relative_error: f64,
    /// Sample standard deviation; zero for a single instance.
    pub std_relative_error: f64,
    /// Instances whose error is absolute because `f_opt = 0`.
    pub absolute_errors: usize,
    pub mean_time_lp: Duration,
    pub mean_time_sinkhorn: Duration,
    pub mean_iterations: f64,
    pub converged_fraction: f64,
}

/// Aggregate records by size, in order of first appearance.
pub fn summarize(records: &[BenchRecord]) -> Vec<SummaryRow> {
    let mut sizes: Vec<usize> = Vec::new();
    for r in records {
        if !sizes.contains(&r.size) {
            sizes.push(r.size);
        }
    }
    sizes
        .into_iter()
        .map(|size| {
            let of = |kind| records.iter().filter(move |r| r.size == size && r.solver == kind);
            let lp: Vec<_> = of(SolverKind::Lp).collect();
            let sk: Vec<_> = of(SolverKind::Sinkhorn).collect();
            let ok: Vec<_> = sk.iter().filter(|r| r.failure.is_none() && r.relative_error.is_some()).collect();
            let errs: Vec<f64> = ok.iter().map(|r| r.relative_error.unwrap().value).collect();
            let mean_err = mean(&errs);
            let std = if errs.len() > 1 {
                (errs.iter().map(|e| (e - mean_err).powi(2)).sum::<f64>() / (errs.len() - 1) as f64).sqrt()
            } else {
                0.0
            };
            let mean_time = |rs: &[&BenchRecord]| {
                let good: Vec<f64> = rs.iter().filter(|r| r.failure.is_none()).map(|r| r.wall_time.as_secs_f64()).collect();
                Duration::from_secs_f64(mean(&good).max(0.0))
            };
            let failures = lp
                .iter()
                .zip(&sk)
                .filter(|(a, b)| a.failure.is_some() || b.failure.is_some())
                .count();
            SummaryRow {
                size,
                repetitions: sk.len(),
                failures,
                mean_relative_error: mean_err,
                max_relative_error: errs.iter().copied().fold(f64::NAN, f64::max),
                std_relative_error: std,
                absolute_errors: ok.iter().filter(|r| r.relative_error.unwrap().absolute).count(),
                mean_time_lp: mean_time(&lp),
                mean_time_sinkhorn: mean_time(&sk),
                mean_iterations: mean(&ok.iter().map(|r| r.iterations as f64).collect::<Vec<_>>()),
                converged_fraction: mean(&ok.iter().map(|r| r.converged as u8 as f64).collect::<Vec<_>>()),
            }
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// TSV cells may not contain tabs or newlines.
fn cell(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

pub const RECORD_COLUMNS: [&str; 16] = [
    "scenario_id", "size", "seed", "m", "n", "T", "solver", "objective", "metric", "f_opt",
    "relative_error", "error_is_absolute", "wall_time_s", "iterations", "converged", "failure",
];

pub fn write_records_tsv<W: Write>(mut w: W, records: &[BenchRecord]) -> io::Result<()> {
    writeln!(w, "{}", RECORD_COLUMNS.join("\t"))?;
    for r in records {
        let fields = [
            cell(&r.scenario_id),
            r.size.to_string(),
            r.seed.to_string(),
            r.m.to_string(),
            r.n.to_string(),
            r.time_steps.to_string(),
            r.solver.name().to_string(),
            opt(r.objective),
            opt(r.metric),
            opt(r.f_opt),
            opt(r.relative_error.map(|e| e.value)),
            r.relative_error.map_or("NA".into(), |e| e.absolute.to_string()),
            r.wall_time.as_secs_f64().to_string(),
            r.iterations.to_string(),
            r.converged.to_string(),
            r.failure.as_deref().map_or("NA".into(), cell),
        ];
        writeln!(w, "{}", fields.join("\t"))?;
    }
    Ok(())
}

pub const SUMMARY_COLUMNS: [&str; 12] = [
    "axis", "size", "repetitions", "failures", "mean_relative_error", "max_relative_error",
    "std_relative_error", "absolute_errors", "mean_time_lp_s", "mean_time_sinkhorn_s", "mean_iterations",
    "converged_fraction",
];

pub fn axis_name(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::Targets => "targets",
        SweepAxis::TimeSteps => "time_steps",
    }
}

pub fn write_summary_tsv<W: Write>(mut w: W, axis: SweepAxis, rows: &[SummaryRow]) -> io::Result<()> {
    writeln!(w, "{}", SUMMARY_COLUMNS.join("\t"))?;
    for r in rows {
        let fields = [
            axis_name(axis).to_string(),
            r.size.to_string(),
            r.repetitions.to_string(),
            r.failures.to_string(),
            r.mean_relative_error.to_string(),
            r.max_relative_error.to_string(),
            r.std_relative_error.to_string(),
            r.absolute_errors.to_string(),
            r.mean_time_lp.as_secs_f64().to_string(),
            r.mean_time_sinkhorn.as_secs_f64().to_string(),
            r.mean_iterations.to_string(),
            r.converged_fraction.to_string(),
        ];
        writeln!(w, "{}", fields.join("\t"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_cases() {
        assert!(!relative_error(1.1, 1.0).absolute);
        assert!((relative_error(1.1, 1.0).value - 0.1).abs() < 1e-12);
        assert_eq!(relative_error(0.3, 0.0), RelativeError { value: 0.3, absolute: true });
    }

    fn record(size: usize, solver: SolverKind, err: f64, secs: f64) -> BenchRecord {
        BenchRecord {
            scenario_id: "x".into(),
            size,
            seed: 0,
            m: 1,
            n: 1,
            time_steps: 2,
            solver,
            objective: Some(1.0),
            metric: Some(1.0),
            f_opt: Some(1.0),
            relative_error: Some(RelativeError { value: err, absolute: false }),
            wall_time: Duration::from_secs_f64(secs),
            iterations: 10,
            converged: true,
            failure: None,
        }
    }

    #[test]
    fn three_records_make_one_row() {
        let mut rs = Vec::new();
        for e in [0.01, 0.02, 0.03] {
            rs.push(record(20, SolverKind::Lp, 0.0, 1.0));
            rs.push(record(20, SolverKind::Sinkhorn, e, 0.5));
        }
        let rows = summarize(&rs);
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!(r.repetitions, 3);
        assert!((r.mean_relative_error - 0.02).abs() < 1e-12);
        assert!((r.max_relative_error - 0.03).abs() < 1e-12);
        assert!((r.std_relative_error - 0.01).abs() < 1e-12);
        assert_eq!(r.mean_time_lp, Duration::from_secs(1));
    }

    #[test]
    fn failures_are_counted_not_averaged() {
        let mut bad = record(5, SolverKind::Sinkhorn, 0.9, 1.0);
        bad.failure = Some("boom".into());
        let rs = vec![
            record(5, SolverKind::Lp, 0.0, 1.0),
            bad,
            record(5, SolverKind::Lp, 0.0, 1.0),
            record(5, SolverKind::Sinkhorn, 0.01, 1.0),
        ];
        let r = &summarize(&rs)[0];
        assert_eq!(r.failures, 1);
        assert!((r.mean_relative_error - 0.01).abs() < 1e-12);
    }

    #[test]
    fn tsv_has_header_and_fixed_width() {
        let rs = vec![record(3, SolverKind::Sinkhorn, 0.1, 0.2)];
        let mut buf = Vec::new();
        write_records_tsv(&mut buf, &rs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for line in text.lines() {
            assert_eq!(line.split('\t').count(), RECORD_COLUMNS.len());
        }
        let mut buf = Vec::new();
        write_summary_tsv(&mut buf, SweepAxis::Targets, &summarize(&rs)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().all(|l| l.split('\t').count() == SUMMARY_COLUMNS.len()));
    }

    #[test]
    fn plan_orders_by_size_then_seed() {
        let base = GenParams { seed: 10, ..GenParams::default() };
        let plan = bench_plan(&base, SweepAxis::Targets, &[4, 8], 2);
        let got: Vec<(usize, u64)> = plan.iter().map(|(s, p)| (*s, p.seed)).collect();
        assert_eq!(got, vec![(4, 10), (4, 11), (8, 10), (8, 11)]);
    }

    #[test]
    fn small_instance_end_to_end() {
        let p = GenParams { m_t: 2, m_f: 0, n_f: 1, time_steps: 5, n_max: 4.0, ..GenParams::default() };
        let rs = bench_instance(2, &p, &Config::default());
        assert_eq!(rs.len(), 2);
        assert!(rs.iter().all(|r| r.failure.is_none()));
        assert!(rs[1].relative_error.unwrap().value < 0.05);
    }
}
