//! `tgospa` command-line front end. Results go to stdout as TSV with a header.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 solver failure or
//! non-convergence.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use tgospa::bench::{bench_instance, bench_plan, relative_error, summarize, write_records_tsv, write_summary_tsv};
use tgospa::exact::{brute_force_tgospa, solve_gospa_frame, solve_relaxed_lp};
use tgospa::generator::{generate_scenario, GenParams, SweepAxis};
use tgospa::scenario::{load_scenario, save_scenario};
use tgospa::sinkhorn::{run_sinkhorn_with, SinkhornOptions};
use tgospa::{Config, Scenario};

#[derive(Parser)]
#[command(name = "tgospa", version, about = "TGOSPA metric between sets of trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact LP-relaxed metric, or the integer metric with --integer.
    Exact {
        scenario: PathBuf,
        /// Exhaustive search over integer assignments (tiny scenarios only).
        #[arg(long)]
        integer: bool,
        #[command(flatten)]
        metric: MetricArgs,
    },
    /// Regularized approximation by Sinkhorn iterations.
    Sinkhorn {
        scenario: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Comma-separated regularization values; one summary row each.
        #[arg(long, value_delimiter = ',', default_value = "1e-4")]
        eta: Vec<f64>,
        /// Also solve the exact LP and report relative errors.
        #[arg(long)]
        compare: bool,
        /// Write one row per sweep to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Per-frame GOSPA values.
    Gospa {
        scenario: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
    },
    /// Generate a synthetic scenario file.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Accuracy and timing sweep of Sinkhorn against the exact LP.
    Bench {
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated sizes (m for targets, T for time_steps).
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 25)]
        reps: usize,
        /// Summary table; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-instance records table.
        #[arg(long)]
        records: Option<PathBuf>,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 1e-4)]
        eta: f64,
        #[command(flatten)]
        gen: GenArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Targets,
    #[value(alias = "time_steps")]
    TimeSteps,
}

#[derive(Args)]
struct MetricArgs {
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 0.25)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = 10_000)]
    max_iter: usize,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long = "m-t", default_value_t = 14)]
    m_t: usize,
    #[arg(long = "m-f", default_value_t = 2)]
    m_f: usize,
    #[arg(long = "n-f", default_value_t = 1)]
    n_f: usize,
    #[arg(long = "T", default_value_t = 20)]
    time_steps: usize,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = 0.9)]
    q: f64,
    #[arg(long = "c-s", default_value_t = 0.25)]
    c_s: f64,
    #[arg(long = "n-ts", default_value_t = 20)]
    n_ts: usize,
    #[arg(long = "n-max", default_value_t = 1e5)]
    n_max: f64,
    #[arg(long, default_value_t = 0.01)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GenArgs {
    fn params(&self) -> GenParams {
        GenParams {
            m_t: self.m_t,
            m_f: self.m_f,
            n_f: self.n_f,
            time_steps: self.time_steps,
            r: self.r,
            q: self.q,
            c_s: self.c_s,
            n_ts: self.n_ts,
            n_max: self.n_max,
            sigma: self.sigma,
            seed: self.seed,
        }
    }
}

enum Failure {
    /// Downstream reader went away (e.g. `| head`); not an error.
    Closed,
    Usage(String),
    Data(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Closed => 0,
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Closed => "",
            Failure::Usage(m) | Failure::Data(m) | Failure::Solver(m) => m,
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return Failure::Closed;
        }
        Failure::Data(e.to_string())
    }
}

fn config(metric: &MetricArgs, solver: Option<&SolverArgs>, eta: f64) -> Result<Config, Failure> {
    let mut cfg = Config { p: metric.p, c: metric.c, gamma: metric.gamma, eta, ..Config::default() };
    if let Some(s) = solver {
        cfg.tol = s.tol;
        cfg.max_iter = s.max_iter;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    load_scenario(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Exact { scenario, integer, metric } => {
            let cfg = config(&metric, None, Config::default().eta)?;
            let s = load(&scenario)?;
            let (name, result) = if integer {
                ("integer", brute_force_tgospa(&s, &cfg))
            } else {
                ("lp", solve_relaxed_lp(&s, &cfg))
            };
            let r = result.map_err(|e| Failure::Solver(e.to_string()))?;
            writeln!(out, "solver\tobjective\tmetric\twall_time_s\titerations\tsubproblems")?;
            writeln!(
                out,
                "{name}\t{}\t{}\t{}\t{}\t{}",
                r.objective,
                r.metric,
                r.stats.wall_time.as_secs_f64(),
                r.stats.iterations,
                r.stats.subproblems
            )?;
        }
        Command::Sinkhorn { scenario, metric, solver, eta, compare, trace } => {
            let s = load(&scenario)?;
            let reference = if compare {
                let cfg = config(&metric, Some(&solver), Config::default().eta)?;
                Some(solve_relaxed_lp(&s, &cfg).map_err(|e| Failure::Solver(e.to_string()))?.objective)
            } else {
                None
            };
            let rel = |f: f64| reference.map_or("NA".to_string(), |opt| relative_error(f, opt).value.to_string());
            let mut trace_out = match &trace {
                Some(path) => {
                    let mut w = create(path)?;
                    writeln!(w, "eta\titeration\tf\tphi\tstep_size\trelative_error")?;
                    Some(w)
                }
                None => None,
            };
            writeln!(
                out,
                "eta\tepsilon\titerations\tconverged\tprimal_objective\tmetric\tdual_objective\tmarginal_residual\tstep_size\twall_time_s\trelative_error"
            )?;
            let mut all_converged = true;
            for &e in &eta {
                let cfg = config(&metric, Some(&solver), e)?;
                let opts = SinkhornOptions { trace: trace_out.is_some() };
                let r = run_sinkhorn_with(&s, &cfg, &opts).map_err(|e| Failure::Solver(e.to_string()))?;
                if let Some(w) = trace_out.as_mut() {
                    for rec in &r.trace {
                        writeln!(w, "{e}\t{}\t{}\t{}\t{}\t{}", rec.iteration, rec.primal, rec.dual, rec.step_size, rel(rec.primal))?;
                    }
                }
                let rep = &r.report;
                all_converged &= rep.converged;
                writeln!(
                    out,
                    "{e}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    rep.epsilon,
                    rep.iterations,
                    rep.converged,
                    rep.primal_objective,
                    rep.metric,
                    rep.dual_objective.reduced,
                    rep.marginal_residual_inf,
                    rep.step_size,
                    rep.wall_time.as_secs_f64(),
                    rel(rep.primal_objective)
                )?;
            }
            if let Some(mut w) = trace_out {
                w.flush()?;
            }
            if !all_converged {
                return Err(Failure::Solver("iteration limit reached before the step-size tolerance".into()));
            }
        }
        Command::Gospa { scenario, metric } => {
            let cfg = config(&metric, None, Config::default().eta)?;
            let s = load(&scenario)?;
            let frames = tgospa::cost::build_frame_costs(&s, cfg.p, cfg.c).map_err(|e| Failure::Data(e.to_string()))?;
            writeln!(out, "t\tobjective\tmetric")?;
            for (t, d) in frames.frames.iter().enumerate() {
                let (v, _) = solve_gospa_frame(d);
                writeln!(out, "{}\t{v}\t{}", t + 1, v.max(0.0).powf(1.0 / cfg.p))?;
            }
        }
        Command::Gen { out: path, gen } => {
            let s = generate_scenario(&gen.params()).map_err(|e| Failure::Usage(e.to_string()))?;
            save_scenario(&s, &path).map_err(|e| Failure::Data(e.to_string()))?;
            writeln!(out, "m\tn\tT")?;
            writeln!(out, "{}\t{}\t{}", s.m(), s.n(), s.time_steps)?;
        }
        Command::Bench { axis, sizes, reps, out: summary_path, records, threads, metric, solver, eta, gen } => {
            let cfg = config(&metric, Some(&solver), eta)?;
            let base = gen.params();
            base.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            if sizes.contains(&0) {
                return Err(Failure::Usage("sizes must be positive".into()));
            }
            let axis = match axis {
                Axis::Targets => SweepAxis::Targets,
                Axis::TimeSteps => SweepAxis::TimeSteps,
            };
            let plan = bench_plan(&base, axis, &sizes, reps);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Failure::Usage(e.to_string()))?;
            // Collecting an indexed parallel iterator keeps plan order.
            let results: Vec<_> = pool.install(|| {
                plan.par_iter()
                    .map(|(size, p)| bench_instance(*size, p, &cfg))
                    .collect()
            });
            let all: Vec<_> = results.into_iter().flatten().collect();
            if let Some(path) = &records {
                let mut w = create(path)?;
                write_records_tsv(&mut w, &all)?;
                w.flush()?;
            }
            let rows = summarize(&all);
            match &summary_path {
                Some(path) => {
                    let mut w = create(path)?;
                    write_summary_tsv(&mut w, axis, &rows)?;
                    w.flush()?;
                    write_meta(&path.with_extension("meta.tsv"))?;
                }
                None => write_summary_tsv(&mut out, axis, &rows)?,
            }
        }
    }
    Ok(())
}

/// Host description next to a benchmark table; timings are only comparable
/// on the same machine.
fn write_meta(path: &Path) -> Result<(), Failure> {
    let mut w = create(path)?;
    let threads = std::thread::available_parallelism().map_or(0, |n| n.get());
    writeln!(w, "key\tvalue")?;
    writeln!(w, "os\t{}", std::env::consts::OS)?;
    writeln!(w, "arch\t{}", std::env::consts::ARCH)?;
    writeln!(w, "available_parallelism\t{threads}")?;
    writeln!(w, "version\t{}", env!("CARGO_PKG_VERSION"))?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) | Err(Failure::Closed) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
