// SPDX-License-Identifier: MIT OR Apache-2.0

//! The `fpseg` command line tool.

mod ingest;
mod output;

pub use ingest::{ingest, InputFormat, Track};
pub use output::{format_g17, peaks_from_segments, write_peaks, write_segments, PeakModel};

use std::ffi::OsString;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use crate::constraint::{ChangeConstraint, ChangeKind, ConstraintSchedule};
use crate::data::WeightedSequence;
use crate::error::{Error, Result};
use crate::oracle::{dpa_unconstrained, enumerate_constrained, OracleModel, MAX_ORACLE_N};
use crate::parallel::{set_threads, Execution};
use crate::penalized::{gfpop_solve, preset_graph, Edge, PenalizedSolution, Preset, StateGraph};
use crate::piecewise::LossFamily;
use crate::segmentation::Segmentation;
use crate::segneigh::{gpdpa_solve, SnSolution};
use crate::stats::PruningStats;
use crate::synthetic::planted_peaks;

/// Exit status for argument and model errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit status when no segmentation satisfies the model.
pub const EXIT_INFEASIBLE: i32 = 3;

const VERIFY_GRID: usize = 512;
const VERIFY_TOL: f64 = 1e-5;

#[derive(Debug, Parser)]
#[command(name = "fpseg", version, about = "Exact constrained changepoint detection")]
pub struct Args {
    /// Input file; reads standard input when omitted or `-`.
    pub input: Option<PathBuf>,

    /// Built-in model: unconstrained, isotonic, updown or unimodal.
    #[arg(long, default_value = "unconstrained")]
    pub model: Preset,

    /// State graph file (`source target penalty kind [gap]` lines plus
    /// optional `start:` and `end:` lines). Penalties come from the file.
    #[arg(long, conflicts_with_all = ["model", "segments", "penalty"])]
    pub graph: Option<PathBuf>,

    /// Loss: square or poisson.
    #[arg(long, default_value = "square")]
    pub loss: LossFamily,

    /// Fit the best models with 1..=K segments.
    #[arg(long, conflicts_with = "penalty")]
    pub segments: Option<usize>,

    /// Penalty per change; a comma-separated list gives one per edge.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub penalty: Option<Vec<f64>>,

    #[arg(long, value_enum, default_value = "tsv")]
    pub format: InputFormat,

    /// Print a JSON summary per sequence on standard error.
    #[arg(long)]
    pub stats: bool,

    /// Time the solver on synthetic count data instead of reading input.
    #[arg(long)]
    pub bench: bool,

    /// Sizes used by --bench.
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
    pub bench_sizes: Vec<usize>,

    /// Print peak intervals instead of segments (up-down models only).
    #[arg(long)]
    pub peaks: bool,

    /// Minimum size of every constrained change (square loss only).
    #[arg(long, default_value_t = 0.0)]
    pub gap: f64,

    /// Worker threads used across sequences.
    #[arg(long, env = "FPSEG_THREADS", value_parser = clap::value_parser!(usize))]
    pub threads: Option<usize>,

    /// Cross-check small inputs against a brute-force solver.
    #[arg(long, hide = true)]
    pub verify: bool,
}

/// What to fit, resolved from the arguments.
#[derive(Debug, Clone)]
enum Plan {
    Budget {
        preset: Preset,
        schedule: ConstraintSchedule,
        k_max: usize,
    },
    Penalized {
        graph: StateGraph,
        penalties: Vec<f64>,
    },
}

enum Fit {
    Budget(SnSolution),
    Penalized(PenalizedSolution),
}

impl Fit {
    fn stats(&self) -> &PruningStats {
        match self {
            Fit::Budget(s) => &s.stats,
            Fit::Penalized(s) => &s.stats,
        }
    }
}

/// Runs the tool and returns the process exit status.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&args, stdin, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "fpseg: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        Error::Misuse(_)
        | Error::PenaltyArity { .. }
        | Error::UnsupportedGap(_)
        | Error::InvalidConstraint(_)
        | Error::InvalidValue(..) => EXIT_USAGE,
        _ => 1,
    }
}

fn plan(args: &Args) -> Result<Plan> {
    if let Some(path) = &args.graph {
        let text = std::fs::read_to_string(path)?;
        if args.gap != 0.0 {
            return Err(Error::Misuse("--gap cannot be combined with --graph; put gaps in the graph file".into()));
        }
        let graph = StateGraph::parse(&text)?;
        let penalties = graph.edges().iter().map(|e| e.penalty).collect();
        return Ok(Plan::Penalized { graph, penalties });
    }
    if !args.gap.is_finite() || args.gap < 0.0 {
        return Err(Error::InvalidValue(args.gap, "gap must be finite and non-negative"));
    }
    match (args.segments, &args.penalty) {
        (Some(k_max), None) => {
            if k_max == 0 {
                return Err(Error::Misuse("--segments must be at least 1".into()));
            }
            let base = match args.model {
                Preset::Unconstrained => ConstraintSchedule::Unconstrained,
                Preset::Isotonic => ConstraintSchedule::ReducedIsotonic,
                Preset::UpDown => ConstraintSchedule::UpDown,
                Preset::Unimodal => {
                    return Err(Error::Misuse("the unimodal model needs --penalty".into()));
                }
            };
            Ok(Plan::Budget {
                preset: args.model,
                schedule: base.with_gap(k_max, args.gap)?,
                k_max,
            })
        }
        (None, Some(penalties)) => {
            let mut penalties = penalties.clone();
            if penalties.len() == 1 {
                penalties = vec![penalties[0]; args.model.penalty_count()];
            }
            let graph = with_gap(&preset_graph(args.model, &penalties)?, args.gap)?;
            Ok(Plan::Penalized { graph, penalties })
        }
        (None, None) => Err(Error::Misuse("one of --segments or --penalty is required".into())),
        (Some(_), Some(_)) => Err(Error::Misuse("--segments and --penalty are mutually exclusive".into())),
    }
}

/// Same graph with `gap` on every constrained edge.
fn with_gap(graph: &StateGraph, gap: f64) -> Result<StateGraph> {
    if gap == 0.0 {
        return Ok(graph.clone());
    }
    let names = (0..graph.state_count()).map(|s| graph.name(s as _).to_string()).collect();
    let edges = graph
        .edges()
        .iter()
        .map(|e| {
            let constraint = match e.constraint.kind {
                ChangeKind::Any => e.constraint,
                kind => ChangeConstraint::new(kind, gap)?,
            };
            Ok(Edge { constraint, ..*e })
        })
        .collect::<Result<Vec<_>>>()?;
    StateGraph::new(names, edges, graph.start_states().to_vec(), graph.end_states().to_vec())
}

fn solve(plan: &Plan, data: &WeightedSequence, loss: LossFamily) -> Result<Fit> {
    match plan {
        Plan::Budget { schedule, k_max, .. } => {
            if *k_max > data.len() {
                return Err(Error::Infeasible(format!(
                    "{k_max} segments requested for {} encoded points",
                    data.len()
                )));
            }
            gpdpa_solve(data, *k_max, schedule, loss).map(Fit::Budget)
        }
        Plan::Penalized { graph, .. } => gfpop_solve(data, graph, loss).map(Fit::Penalized),
    }
}

/// Models reported for a budget fit: all of them, or only the odd ones for
/// the up-down model, which has to end where it started.
fn reported_models(preset: Preset, sol: &SnSolution) -> Vec<&Segmentation> {
    sol.models
        .iter()
        .flatten()
        .filter(|m| preset != Preset::UpDown || m.k() % 2 == 1)
        .collect()
}

struct TrackReport {
    stdout: Vec<u8>,
    stderr: Vec<u8>,
}

fn report(args: &Args, plan: &Plan, track: &Track) -> Result<TrackReport> {
    let clock = Instant::now();
    let fit = solve(plan, &track.data, args.loss)?;
    let wall = clock.elapsed().as_secs_f64();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let (k_or_penalty, total_cost, change_count) = match (&fit, plan) {
        (Fit::Budget(sol), Plan::Budget { preset, schedule, k_max }) => {
            let models = reported_models(*preset, sol);
            for m in &models {
                writeln!(out, "# {}\tsegments={}\tcost={}", track.name, m.k(), format_g17(m.total_cost))?;
                if args.peaks {
                    let peaks = peaks_from_segments(m, PeakModel::Schedule(schedule))?;
                    write_peaks(&mut out, track, &peaks)?;
                } else {
                    write_segments(&mut out, track, m, |i| budget_state(*preset, i).to_string())?;
                }
            }
            let last = models
                .last()
                .ok_or_else(|| Error::Infeasible(format!("no {} model with at most {k_max} segments", preset)))?;
            (json!(k_max), last.total_cost, last.change_count())
        }
        (Fit::Penalized(sol), Plan::Penalized { graph, penalties }) => {
            let seg = sol.segmentation();
            writeln!(
                out,
                "# {}\tchanges={}\tcost={}",
                track.name,
                sol.change_count,
                format_g17(sol.penalized_cost)
            )?;
            if args.peaks {
                let peaks = peaks_from_segments(&seg, PeakModel::Graph(graph))?;
                write_peaks(&mut out, track, &peaks)?;
            } else {
                write_segments(&mut out, track, &seg, |i| graph.name(sol.states[i]).to_string())?;
            }
            let lambda = if penalties.iter().all(|&p| p == penalties[0]) {
                json!(penalties[0])
            } else {
                json!(penalties)
            };
            (lambda, sol.penalized_cost, sol.change_count)
        }
        _ => unreachable!("fit kind follows the plan"),
    };
    if args.stats {
        let stats = fit.stats();
        let summary = json!({
            "n": track.data.len(),
            "k_or_penalty": k_or_penalty,
            "total_cost": total_cost,
            "change_count": change_count,
            "intervals_median": stats.median(),
            "intervals_max": stats.max(),
            "wall_seconds": wall,
        });
        writeln!(err, "{summary}")?;
    }
    if args.verify {
        let checked = verify(plan, &fit, &track.data, args.loss)?;
        writeln!(err, "verify {}: ok, {checked} checked against brute force", track.name)?;
    }
    Ok(TrackReport { stdout: out, stderr: err })
}

fn budget_state(preset: Preset, i: usize) -> &'static str {
    match preset {
        Preset::UpDown if i.is_multiple_of(2) => "background",
        Preset::UpDown => "peak",
        _ => "main",
    }
}

/// Compares every fitted model with the brute-force solver and returns how
/// many were checked.
fn verify(plan: &Plan, fit: &Fit, data: &WeightedSequence, loss: LossFamily) -> Result<usize> {
    if data.len() > MAX_ORACLE_N {
        return Err(Error::TooLarge(format!(
            "--verify handles at most {MAX_ORACLE_N} encoded points, got {}",
            data.len()
        )));
    }
    let close = |a: f64, b: f64| (a - b).abs() <= VERIFY_TOL * a.abs().max(b.abs()).max(1.0);
    match (plan, fit) {
        (Plan::Budget { schedule, .. }, Fit::Budget(sol)) => {
            let exact = match schedule {
                ConstraintSchedule::Unconstrained => Some(dpa_unconstrained(data, sol.models.len(), loss)?),
                _ => None,
            };
            let mut checked = 0;
            for (i, m) in sol.models.iter().enumerate() {
                let k = i + 1;
                let reference = match &exact {
                    Some(costs) => costs[i],
                    None => match enumerate_constrained(data, OracleModel::Schedule { k, schedule }, loss, VERIFY_GRID) {
                        Ok(fit) => fit.cost,
                        Err(Error::Infeasible(_)) if m.is_none() => continue,
                        Err(e) => return Err(e),
                    },
                };
                let Some(m) = m else {
                    return Err(Error::Inconsistent(format!("no model with {k} segments, brute force found {reference}")));
                };
                if !close(m.total_cost, reference) {
                    return Err(Error::Inconsistent(format!(
                        "{k} segments: solver {} vs brute force {reference}",
                        m.total_cost
                    )));
                }
                checked += 1;
            }
            Ok(checked)
        }
        (Plan::Penalized { graph, .. }, Fit::Penalized(sol)) => {
            let reference = enumerate_constrained(data, OracleModel::Graph(graph), loss, VERIFY_GRID)?.cost;
            if !close(sol.penalized_cost, reference) {
                return Err(Error::Inconsistent(format!(
                    "solver {} vs brute force {reference}",
                    sol.penalized_cost
                )));
            }
            Ok(1)
        }
        _ => unreachable!("fit kind follows the plan"),
    }
}

fn execute(args: &Args, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    if let Some(threads) = args.threads {
        if threads == 0 {
            return Err(Error::Misuse("thread count must be at least 1".into()));
        }
        set_threads(threads);
    }
    let plan = plan(args)?;
    if args.bench {
        return bench(args, &plan, stdout);
    }
    let tracks = match args.input.as_deref() {
        None => ingest(stdin, args.format)?,
        Some(p) if p.as_os_str() == "-" => ingest(stdin, args.format)?,
        Some(p) => {
            let file = std::fs::File::open(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            ingest(BufReader::new(file), args.format)?
        }
    };
    let reports = Execution::Parallel.map(&tracks, |t| report(args, &plan, t));
    let mut code = 0;
    for (track, r) in tracks.iter().zip(reports) {
        match r {
            Ok(r) => {
                stdout.write_all(&r.stdout)?;
                stderr.write_all(&r.stderr)?;
            }
            Err(e) => {
                writeln!(stderr, "fpseg: {}: {e}", track.name)?;
                code = code.max(exit_code(&e));
            }
        }
    }
    Ok(code)
}

/// Times the plan on seeded synthetic counts with eight planted changes.
fn bench(args: &Args, plan: &Plan, stdout: &mut dyn Write) -> Result<i32> {
    writeln!(stdout, "n\twall_seconds\tintervals_median")?;
    for &n in &args.bench_sizes {
        let data = WeightedSequence::unit(&planted_peaks(n, 8, 2.0, 12.0, 1))?;
        let clock = Instant::now();
        let fit = solve(plan, &data, args.loss)?;
        let wall = clock.elapsed().as_secs_f64();
        writeln!(stdout, "{n}\t{}\t{}", format_g17(wall), format_g17(fit.stats().median()))?;
    }
    Ok(0)
}
