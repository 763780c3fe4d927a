//! Discrete hyper-parameter tuning: the continuous optimizers run in index
//! space over an enumerated grid, every evaluation snaps to the nearest grid
//! point, and the score comes from an exhaustive lookup table or an external
//! evaluator process speaking a line protocol over stdin/stdout. Scores are
//! maximized (accuracy-style) by negating them into the minimizing
//! optimizers, and memoized per run so a grid point costs at most one real
//! evaluation.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread::JoinHandle;
use std::time::Duration;

use serde::Serialize;

use crate::core::{Bounds, ObjectiveSpec};
use crate::error::{Error, Result};
use crate::harness::{run_experiment_with, AlgorithmConfig, ExperimentConfig};

/// How long to wait for one evaluator response before giving up.
pub const DEFAULT_EVALUATOR_TIMEOUT: Duration = Duration::from_secs(600);

/// Scores within this distance of the grid's best count as having found it.
pub const DEFAULT_HIT_TOLERANCE: f64 = 1e-9;

/// One tunable hyper-parameter: a name and its ordered value levels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridAxis {
    pub name: String,
    pub levels: Vec<f64>,
}

impl GridAxis {
    pub fn new(name: impl Into<String>, levels: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::config(format!(
                "axis name must be non-empty and whitespace-free, got {name:?}"
            )));
        }
        if levels.len() < 2 {
            return Err(Error::config(format!(
                "axis {name:?} needs at least 2 levels, got {}",
                levels.len()
            )));
        }
        for pair in levels.windows(2) {
            if !pair[0].is_finite() || !pair[1].is_finite() || pair[0] >= pair[1] {
                return Err(Error::config(format!(
                    "axis {name:?} levels must be finite, distinct, and ascending: {levels:?}"
                )));
            }
        }
        Ok(Self { name, levels })
    }
}

/// An ordered set of axes spanning `∏ level-count` grid points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSpace {
    axes: Vec<GridAxis>,
}

impl GridSpace {
    pub fn new(axes: Vec<GridAxis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::config("grid needs at least one axis"));
        }
        for (i, axis) in axes.iter().enumerate() {
            if axes[..i].iter().any(|other| other.name == axis.name) {
                return Err(Error::config(format!("duplicate axis name {:?}", axis.name)));
            }
        }
        Ok(Self { axes })
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn axis_names(&self) -> Vec<String> {
        self.axes.iter().map(|a| a.name.clone()).collect()
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn point_count(&self) -> usize {
        self.axes.iter().map(|a| a.levels.len()).product()
    }

    /// Index-space search box: `[0, level_count - 1]` per axis.
    pub fn bounds(&self) -> Bounds {
        let lower = vec![0.0; self.axes.len()];
        let upper = self.axes.iter().map(|a| (a.levels.len() - 1) as f64).collect();
        Bounds::new(lower, upper).expect("index-space bounds are always valid")
    }

    /// Round a continuous index-space position to the nearest grid point;
    /// halves round up, and out-of-range coordinates clamp to the edge.
    pub fn snap(&self, x: &[f64]) -> Vec<usize> {
        debug_assert_eq!(x.len(), self.axes.len());
        self.axes
            .iter()
            .zip(x)
            .map(|(axis, &coord)| {
                let top = (axis.levels.len() - 1) as f64;
                (coord + 0.5).floor().clamp(0.0, top) as usize
            })
            .collect()
    }

    /// The level values at a grid point.
    pub fn values(&self, indices: &[usize]) -> Vec<f64> {
        self.axes
            .iter()
            .zip(indices)
            .map(|(axis, &i)| axis.levels[i])
            .collect()
    }

    /// Every grid point, lexicographically ordered by axis index (first axis
    /// most significant).
    pub fn enumerate(&self) -> Vec<Vec<usize>> {
        let mut points: Vec<Vec<usize>> = vec![Vec::new()];
        for axis in &self.axes {
            let mut next = Vec::with_capacity(points.len() * axis.levels.len());
            for stem in &points {
                for i in 0..axis.levels.len() {
                    let mut point = stem.clone();
                    point.push(i);
                    next.push(point);
                }
            }
            points = next;
        }
        points
    }

    fn describe_point(&self, indices: &[usize]) -> String {
        let mut out = String::new();
        for (axis, &i) in self.axes.iter().zip(indices) {
            if !out.is_empty() {
                out.push(' ');
            }
            let _ = write!(out, "{}={}", axis.name, axis.levels[i]);
        }
        out
    }
}

/// Parse a grid definition: one axis per line, `name: v1, v2, ...`; blank
/// lines and `#` comments are skipped.
pub fn parse_grid(text: &str) -> Result<GridSpace> {
    let mut axes = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, rest) = line.split_once(':').ok_or_else(|| {
            Error::config(format!("grid line {}: expected `name: v1, v2, ...`", lineno + 1))
        })?;
        let levels = rest
            .split(',')
            .map(|v| {
                v.trim().parse::<f64>().map_err(|_| {
                    Error::config(format!("grid line {}: bad level {:?}", lineno + 1, v.trim()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        axes.push(GridAxis::new(name.trim(), levels)?);
    }
    GridSpace::new(axes)
}

/// Load a grid definition from a file.
pub fn load_grid(path: &Path) -> Result<GridSpace> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_grid(&text)
}

/// An exhaustive score table covering every grid point exactly once.
#[derive(Clone, Debug)]
pub struct ScoreTable {
    scores: HashMap<Vec<usize>, f64>,
    space: GridSpace,
}

impl ScoreTable {
    /// Parse CSV text with header `axis1,...,axisN,score` (names matching
    /// the grid axes in order) and one row per grid point, joined to levels
    /// by exact value match. Duplicate, unknown, malformed, or missing
    /// points are load errors naming the offender.
    pub fn from_csv(text: &str, space: &GridSpace) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        let mut expected = space.axis_names();
        expected.push("score".to_string());
        let got: Vec<&str> = headers.iter().collect();
        if got != expected.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::Table(format!(
                "header mismatch: expected {expected:?}, got {got:?}"
            )));
        }

        let mut scores = HashMap::with_capacity(space.point_count());
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let row = i + 2; // 1-based, after the header
            if record.len() != expected.len() {
                return Err(Error::Table(format!(
                    "row {row}: expected {} fields, got {}",
                    expected.len(),
                    record.len()
                )));
            }
            let mut indices = Vec::with_capacity(space.dimension());
            for (axis, field) in space.axes().iter().zip(record.iter()) {
                let value: f64 = field.parse().map_err(|_| {
                    Error::Table(format!("row {row}: bad value {field:?} for axis {}", axis.name))
                })?;
                let index = axis.levels.iter().position(|&l| l == value).ok_or_else(|| {
                    Error::Table(format!(
                        "row {row}: {value} is not a level of axis {} {:?}",
                        axis.name, axis.levels
                    ))
                })?;
                indices.push(index);
            }
            let score: f64 = record[space.dimension()].parse().map_err(|_| {
                Error::Table(format!("row {row}: bad score {:?}", &record[space.dimension()]))
            })?;
            if !score.is_finite() {
                return Err(Error::Table(format!("row {row}: non-finite score {score}")));
            }
            if scores.insert(indices.clone(), score).is_some() {
                return Err(Error::Table(format!(
                    "row {row}: duplicate grid point {}",
                    space.describe_point(&indices)
                )));
            }
        }

        let missing: Vec<Vec<usize>> = space
            .enumerate()
            .into_iter()
            .filter(|p| !scores.contains_key(p))
            .collect();
        if !missing.is_empty() {
            let shown: Vec<String> =
                missing.iter().take(5).map(|p| space.describe_point(p)).collect();
            let suffix = if missing.len() > shown.len() {
                format!(" (+{} more)", missing.len() - shown.len())
            } else {
                String::new()
            };
            return Err(Error::Table(format!(
                "table is missing {} of {} grid points: {}{}",
                missing.len(),
                space.point_count(),
                shown.join("; "),
                suffix
            )));
        }
        Ok(Self { scores, space: space.clone() })
    }

    pub fn load(path: &Path, space: &GridSpace) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, space)
    }

    pub fn score(&self, indices: &[usize]) -> Option<f64> {
        self.scores.get(indices).copied()
    }

    /// Brute-force argmax; ties go to the earlier point in enumeration
    /// order.
    pub fn best(&self) -> (Vec<usize>, f64) {
        let mut best_point = Vec::new();
        let mut best_score = f64::NEG_INFINITY;
        for point in self.space.enumerate() {
            let score = self.scores[&point];
            if best_point.is_empty() || score > best_score {
                best_score = score;
                best_point = point;
            }
        }
        (best_point, best_score)
    }
}

/// Where grid-point scores come from.
#[derive(Debug)]
pub enum ScoreSource {
    /// Pre-computed exhaustive table.
    Table(ScoreTable),
    /// External process speaking the line protocol; one process per run.
    Evaluator { command: Vec<String>, timeout: Duration },
}

/// A spawned evaluator child. Requests go down stdin one line at a time
/// (`EVAL <run_id> <iteration> <name1>=<value1> ...`), responses come back
/// on stdout (`OK <score>` or `ERR <message>`), one request in flight. A
/// dedicated reader thread feeds a channel so responses can time out.
#[derive(Debug)]
pub struct EvaluatorProcess {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    reader: Option<JoinHandle<()>>,
    timeout: Duration,
    command: String,
}

impl EvaluatorProcess {
    pub fn spawn(command: &[String], timeout: Duration) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::Evaluator("evaluator command is empty".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Evaluator(format!("failed to spawn {program:?}: {e}")))?;
        let stdin = child.stdin.take().expect("stdin was requested piped");
        let stdout = child.stdout.take().expect("stdout was requested piped");
        let (tx, lines) = mpsc::channel();
        let reader = std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            child,
            stdin,
            lines,
            reader: Some(reader),
            timeout,
            command: command.join(" "),
        })
    }

    /// One request/response exchange for the grid point described by
    /// `assignments` (already `name=value` formatted).
    pub fn query(&mut self, run: usize, iteration: u64, assignments: &str) -> Result<f64> {
        writeln!(self.stdin, "EVAL {run} {iteration} {assignments}").map_err(|e| {
            Error::Evaluator(format!(
                "evaluator {:?} stopped accepting requests at {assignments}: {e}",
                self.command
            ))
        })?;
        self.stdin.flush().map_err(|e| {
            Error::Evaluator(format!("evaluator {:?}: flush failed: {e}", self.command))
        })?;
        let line = match self.lines.recv_timeout(self.timeout) {
            Ok(line) => line,
            Err(RecvTimeoutError::Timeout) => {
                return Err(Error::Evaluator(format!(
                    "evaluator {:?} timed out after {:?} at {assignments}",
                    self.command, self.timeout
                )));
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(Error::Evaluator(format!(
                    "evaluator {:?} closed its output at {assignments}",
                    self.command
                )));
            }
        };
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("OK") {
            rest.trim().parse::<f64>().map_err(|_| {
                Error::Evaluator(format!(
                    "evaluator {:?} sent unparseable score {line:?} at {assignments}",
                    self.command
                ))
            })
        } else if let Some(rest) = line.strip_prefix("ERR") {
            Err(Error::Evaluator(format!(
                "evaluator {:?} failed at {assignments}: {}",
                self.command,
                rest.trim()
            )))
        } else {
            Err(Error::Evaluator(format!(
                "evaluator {:?} sent unrecognized response {line:?} at {assignments}",
                self.command
            )))
        }
    }
}

impl Drop for EvaluatorProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
        if let Some(reader) = self.reader.take() {
            let _ = reader.join();
        }
    }
}

/// Build the per-run objective: snap to the grid, memoize, and negate the
/// score so maximizing accuracy becomes minimization. Evaluator sources
/// spawn their own child process per run.
pub fn grid_objective(space: &GridSpace, source: &ScoreSource, run: usize) -> Result<ObjectiveSpec> {
    let bounds = space.bounds();
    let space = space.clone();
    let memo: Mutex<HashMap<Vec<usize>, f64>> = Mutex::new(HashMap::new());
    match source {
        ScoreSource::Table(table) => {
            let table = table.clone();
            Ok(ObjectiveSpec::fallible(bounds, move |x| {
                let point = space.snap(x);
                if let Some(&score) = memo.lock().unwrap().get(&point) {
                    return Ok(-score);
                }
                let score = table.score(&point).ok_or_else(|| {
                    Error::Table(format!("no score for {}", space.describe_point(&point)))
                })?;
                memo.lock().unwrap().insert(point, score);
                Ok(-score)
            }))
        }
        ScoreSource::Evaluator { command, timeout } => {
            let process = Mutex::new(EvaluatorProcess::spawn(command, *timeout)?);
            Ok(ObjectiveSpec::stateful(bounds, move |x, iteration| {
                let point = space.snap(x);
                if let Some(&score) = memo.lock().unwrap().get(&point) {
                    return Ok(-score);
                }
                let assignments = space.describe_point(&point);
                let score = process
                    .lock()
                    .unwrap()
                    .query(run, iteration, &assignments)?;
                memo.lock().unwrap().insert(point, score);
                Ok(-score)
            }))
        }
    }
}

/// One tuning run's outcome, in score (maximize) terms.
#[derive(Clone, Debug, Serialize)]
pub struct TuneRun {
    pub run: usize,
    pub seed: u64,
    /// Level values of the best grid point this run found.
    pub best_values: Vec<f64>,
    pub best_indices: Vec<usize>,
    pub best_score: f64,
    /// First trace index at which this run reached the target score, when it
    /// did.
    pub hit_iteration: Option<usize>,
    pub evaluations: usize,
}

/// Aggregated tuning outcome across repeated runs.
#[derive(Clone, Debug, Serialize)]
pub struct TuneReport {
    pub axes: Vec<String>,
    /// Best score any run could have found: the table optimum when the
    /// source is a table, otherwise the best score observed across runs.
    pub target_score: f64,
    pub hit_rate: f64,
    pub hits: usize,
    pub avg_hit_iteration: Option<f64>,
    /// Index into `runs` of the best-scoring run (earliest on ties).
    pub best_run: usize,
    pub runs: Vec<TuneRun>,
}

impl TuneReport {
    pub fn best(&self) -> &TuneRun {
        &self.runs[self.best_run]
    }
}

/// Repeatedly optimize over the grid and aggregate hit statistics. A run is
/// a hit when its best score comes within `hit_tolerance` of the target
/// (the table optimum, or the cross-run best for evaluator sources).
pub fn tune(
    space: &GridSpace,
    source: &ScoreSource,
    algorithm: &AlgorithmConfig,
    experiment: &ExperimentConfig,
    hit_tolerance: f64,
) -> Result<TuneReport> {
    let records = run_experiment_with(|run| grid_objective(space, source, run), algorithm, experiment)?;

    let mut runs: Vec<TuneRun> = records
        .iter()
        .enumerate()
        .map(|(run, record)| {
            let best_indices = space.snap(&record.best_position);
            TuneRun {
                run,
                seed: experiment.base_seed.wrapping_add(run as u64),
                best_values: space.values(&best_indices),
                best_indices,
                best_score: -record.best_value,
                hit_iteration: None,
                evaluations: record.evaluations,
            }
        })
        .collect();

    let target_score = match source {
        ScoreSource::Table(table) => table.best().1,
        ScoreSource::Evaluator { .. } => runs
            .iter()
            .map(|r| r.best_score)
            .fold(f64::NEG_INFINITY, f64::max),
    };

    let mut hits = 0usize;
    let mut iteration_sum = 0.0;
    for (run, record) in runs.iter_mut().zip(&records) {
        if (run.best_score - target_score).abs() <= hit_tolerance {
            hits += 1;
            let first = record
                .trace
                .iter()
                .position(|&v| -v >= target_score - hit_tolerance)
                .expect("a hit's trace must reach its own best");
            run.hit_iteration = Some(first);
            iteration_sum += first as f64;
        }
    }

    let best_run = runs
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.best_score.total_cmp(&b.best_score))
        .map(|(i, _)| i)
        .expect("experiments always have at least one run");
    // max_by keeps the last maximum; walk back to the earliest tie.
    let best_score = runs[best_run].best_score;
    let best_run = runs
        .iter()
        .position(|r| r.best_score == best_score)
        .unwrap_or(best_run);

    Ok(TuneReport {
        axes: space.axis_names(),
        target_score,
        hit_rate: hits as f64 / runs.len() as f64,
        hits,
        avg_hit_iteration: (hits > 0).then(|| iteration_sum / hits as f64),
        best_run,
        runs,
    })
}
