//! Repeated-run experiment execution with per-run seed derivation, parallel
//! workers, summary statistics, and success metrics, plus the CSV/JSON row
//! shapes the command-line tool emits.

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{run_ga, run_pso, GaConfig, PsoConfig};
use crate::core::{ObjectiveSpec, RunRecord};
use crate::epistocracy::{run_epistocracy, EpistocracyConfig};
use crate::error::{Error, Result};

/// Default relative tolerance for deciding that a run reached a known target.
pub const DEFAULT_SUCCESS_TOLERANCE: f64 = 1e-4;

/// One optimizer plus its parameters, dispatchable by name.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum AlgorithmConfig {
    Epistocracy(EpistocracyConfig),
    Ga(GaConfig),
    Pso(PsoConfig),
}

impl AlgorithmConfig {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmConfig::Epistocracy(_) => "epistocracy",
            AlgorithmConfig::Ga(_) => "ga",
            AlgorithmConfig::Pso(_) => "pso",
        }
    }

    pub fn population_size(&self) -> usize {
        match self {
            AlgorithmConfig::Epistocracy(c) => c.population_size,
            AlgorithmConfig::Ga(c) => c.population_size,
            AlgorithmConfig::Pso(c) => c.population_size,
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            AlgorithmConfig::Epistocracy(c) => c.iterations,
            AlgorithmConfig::Ga(c) => c.iterations,
            AlgorithmConfig::Pso(c) => c.iterations,
        }
    }

    /// Same parameters, different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut cfg = self.clone();
        match &mut cfg {
            AlgorithmConfig::Epistocracy(c) => c.seed = seed,
            AlgorithmConfig::Ga(c) => c.seed = seed,
            AlgorithmConfig::Pso(c) => c.seed = seed,
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AlgorithmConfig::Epistocracy(c) => c.validate(),
            AlgorithmConfig::Ga(c) => c.validate(),
            AlgorithmConfig::Pso(c) => c.validate(),
        }
    }

    pub fn run(&self, obj: &ObjectiveSpec) -> Result<RunRecord> {
        match self {
            AlgorithmConfig::Epistocracy(c) => run_epistocracy(obj, c),
            AlgorithmConfig::Ga(c) => run_ga(obj, c),
            AlgorithmConfig::Pso(c) => run_pso(obj, c),
        }
    }
}

/// How many independent runs to execute and how to seed and schedule them.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub runs: usize,
    /// Run `i` uses seed `base_seed.wrapping_add(i)`.
    pub base_seed: u64,
    /// Worker threads; `None` uses the global default pool.
    pub jobs: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { runs: 100, base_seed: 42, jobs: None }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::config("experiment needs at least one run"));
        }
        if self.jobs == Some(0) {
            return Err(Error::config("--jobs must be at least 1"));
        }
        Ok(())
    }
}

/// Execute `cfg.runs` independent runs, building a fresh objective per run
/// via `factory` (stateful objectives — external processes, caches — must
/// not be shared across runs). Results come back in run order regardless of
/// scheduling.
pub fn run_experiment_with<F>(
    factory: F,
    algorithm: &AlgorithmConfig,
    cfg: &ExperimentConfig,
) -> Result<Vec<RunRecord>>
where
    F: Fn(usize) -> Result<ObjectiveSpec> + Sync,
{
    cfg.validate()?;
    algorithm.validate()?;
    let one = |run: usize| -> Result<RunRecord> {
        let obj = factory(run).map_err(|e| e.in_run(run))?;
        let seeded = algorithm.with_seed(cfg.base_seed.wrapping_add(run as u64));
        seeded.run(&obj).map_err(|e| e.in_run(run))
    };
    match cfg.jobs {
        None => (0..cfg.runs).into_par_iter().map(one).collect(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(format!("worker pool: {e}")))?
            .install(|| (0..cfg.runs).into_par_iter().map(one).collect()),
    }
}

/// Execute repeated runs against one shared, stateless objective.
pub fn run_experiment(
    obj: &ObjectiveSpec,
    algorithm: &AlgorithmConfig,
    cfg: &ExperimentConfig,
) -> Result<Vec<RunRecord>> {
    run_experiment_with(|_| Ok(obj.clone()), algorithm, cfg)
}

/// Min/max/mean/sample-std aggregate of per-run final bests.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SummaryStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

/// Aggregate a non-empty value set. The standard deviation uses the sample
/// convention (divisor `n - 1`); a single value has deviation 0.
pub fn summarize(values: &[f64]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::config("cannot summarize an empty value set"));
    }
    let n = values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok(SummaryStats { min, max, mean, std })
}

/// Fraction of runs that reached a known target and how quickly they got
/// there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SuccessMetrics {
    pub hits: usize,
    pub runs: usize,
    pub hit_rate: f64,
    /// Mean first-hit trace index among successful runs; absent without hits.
    pub avg_hit_iteration: Option<f64>,
}

/// Absolute tolerance from a relative one: `rel_tol * max(1, |target|)`, so
/// targets near zero keep a usable band.
pub fn success_tolerance(rel_tol: f64, target: f64) -> f64 {
    rel_tol * target.abs().max(1.0)
}

/// A run is a hit when its final best lands within `tolerance` of `target`;
/// its hit iteration is the first trace index at or below `target +
/// tolerance`.
pub fn success_metrics(records: &[RunRecord], target: f64, tolerance: f64) -> SuccessMetrics {
    let mut hits = 0usize;
    let mut iteration_sum = 0.0;
    for record in records {
        if (record.best_value - target).abs() <= tolerance {
            hits += 1;
            let first = record
                .trace
                .iter()
                .position(|&v| v <= target + tolerance)
                .expect("a hit's trace must cross its own final best");
            iteration_sum += first as f64;
        }
    }
    SuccessMetrics {
        hits,
        runs: records.len(),
        hit_rate: if records.is_empty() { 0.0 } else { hits as f64 / records.len() as f64 },
        avg_hit_iteration: (hits > 0).then(|| iteration_sum / hits as f64),
    }
}

/// One line of a comparison table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub function: String,
    pub algorithm: String,
    pub dimension: usize,
    pub population: usize,
    pub iterations: usize,
    pub runs: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

/// Aggregate one experiment's records into a table line.
pub fn summary_row(
    function: &str,
    dimension: usize,
    algorithm: &AlgorithmConfig,
    records: &[RunRecord],
) -> Result<SummaryRow> {
    let finals: Vec<f64> = records.iter().map(RunRecord::final_best).collect();
    let stats = summarize(&finals)?;
    Ok(SummaryRow {
        function: function.to_string(),
        algorithm: algorithm.name().to_string(),
        dimension,
        population: algorithm.population_size(),
        iterations: algorithm.iterations(),
        runs: records.len(),
        min: stats.min,
        max: stats.max,
        mean: stats.mean,
        std: stats.std,
    })
}

/// One point of a convergence curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub run: usize,
    pub iteration: usize,
    pub best_fitness: f64,
}

/// Flatten experiment records into trace rows, run-major.
pub fn trace_rows(records: &[RunRecord]) -> Vec<TraceRow> {
    records
        .iter()
        .enumerate()
        .flat_map(|(run, record)| {
            record
                .trace
                .iter()
                .enumerate()
                .map(move |(iteration, &best_fitness)| TraceRow { run, iteration, best_fitness })
        })
        .collect()
}

/// One run's final best, boxplot-ready.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerRunRow {
    pub function: String,
    pub algorithm: String,
    pub run: usize,
    pub final_best: f64,
}

pub fn per_run_rows(
    function: &str,
    algorithm: &AlgorithmConfig,
    records: &[RunRecord],
) -> Vec<PerRunRow> {
    records
        .iter()
        .enumerate()
        .map(|(run, record)| PerRunRow {
            function: function.to_string(),
            algorithm: algorithm.name().to_string(),
            run,
            final_best: record.final_best(),
        })
        .collect()
}

/// Summary line plus full experiment provenance, for JSON output.
#[derive(Clone, Debug, Serialize)]
pub struct SummaryRecord {
    #[serde(flatten)]
    pub row: SummaryRow,
    pub base_seed: u64,
    pub config: AlgorithmConfig,
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is always UTF-8"))
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    to_csv(rows)
}

pub fn trace_csv(rows: &[TraceRow]) -> Result<String> {
    to_csv(rows)
}

pub fn per_run_csv(rows: &[PerRunRow]) -> Result<String> {
    to_csv(rows)
}

/// Pretty JSON with a trailing newline, mirroring the CSV fields plus config.
pub fn summary_json(records: &[SummaryRecord]) -> Result<String> {
    let mut out = serde_json::to_string_pretty(records)?;
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::Bounds;

    fn sphere(dim: usize) -> ObjectiveSpec {
        ObjectiveSpec::new(Bounds::symmetric(10.0, dim).unwrap(), |x| {
            x.iter().map(|v| v * v).sum()
        })
    }

    fn small_experiment() -> (AlgorithmConfig, ExperimentConfig) {
        let algorithm = AlgorithmConfig::Epistocracy(EpistocracyConfig {
            population_size: 20,
            iterations: 15,
            ..Default::default()
        });
        let experiment = ExperimentConfig { runs: 6, base_seed: 9, jobs: None };
        (algorithm, experiment)
    }

    #[test]
    fn summary_statistics() {
        let stats = summarize(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(stats.min, 1.0);
        assert_eq!(stats.max, 3.0);
        assert_eq!(stats.mean, 2.0);
        assert!((stats.std - 1.0).abs() < 1e-12);

        let single = summarize(&[4.0]).unwrap();
        assert_eq!(single.min, 4.0);
        assert_eq!(single.max, 4.0);
        assert_eq!(single.mean, 4.0);
        assert_eq!(single.std, 0.0);

        let constant = summarize(&[2.5; 10]).unwrap();
        assert_eq!(constant.std, 0.0);

        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn aggregates_match_independent_recomputation() {
        let obj = sphere(2);
        let (algorithm, experiment) = small_experiment();
        let records = run_experiment(&obj, &algorithm, &experiment).unwrap();
        let row = summary_row("sphere", 2, &algorithm, &records).unwrap();
        let finals: Vec<f64> = records.iter().map(|r| r.best_value).collect();
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        let var = finals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (finals.len() - 1) as f64;
        assert!((row.mean - mean).abs() < 1e-12);
        assert!((row.std - var.sqrt()).abs() < 1e-12);
        assert!(row.min <= row.mean && row.mean <= row.max);
    }

    #[test]
    fn parallel_and_sequential_runs_agree() {
        let obj = sphere(2);
        let (algorithm, mut experiment) = small_experiment();
        experiment.jobs = Some(1);
        let sequential = run_experiment(&obj, &algorithm, &experiment).unwrap();
        experiment.jobs = Some(4);
        let parallel = run_experiment(&obj, &algorithm, &experiment).unwrap();
        experiment.jobs = None;
        let pooled = run_experiment(&obj, &algorithm, &experiment).unwrap();
        let finals = |records: &[RunRecord]| -> Vec<f64> {
            records.iter().map(|r| r.best_value).collect()
        };
        assert_eq!(finals(&sequential), finals(&parallel));
        assert_eq!(finals(&sequential), finals(&pooled));
        for (a, b) in sequential.iter().zip(&parallel) {
            assert_eq!(a.trace, b.trace);
        }
    }

    #[test]
    fn per_run_seeds_differ() {
        let obj = sphere(2);
        let (algorithm, experiment) = small_experiment();
        let records = run_experiment(&obj, &algorithm, &experiment).unwrap();
        let finals: Vec<f64> = records.iter().map(|r| r.best_value).collect();
        assert!(finals.windows(2).any(|w| w[0] != w[1]), "all runs identical: {finals:?}");
    }

    #[test]
    fn failures_carry_the_run_index() {
        let bounds = Bounds::symmetric(1.0, 1).unwrap();
        let obj = ObjectiveSpec::fallible(bounds, |_| {
            Err(Error::Evaluator("broken".into()))
        });
        let (algorithm, experiment) = small_experiment();
        let err = run_experiment(&obj, &algorithm, &experiment).unwrap_err();
        assert!(err.to_string().contains("run "), "{err}");
        assert!(err.to_string().contains("broken"), "{err}");
    }

    #[test]
    fn success_metrics_count_hits_and_first_crossings() {
        let record = |trace: Vec<f64>| RunRecord {
            best_position: vec![0.0],
            best_value: *trace.last().unwrap(),
            trace,
            evaluations: 0,
        };
        let records = vec![
            record(vec![5.0, 3.0, 1.0]),
            record(vec![5.0, 4.0, 3.0]),
            record(vec![1.2, 1.2, 1.2]),
        ];
        let metrics = success_metrics(&records, 1.0, 0.5);
        assert_eq!(metrics.hits, 2);
        assert_eq!(metrics.runs, 3);
        assert!((metrics.hit_rate - 2.0 / 3.0).abs() < 1e-12);
        // First crossings at indices 2 and 0.
        assert_eq!(metrics.avg_hit_iteration, Some(1.0));

        let none = success_metrics(&records, -5.0, 0.1);
        assert_eq!(none.hit_rate, 0.0);
        assert_eq!(none.avg_hit_iteration, None);

        // Wider tolerance can only add hits.
        let wide = success_metrics(&records, 1.0, 2.5);
        assert!(wide.hit_rate >= metrics.hit_rate);
        assert_eq!(wide.hits, 3);
    }

    #[test]
    fn relative_tolerance_floors_small_targets() {
        assert_eq!(success_tolerance(1e-4, -959.6407), 1e-4 * 959.6407);
        assert_eq!(success_tolerance(1e-4, 0.0), 1e-4);
        assert_eq!(success_tolerance(1e-4, 0.29), 1e-4);
    }

    #[test]
    fn csv_layouts() {
        let (algorithm, _) = small_experiment();
        let row = SummaryRow {
            function: "sphere".into(),
            algorithm: "epistocracy".into(),
            dimension: 2,
            population: 20,
            iterations: 15,
            runs: 3,
            min: 0.5,
            max: 2.0,
            mean: 1.25,
            std: 0.75,
        };
        let text = summary_csv(&[row]).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "function,algorithm,dimension,population,iterations,runs,min,max,mean,std"
        );
        assert_eq!(lines.next().unwrap(), "sphere,epistocracy,2,20,15,3,0.5,2.0,1.25,0.75");
        assert_eq!(lines.next(), None);

        let traces = trace_csv(&[TraceRow { run: 0, iteration: 1, best_fitness: 0.25 }]).unwrap();
        assert!(traces.starts_with("run,iteration,best_fitness\n"));

        let rows = per_run_rows("sphere", &algorithm, &[]);
        assert!(rows.is_empty());
    }

    #[test]
    fn trace_rows_flatten_run_major() {
        let records = vec![
            RunRecord {
                trace: vec![3.0, 1.0],
                best_position: vec![0.0],
                best_value: 1.0,
                evaluations: 2,
            },
            RunRecord {
                trace: vec![4.0, 2.0, 2.0],
                best_position: vec![0.0],
                best_value: 2.0,
                evaluations: 3,
            },
        ];
        let rows = trace_rows(&records);
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0], TraceRow { run: 0, iteration: 0, best_fitness: 3.0 });
        assert_eq!(rows[2], TraceRow { run: 1, iteration: 0, best_fitness: 4.0 });
        assert_eq!(rows[4], TraceRow { run: 1, iteration: 2, best_fitness: 2.0 });
    }

    #[test]
    fn json_round_trip_preserves_fields() {
        let (algorithm, _) = small_experiment();
        let record = SummaryRecord {
            row: SummaryRow {
                function: "sphere".into(),
                algorithm: algorithm.name().into(),
                dimension: 2,
                population: 20,
                iterations: 15,
                runs: 6,
                min: 0.1,
                max: 0.9,
                mean: 0.4,
                std: 0.2,
            },
            base_seed: 9,
            config: algorithm.clone(),
        };
        let text = summary_json(&[record]).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        let entry = &parsed[0];
        assert_eq!(entry["function"], "sphere");
        assert_eq!(entry["algorithm"], "epistocracy");
        assert_eq!(entry["base_seed"], 9);
        assert_eq!(entry["mean"], 0.4);
        assert_eq!(entry["config"]["algorithm"], "epistocracy");
        assert_eq!(entry["config"]["population_size"], 20);
        assert_eq!(entry["config"]["iterations"], 15);
    }

    #[test]
    fn invalid_experiment_configs_are_rejected() {
        let cfg = ExperimentConfig { runs: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { jobs: Some(0), ..Default::default() };
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }
}
