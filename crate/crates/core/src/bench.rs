//! Experiment harness: source-only baseline, ablation runs, grid search and
//! report files.
//!
//! Configuration keys are documented in [`crate::config`]. Target labels are
//! only consulted after training, through [`evaluate`]-style helpers here.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Components, ExperimentConfig};
use crate::error::{CdemError, Result};
use crate::linalg::Matrix;
use crate::matio::{DomainPair, LabelVector, LoadedTask};
use crate::prototype::fit_prototypes;
use crate::trainer::{accuracy_percent, preprocess_pair, run_cdem, IterationRecord};

/// Method id of the no-adaptation baseline.
pub const SOURCE_ONLY: &str = "source-only";

/// Values swept per hyperparameter by [`grid_search`].
pub const GRID: [f64; 6] = [0.0001, 0.001, 0.01, 0.1, 1.0, 10.0];

/// The four ablation configurations, in increasing order of components.
pub const ABLATIONS: [Components; 4] = [
    Components::ERM,
    Components::ERM_DA,
    Components::ERM_DA_CDE,
    Components::ALL,
];

/// One point of the 2-D embedding dump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingPoint {
    pub domain: &'static str,
    pub index: usize,
    /// Source: true label. Target: final prediction.
    pub label: usize,
    /// Target only, when evaluation labels are available.
    pub truth: Option<usize>,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskResult {
    pub task: String,
    pub method: String,
    /// Percent; `None` when no target labels were supplied.
    pub accuracy: Option<f64>,
    pub predictions: Vec<usize>,
    pub iterations: Vec<IterationRecord>,
    #[serde(skip)]
    pub embedding: Vec<EmbeddingPoint>,
    /// Kept out of the report files so that reruns compare byte for byte.
    #[serde(skip)]
    pub wall_time: Duration,
}

fn embedding_points(
    embedding: &Matrix<f64>,
    source_labels: &[usize],
    predictions: &[usize],
    truth: Option<&LabelVector>,
) -> Vec<EmbeddingPoint> {
    let ns = source_labels.len();
    let coord = |i: usize, j: usize| if j < embedding.cols() { embedding[(i, j)] } else { 0.0 };
    (0..embedding.rows())
        .map(|i| {
            let (domain, index, label, truth) = if i < ns {
                ("source", i, source_labels[i], None)
            } else {
                let j = i - ns;
                ("target", j, predictions[j], truth.map(|t| t.labels()[j]))
            };
            EmbeddingPoint {
                domain,
                index,
                label,
                truth,
                x: coord(i, 0),
                y: coord(i, 1),
            }
        })
        .collect()
}

fn check_truth(truth: Option<&LabelVector>, n_target: usize) -> Result<()> {
    match truth {
        Some(t) if t.len() != n_target => Err(CdemError::Data(format!(
            "{} target labels for {n_target} target samples",
            t.len()
        ))),
        _ => Ok(()),
    }
}

/// Nearest source prototype in the preprocessed space, no adaptation.
pub fn run_baseline_source_only(
    task: &str,
    pair: &DomainPair<f64>,
    truth: Option<&LabelVector>,
    config: &ExperimentConfig,
) -> Result<TaskResult> {
    check_truth(truth, pair.n_target())?;
    let start = Instant::now();
    let (z, _) = preprocess_pair(pair, config)?;
    let ns = pair.n_source();
    let source_labels = pair.source_labels().labels();
    let protos = fit_prototypes(&z.slice_rows(0, ns), source_labels, pair.classes())?;
    let predictions = protos.classify(&z.slice_rows(ns, z.rows()));
    Ok(TaskResult {
        task: task.to_string(),
        method: SOURCE_ONLY.into(),
        accuracy: truth.map(|t| accuracy_percent(&predictions, t.labels())),
        embedding: embedding_points(&z, source_labels, &predictions, truth),
        predictions,
        iterations: Vec::new(),
        wall_time: start.elapsed(),
    })
}

/// Full CDEM run with the components in `config`.
pub fn run_method(
    task: &str,
    pair: &DomainPair<f64>,
    truth: Option<&LabelVector>,
    config: &ExperimentConfig,
) -> Result<TaskResult> {
    check_truth(truth, pair.n_target())?;
    let start = Instant::now();
    let mut result = run_cdem(pair, config)?;
    let accuracy = match truth {
        Some(t) => Some(result.evaluate(t)?),
        None => None,
    };
    Ok(TaskResult {
        task: task.to_string(),
        method: config.components.label(),
        accuracy,
        embedding: embedding_points(
            &result.embedding,
            pair.source_labels().labels(),
            &result.predictions,
            truth,
        ),
        predictions: result.predictions,
        iterations: result.iterations,
        wall_time: start.elapsed(),
    })
}

/// ERM, ERM+DA, ERM+DA+CDE and the full objective, in that order.
pub fn run_ablation_suite(
    task: &str,
    pair: &DomainPair<f64>,
    truth: Option<&LabelVector>,
    config: &ExperimentConfig,
) -> Result<Vec<TaskResult>> {
    ABLATIONS
        .iter()
        .map(|&components| {
            let cfg = ExperimentConfig {
                components,
                ..config.clone()
            };
            run_method(task, pair, truth, &cfg)
        })
        .collect()
}

/// Thread cap from `CDEM_THREADS` (unset or invalid → rayon's default).
pub fn thread_limit() -> Option<usize> {
    std::env::var("CDEM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs `jobs` in parallel on a pool capped by `CDEM_THREADS`; results keep
/// the input order.
pub fn run_parallel<J, R, F>(jobs: Vec<J>, f: F) -> Result<Vec<R>>
where
    J: Send,
    R: Send,
    F: Fn(J) -> Result<R> + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_limit() {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CdemError::Internal(format!("thread pool: {e}")))?;
    pool.install(|| jobs.into_par_iter().map(&f).collect())
}

/// Baseline, ablation or single-method runs for every loaded task.
pub fn run_suite(
    tasks: &[LoadedTask],
    configs: &[ExperimentConfig],
    baseline: bool,
) -> Result<Vec<TaskResult>> {
    let mut jobs: Vec<(&LoadedTask, Option<&ExperimentConfig>)> = Vec::new();
    for task in tasks {
        if baseline {
            jobs.push((task, None));
        }
        for cfg in configs {
            jobs.push((task, Some(cfg)));
        }
    }
    let base = configs.first().cloned().unwrap_or_default();
    run_parallel(jobs, |(task, cfg)| match cfg {
        None => run_baseline_source_only(&task.name, &task.pair, task.target_labels.as_ref(), &base),
        Some(cfg) => run_method(&task.name, &task.pair, task.target_labels.as_ref(), cfg),
    })
}

/// One cell of a hyperparameter grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub params: Vec<(String, f64)>,
    pub accuracy: f64,
}

fn set_param(config: &mut ExperimentConfig, name: &str, value: f64) -> Result<()> {
    match name {
        "beta" => config.beta = value,
        "lambda" => config.lambda = value,
        "gamma" => config.gamma = value,
        "eta" => config.eta = value,
        "delta" => config.delta = value,
        other => {
            return Err(CdemError::Config(format!(
                "cannot sweep {other:?} (expected beta, lambda, gamma, eta, delta)"
            )))
        }
    }
    Ok(())
}

/// Cartesian sweep of the named parameters over [`GRID`], scored by target
/// accuracy (requires evaluation labels). Points come back in sweep order.
pub fn grid_search(task: &LoadedTask, config: &ExperimentConfig, params: &[String]) -> Result<Vec<GridPoint>> {
    let truth = task
        .target_labels
        .as_ref()
        .ok_or_else(|| CdemError::Config("grid search needs target_labels for scoring".into()))?;
    if params.is_empty() {
        return Err(CdemError::Config("no parameters to sweep".into()));
    }
    let mut probe = config.clone();
    for p in params {
        set_param(&mut probe, p, 1.0)?;
    }
    let mut cells: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in params {
        cells = cells
            .into_iter()
            .flat_map(|prefix| {
                GRID.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    run_parallel(cells, |values| {
        let mut cfg = config.clone();
        for (name, &v) in params.iter().zip(&values) {
            set_param(&mut cfg, name, v)?;
        }
        let result = run_method(&task.name, &task.pair, Some(truth), &cfg)?;
        Ok(GridPoint {
            params: params.iter().cloned().zip(values).collect(),
            accuracy: result.accuracy.unwrap_or(0.0),
        })
    })
}

/// Highest-accuracy point; ties keep the earliest in sweep order.
pub fn best_point(points: &[GridPoint]) -> Option<&GridPoint> {
    points.iter().fold(None, |best: Option<&GridPoint>, p| match best {
        Some(b) if b.accuracy >= p.accuracy => Some(b),
        _ => Some(p),
    })
}

/// Mean accuracy per method, in order of first appearance. Methods with
/// any unevaluated run are left out.
pub fn method_averages(results: &[TaskResult]) -> Vec<(String, f64, usize)> {
    let mut order: Vec<String> = Vec::new();
    for r in results {
        if !order.contains(&r.method) {
            order.push(r.method.clone());
        }
    }
    order
        .into_iter()
        .filter_map(|m| {
            let accs: Option<Vec<f64>> = results
                .iter()
                .filter(|r| r.method == m)
                .map(|r| r.accuracy)
                .collect();
            let accs = accs?;
            let mean = accs.iter().sum::<f64>() / accs.len() as f64;
            Some((m, mean, accs.len()))
        })
        .collect()
}

/// `task,method,accuracy` rows (one decimal), followed by an `average` row
/// for every method that covers more than one task.
pub fn format_csv_report(results: &[TaskResult]) -> String {
    let mut out = String::from("task,method,accuracy\n");
    let fmt = |a: Option<f64>| a.map_or(String::new(), |a| format!("{a:.1}"));
    for r in results {
        let _ = writeln!(out, "{},{},{}", r.task, r.method, fmt(r.accuracy));
    }
    for (method, mean, count) in method_averages(results) {
        if count > 1 {
            let _ = writeln!(out, "average,{method},{}", fmt(Some(mean)));
        }
    }
    out
}

#[derive(Serialize)]
struct JsonReport<'a> {
    results: &'a [TaskResult],
    averages: Vec<JsonAverage>,
}

#[derive(Serialize)]
struct JsonAverage {
    method: String,
    accuracy: f64,
    tasks: usize,
}

pub fn format_json_report(results: &[TaskResult]) -> Result<String> {
    let report = JsonReport {
        results,
        averages: method_averages(results)
            .into_iter()
            .map(|(method, accuracy, tasks)| JsonAverage {
                method,
                accuracy,
                tasks,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&report)
        .map_err(|e| CdemError::Internal(format!("serialising report: {e}")))
}

pub fn format_embedding(points: &[EmbeddingPoint]) -> String {
    let mut out = String::from("domain,index,label,truth,x,y\n");
    for p in points {
        let truth = p.truth.map_or(String::new(), |t| t.to_string());
        let _ = writeln!(out, "{},{},{},{},{:?},{:?}", p.domain, p.index, p.label, truth, p.x, p.y);
    }
    out
}

fn file_stem(task: &str, method: &str) -> String {
    format!("{task}_{method}")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CdemError::io(path, e))
}

/// Writes `report.csv`, `report.json` and one `embedding_<task>_<method>.csv`
/// per result into `dir`.
pub fn emit_report(results: &[TaskResult], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CdemError::io(dir, e))?;
    write(&dir.join("report.csv"), &format_csv_report(results))?;
    write(&dir.join("report.json"), &format_json_report(results)?)?;
    for r in results.iter().filter(|r| !r.embedding.is_empty()) {
        let name = format!("embedding_{}.csv", file_stem(&r.task, &r.method));
        write(&dir.join(name), &format_embedding(&r.embedding))?;
    }
    Ok(())
}

pub fn format_grid(points: &[GridPoint]) -> String {
    let mut out = String::new();
    if let Some(first) = points.first() {
        let names: Vec<&str> = first.params.iter().map(|(n, _)| n.as_str()).collect();
        let _ = writeln!(out, "{},accuracy", names.join(","));
    }
    for p in points {
        let values: Vec<String> = p.params.iter().map(|(_, v)| format!("{v}")).collect();
        let _ = writeln!(out, "{},{:.1}", values.join(","), p.accuracy);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(task: &str, method: &str, acc: Option<f64>) -> TaskResult {
        TaskResult {
            task: task.into(),
            method: method.into(),
            accuracy: acc,
            predictions: Vec::new(),
            iterations: Vec::new(),
            embedding: Vec::new(),
            wall_time: Duration::ZERO,
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(format_csv_report(&[]), "task,method,accuracy\n");
    }

    #[test]
    fn single_result_single_row() {
        let csv = format_csv_report(&[result("C-A", "erm", Some(93.456))]);
        assert_eq!(csv, "task,method,accuracy\nC-A,erm,93.5\n");
    }

    #[test]
    fn average_row_per_method() {
        let rs = [
            result("C-A", "x", Some(90.0)),
            result("A-C", "x", Some(95.0)),
            result("C-A", "y", Some(50.0)),
        ];
        let csv = format_csv_report(&rs);
        assert!(csv.ends_with("average,x,92.5\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn best_point_prefers_first_on_ties() {
        let pts = [
            GridPoint { params: vec![("beta".into(), 0.1)], accuracy: 80.0 },
            GridPoint { params: vec![("beta".into(), 1.0)], accuracy: 90.0 },
            GridPoint { params: vec![("beta".into(), 10.0)], accuracy: 90.0 },
        ];
        assert_eq!(best_point(&pts).unwrap().params[0].1, 1.0);
    }

    #[test]
    fn unknown_grid_parameter_rejected() {
        let mut cfg = ExperimentConfig::default();
        assert!(set_param(&mut cfg, "alpha", 1.0).is_err());
        set_param(&mut cfg, "gamma", 10.0).unwrap();
        assert_eq!(cfg.gamma, 10.0);
    }
}
