//! Per-task normalisation, the absolute metric, evaluation matrices and
//! per-interval series.
//!
//! Values of lower-is-better metrics are oriented through
//! [`MetricDescriptor::orient`] before any bound or statistic is computed, so
//! everything downstream reads "higher is better".

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::model::{
    AbsoluteRecord, CiMethod, ConfidenceInterval, EvalMatrix, ExperimentLog, IntervalRecord,
    MetricDescriptor, RunMap, RunRecord, TaskId,
};

/// Which samples define a task's min/max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Absolute-metric means of every run of every algorithm.
    AbsoluteOnly,
    /// Per-interval means of every run of every algorithm.
    IntervalsOnly,
    /// Union of the two.
    #[default]
    Global,
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute_only" | "absolute" => Ok(Pooling::AbsoluteOnly),
            "intervals_only" | "intervals" => Ok(Pooling::IntervalsOnly),
            "global" => Ok(Pooling::Global),
            other => Err(Error::InvalidArgument(format!(
                "unknown pooling `{other}` (expected absolute_only, intervals_only or global)"
            ))),
        }
    }
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pooling::AbsoluteOnly => "absolute_only",
            Pooling::IntervalsOnly => "intervals_only",
            Pooling::Global => "global",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskBounds {
    pub env: String,
    pub task: String,
    pub metric: String,
    pub min: f64,
    pub max: f64,
    pub pooling: Pooling,
    pub sample_count: usize,
}

impl TaskBounds {
    pub fn new(
        task: &TaskId,
        metric: impl Into<String>,
        min: f64,
        max: f64,
        pooling: Pooling,
        sample_count: usize,
    ) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() || min > max {
            return Err(Error::invariant("$.min", format!("bounds ({min}, {max}) are not ordered")));
        }
        if sample_count == 0 {
            return Err(Error::invariant("$.sample_count", "must be at least 1"));
        }
        Ok(Self {
            env: task.env.clone(),
            task: task.task.clone(),
            metric: metric.into(),
            min,
            max,
            pooling,
            sample_count,
        })
    }

    pub fn is_degenerate(&self) -> bool {
        self.min == self.max
    }
}

/// Something noteworthy that happened while normalising.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormaliseWarning {
    Clamped { task: String, value: f64, min: f64, max: f64 },
    DegenerateBounds { task: String, value: f64 },
}

impl fmt::Display for NormaliseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormaliseWarning::Clamped { task, value, min, max } => {
                write!(f, "{task}: value {value} outside bounds ({min}, {max}), clamped")
            }
            NormaliseWarning::DegenerateBounds { task, value } => {
                write!(f, "{task}: min = max = {value}, normalised to 0")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalised {
    pub value: f64,
    pub clamped: bool,
    pub degenerate: bool,
}

pub fn run_interval_mean(record: &IntervalRecord, metric: &str) -> Result<f64> {
    let episodes = record
        .metric(metric)
        .ok_or_else(|| Error::UnknownMetric(metric.to_string()))?;
    Ok(episodes.iter().sum::<f64>() / episodes.len() as f64)
}

fn absolute_mean(absolute: &AbsoluteRecord, metric: &str) -> Result<f64> {
    let episodes = absolute
        .metric(metric)
        .ok_or_else(|| Error::UnknownMetric(metric.to_string()))?;
    Ok(episodes.iter().sum::<f64>() / episodes.len() as f64)
}

/// Mean of the absolute-metric episodes (best policy after training).
pub fn absolute_return(run: &RunRecord, metric: &str) -> Result<f64> {
    let absolute = run
        .absolute()
        .ok_or_else(|| Error::MissingAbsolute("run has no absolute block".into()))?;
    absolute_mean(absolute, metric)
}

fn task_algorithms<'a>(log: &'a ExperimentLog, task: &TaskId) -> Result<&'a crate::model::AlgorithmMap> {
    log.task_algorithms(&task.env, &task.task)
        .ok_or_else(|| Error::UnknownTask(task.to_string()))
}

/// Min/max of the selected pool of (oriented) values on one task, across all
/// algorithms.
pub fn task_score_bounds(
    log: &ExperimentLog,
    env: &str,
    task: &str,
    metric: &str,
    pooling: Pooling,
) -> Result<TaskBounds> {
    let id = TaskId::new(env, task);
    let descriptor = log.descriptor_or_default(metric);
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut count = 0usize;
    let mut push = |v: f64| {
        let v = descriptor.orient(v);
        min = min.min(v);
        max = max.max(v);
        count += 1;
    };
    for runs in task_algorithms(log, &id)?.values() {
        for run in runs.values() {
            if pooling != Pooling::AbsoluteOnly {
                for interval in run.intervals() {
                    if interval.metric(metric).is_some() {
                        push(run_interval_mean(interval, metric)?);
                    }
                }
            }
            if pooling != Pooling::IntervalsOnly {
                if let Some(abs) = run.absolute() {
                    if abs.metric(metric).is_some() {
                        push(absolute_mean(abs, metric)?);
                    }
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyPool(format!("{id} metric `{metric}` pooling {pooling}")));
    }
    TaskBounds::new(&id, metric, min, max, pooling, count)
}

/// `(value - min) / (max - min)`, clamped into `[0, 1]`. Degenerate bounds
/// map every value to 0.
pub fn min_max_normalise(value: f64, bounds: &TaskBounds) -> Normalised {
    if bounds.is_degenerate() {
        return Normalised {
            value: 0.0,
            clamped: false,
            degenerate: true,
        };
    }
    let raw = (value - bounds.min) / (bounds.max - bounds.min);
    let value = raw.clamp(0.0, 1.0);
    Normalised {
        value,
        clamped: value != raw,
        degenerate: false,
    }
}

fn normalise_recording(
    value: f64,
    bounds: &TaskBounds,
    task: &TaskId,
    warnings: &mut Vec<NormaliseWarning>,
) -> f64 {
    let n = min_max_normalise(value, bounds);
    if n.degenerate {
        let w = NormaliseWarning::DegenerateBounds {
            task: task.to_string(),
            value: bounds.min,
        };
        if !warnings.contains(&w) {
            warnings.push(w);
        }
    } else if n.clamped {
        warnings.push(NormaliseWarning::Clamped {
            task: task.to_string(),
            value,
            min: bounds.min,
            max: bounds.max,
        });
    }
    n.value
}

fn unit_recording(value: f64, task: &TaskId, warnings: &mut Vec<NormaliseWarning>) -> f64 {
    let clamped = value.clamp(0.0, 1.0);
    if clamped != value {
        warnings.push(NormaliseWarning::Clamped {
            task: task.to_string(),
            value,
            min: 0.0,
            max: 1.0,
        });
    }
    clamped
}

/// An evaluation matrix together with the warnings raised while building it.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixBuild {
    pub matrix: EvalMatrix,
    pub bounds: Vec<Option<TaskBounds>>,
    pub warnings: Vec<NormaliseWarning>,
}

fn group<'a>(log: &'a ExperimentLog, task: &TaskId, algorithm: &str) -> Result<&'a RunMap> {
    task_algorithms(log, task)?
        .get(algorithm)
        .ok_or_else(|| Error::UnknownAlgorithm(format!("{algorithm} on {task}")))
}

/// Builds the R×M matrix of normalised absolute scores for `algorithm` over
/// every task in the log.
pub fn build_evaluation_matrix(
    log: &ExperimentLog,
    algorithm: &str,
    metric: &str,
    pooling: Pooling,
    descriptor: &MetricDescriptor,
) -> Result<MatrixBuild> {
    build_evaluation_matrix_for(log, &log.tasks(), algorithm, metric, pooling, descriptor)
}

/// As [`build_evaluation_matrix`] over an explicit task list.
pub fn build_evaluation_matrix_for(
    log: &ExperimentLog,
    tasks: &[TaskId],
    algorithm: &str,
    metric: &str,
    pooling: Pooling,
    descriptor: &MetricDescriptor,
) -> Result<MatrixBuild> {
    if tasks.is_empty() {
        return Err(Error::EmptyInput("no tasks selected".into()));
    }
    let mut columns = Vec::with_capacity(tasks.len());
    let mut all_bounds = Vec::with_capacity(tasks.len());
    let mut warnings = Vec::new();
    let mut expected_runs: Option<(usize, &TaskId)> = None;

    for task in tasks {
        let runs = group(log, task, algorithm)?;
        match expected_runs {
            None => expected_runs = Some((runs.len(), task)),
            Some((n, first)) if n != runs.len() => {
                return Err(Error::RaggedRuns(format!(
                    "`{algorithm}` has {n} runs on {first} but {} on {task}",
                    runs.len()
                )))
            }
            Some(_) => {}
        }
        let bounds = if descriptor.unit_interval() {
            None
        } else {
            Some(task_score_bounds(log, &task.env, &task.task, metric, pooling)?)
        };
        let mut column = Vec::with_capacity(runs.len());
        for (run_id, run) in runs {
            let raw = absolute_return(run, metric).map_err(|e| match e {
                Error::MissingAbsolute(_) => {
                    Error::MissingAbsolute(format!("{task}/{algorithm}/{run_id}"))
                }
                other => other,
            })?;
            let oriented = descriptor.orient(raw);
            column.push(match &bounds {
                Some(b) => normalise_recording(oriented, b, task, &mut warnings),
                None => unit_recording(oriented, task, &mut warnings),
            });
        }
        columns.push(column);
        all_bounds.push(bounds);
    }
    let matrix = EvalMatrix::new(algorithm, metric, tasks.to_vec(), columns, true)?;
    Ok(MatrixBuild {
        matrix,
        bounds: all_bounds,
        warnings,
    })
}

/// Normalised per-run interval means of one algorithm on one task:
/// `(step grid, per-run series)`, runs in id order.
pub fn normalised_interval_means(
    log: &ExperimentLog,
    task: &TaskId,
    algorithm: &str,
    metric: &str,
    pooling: Pooling,
    descriptor: &MetricDescriptor,
    warnings: &mut Vec<NormaliseWarning>,
) -> Result<(Vec<u64>, Vec<Vec<f64>>)> {
    let runs = group(log, task, algorithm)?;
    let bounds = if descriptor.unit_interval() {
        None
    } else {
        Some(task_score_bounds(log, &task.env, &task.task, metric, pooling)?)
    };
    let grid = runs.values().next().map(RunRecord::step_grid).unwrap_or_default();
    let mut series = Vec::with_capacity(runs.len());
    for run in runs.values() {
        let mut values = Vec::with_capacity(grid.len());
        for interval in run.intervals() {
            let oriented = descriptor.orient(run_interval_mean(interval, metric)?);
            values.push(match &bounds {
                Some(b) => normalise_recording(oriented, b, task, warnings),
                None => unit_recording(oriented, task, warnings),
            });
        }
        series.push(values);
    }
    Ok((grid, series))
}

/// Statistic reduced across runs at each interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesStatistic {
    Mean,
    Iqm,
}

/// Interval construction for per-interval series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeriesInterval {
    #[default]
    Normal,
    StudentT,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub step_count: u64,
    pub estimate: f64,
    pub ci: ConfidenceInterval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub algorithm: String,
    pub env: String,
    pub task: String,
    pub metric: String,
    pub statistic: SeriesStatistic,
    pub points: Vec<SeriesPoint>,
}

/// Two-sided critical value at `level`.
pub fn critical_value(level: f64, interval: SeriesInterval, runs: usize) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("ci level {level} must lie in (0, 1)")));
    }
    let q = 1.0 - (1.0 - level) / 2.0;
    Ok(match interval {
        SeriesInterval::Normal => Normal::standard().inverse_cdf(q),
        SeriesInterval::StudentT => {
            let dof = runs.saturating_sub(1).max(1) as f64;
            StudentsT::new(0.0, 1.0, dof)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
                .inverse_cdf(q)
        }
    })
}

/// Mean with a normal (or Student-t) interval across runs.
pub fn mean_interval(values: &[f64], level: f64, interval: SeriesInterval) -> Result<(f64, ConfidenceInterval)> {
    if values.is_empty() {
        return Err(Error::EmptyInput("no runs".into()));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Ok((mean, ConfidenceInterval::degenerate(mean, level)));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let half = critical_value(level, interval, n)? * var.sqrt() / (n as f64).sqrt();
    let method = match interval {
        SeriesInterval::Normal => CiMethod::Normal,
        SeriesInterval::StudentT => CiMethod::StudentT,
    };
    Ok((mean, ConfidenceInterval::new(mean - half, mean + half, level, method)?))
}

/// Per-interval mean return of one algorithm on one task, with a confidence
/// interval over runs at each step.
pub fn per_task_interval_series(
    log: &ExperimentLog,
    algorithm: &str,
    env: &str,
    task: &str,
    metric: &str,
    ci_level: f64,
    interval: SeriesInterval,
) -> Result<MetricSeries> {
    let id = TaskId::new(env, task);
    let runs = group(log, &id, algorithm)?;
    let descriptor = log.descriptor_or_default(metric);
    let grid = runs.values().next().map(RunRecord::step_grid).unwrap_or_default();
    let mut points = Vec::with_capacity(grid.len());
    for (i, &step) in grid.iter().enumerate() {
        let per_run = runs
            .values()
            .map(|run| run_interval_mean(&run.intervals()[i], metric).map(|v| descriptor.orient(v)))
            .collect::<Result<Vec<_>>>()?;
        let (estimate, ci) = mean_interval(&per_run, ci_level, interval)?;
        points.push(SeriesPoint {
            step_count: step,
            estimate,
            ci,
        });
    }
    Ok(MetricSeries {
        algorithm: algorithm.to_string(),
        env: env.to_string(),
        task: task.to_string(),
        metric: metric.to_string(),
        statistic: SeriesStatistic::Mean,
        points,
    })
}
