//! Canonical data model shared by every other module.
//!
//! All types validate their invariants on construction and are immutable
//! afterwards; fields are only reachable through accessors. Errors carry a
//! JSON-path-like location so that ingest can report exactly where a
//! document went wrong.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the metric every log must carry.
pub const RETURN_METRIC: &str = "return";

pub type RunMap = BTreeMap<String, RunRecord>;
pub type AlgorithmMap = BTreeMap<String, RunMap>;
pub type TaskMap = BTreeMap<String, AlgorithmMap>;
pub type EnvironmentMap = BTreeMap<String, TaskMap>;

/// Appends a child segment to a JSON path, quoting keys that are not plain
/// identifiers.
pub(crate) fn child_path(parent: &str, key: &str) -> String {
    let plain = !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !key.starts_with(|c: char| c.is_ascii_digit());
    if plain {
        format!("{parent}.{key}")
    } else {
        format!("{parent}[{key:?}]")
    }
}

pub(crate) fn index_path(parent: &str, index: usize) -> String {
    format!("{parent}[{index}]")
}

fn check_episodes(path: &str, name: &str, values: &[f64]) -> Result<()> {
    let path = child_path(path, name);
    if values.is_empty() {
        return Err(Error::invariant(path, "metric list must be non-empty"));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invariant(
            index_path(&path, i),
            "values must be finite (NaN and infinities are rejected)",
        ));
    }
    Ok(())
}

/// Describes how a metric is scored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetricDescriptor {
    name: String,
    unit_interval: bool,
    higher_is_better: bool,
}

impl MetricDescriptor {
    pub fn new(name: impl Into<String>, unit_interval: bool, higher_is_better: bool) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::invariant("$.name", "metric name must be non-empty"));
        }
        Ok(Self {
            name,
            unit_interval,
            higher_is_better,
        })
    }

    /// The episode return: unbounded, higher is better.
    pub fn episode_return() -> Self {
        Self {
            name: RETURN_METRIC.to_string(),
            unit_interval: false,
            higher_is_better: true,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn unit_interval(&self) -> bool {
        self.unit_interval
    }

    pub fn higher_is_better(&self) -> bool {
        self.higher_is_better
    }

    /// Maps a raw value onto the higher-is-better orientation used by every
    /// statistic. Unbounded metrics are negated; unit-interval metrics are
    /// reflected as `1 - x` so they stay inside `[0, 1]`.
    pub fn orient(&self, value: f64) -> f64 {
        match (self.higher_is_better, self.unit_interval) {
            (true, _) => value,
            (false, false) => -value,
            (false, true) => 1.0 - value,
        }
    }
}

/// Per-episode metric values recorded at one evaluation interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRecord {
    step_count: u64,
    metrics: BTreeMap<String, Vec<f64>>,
}

impl IntervalRecord {
    pub fn new(step_count: u64, metrics: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        let path = "$.metrics";
        let mut episodes: Option<(&str, usize)> = None;
        for (name, values) in &metrics {
            check_episodes(path, name, values)?;
            match episodes {
                None => episodes = Some((name, values.len())),
                Some((first, n)) if n != values.len() => {
                    return Err(Error::invariant(
                        child_path(path, name),
                        format!(
                            "all metric lists at one interval must have equal length \
                             ({} has {n}, {name} has {})",
                            first,
                            values.len()
                        ),
                    ))
                }
                Some(_) => {}
            }
        }
        if !metrics.contains_key(RETURN_METRIC) {
            return Err(Error::invariant(
                path,
                "every interval must carry the metric \"return\"",
            ));
        }
        Ok(Self {
            step_count,
            metrics,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn metrics(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.metrics
    }

    pub fn metric(&self, name: &str) -> Option<&[f64]> {
        self.metrics.get(name).map(Vec::as_slice)
    }

    /// Episode count at this interval (every metric list has the same length).
    pub fn episode_count(&self) -> usize {
        self.metrics.values().next().map_or(0, Vec::len)
    }
}

/// Episodes of the best policy, evaluated after training.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsoluteRecord {
    metrics: BTreeMap<String, Vec<f64>>,
}

impl AbsoluteRecord {
    pub fn new(metrics: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        let path = "$.metrics";
        for (name, values) in &metrics {
            check_episodes(path, name, values)?;
        }
        if !metrics.contains_key(RETURN_METRIC) {
            return Err(Error::invariant(
                path,
                "absolute block must carry the metric \"return\"",
            ));
        }
        Ok(Self { metrics })
    }

    pub fn metrics(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.metrics
    }

    pub fn metric(&self, name: &str) -> Option<&[f64]> {
        self.metrics.get(name).map(Vec::as_slice)
    }
}

/// One independent training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    intervals: Vec<IntervalRecord>,
    absolute: Option<AbsoluteRecord>,
}

impl RunRecord {
    pub fn new(intervals: Vec<IntervalRecord>, absolute: Option<AbsoluteRecord>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::invariant(
                "$.intervals",
                "a run must contain at least one interval",
            ));
        }
        for (i, pair) in intervals.windows(2).enumerate() {
            if pair[1].step_count <= pair[0].step_count {
                return Err(Error::invariant(
                    index_path("$.intervals", i + 1),
                    format!(
                        "step_count must be strictly increasing ({} follows {})",
                        pair[1].step_count, pair[0].step_count
                    ),
                ));
            }
        }
        Ok(Self {
            intervals,
            absolute,
        })
    }

    pub fn intervals(&self) -> &[IntervalRecord] {
        &self.intervals
    }

    pub fn absolute(&self) -> Option<&AbsoluteRecord> {
        self.absolute.as_ref()
    }

    pub fn step_grid(&self) -> Vec<u64> {
        self.intervals.iter().map(|i| i.step_count).collect()
    }

    pub fn final_step(&self) -> u64 {
        self.intervals.last().map_or(0, |i| i.step_count)
    }

    pub fn into_parts(self) -> (Vec<IntervalRecord>, Option<AbsoluteRecord>) {
        (self.intervals, self.absolute)
    }
}

/// Identifies a task within an environment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskId {
    pub env: String,
    pub task: String,
}

impl TaskId {
    pub fn new(env: impl Into<String>, task: impl Into<String>) -> Self {
        Self {
            env: env.into(),
            task: task.into(),
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.env, self.task)
    }
}

/// The full nested record of an experiment.
///
/// Runs are grouped as environment → task → algorithm → run id. Within one
/// group every run shares the same step grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentLog {
    metrics: Vec<MetricDescriptor>,
    environments: EnvironmentMap,
    metadata: BTreeMap<String, String>,
}

impl ExperimentLog {
    pub fn new(
        metrics: Vec<MetricDescriptor>,
        environments: EnvironmentMap,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (i, m) in metrics.iter().enumerate() {
            if !seen.insert(m.name()) {
                return Err(Error::invariant(
                    index_path("$.metrics", i),
                    format!("metric `{}` declared twice", m.name()),
                ));
            }
        }
        if environments.is_empty() {
            return Err(Error::invariant(
                "$.environments",
                "at least one environment is required",
            ));
        }
        for (env, tasks) in &environments {
            let env_path = child_path("$.environments", env);
            if tasks.is_empty() {
                return Err(Error::invariant(env_path, "environment has no tasks"));
            }
            for (task, algorithms) in tasks {
                let task_path = child_path(&env_path, task);
                if algorithms.is_empty() {
                    return Err(Error::invariant(task_path, "task has no algorithms"));
                }
                for (algorithm, runs) in algorithms {
                    let group_path = child_path(&task_path, algorithm);
                    let mut runs_iter = runs.iter();
                    let Some((first_id, first)) = runs_iter.next() else {
                        return Err(Error::invariant(group_path, "group has no runs"));
                    };
                    let grid = first.step_grid();
                    for (run_id, run) in runs_iter {
                        if run.step_grid() != grid {
                            return Err(Error::invariant(
                                child_path(&group_path, run_id),
                                format!(
                                    "runs share an identical ordered sequence of step_count \
                                     values (run `{run_id}` differs from run `{first_id}`)"
                                ),
                            ));
                        }
                    }
                }
            }
        }
        Ok(Self {
            metrics,
            environments,
            metadata,
        })
    }

    pub fn metrics(&self) -> &[MetricDescriptor] {
        &self.metrics
    }

    pub fn environments(&self) -> &EnvironmentMap {
        &self.environments
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn descriptor(&self, metric: &str) -> Option<&MetricDescriptor> {
        self.metrics.iter().find(|m| m.name() == metric)
    }

    /// Declared descriptor, falling back to an unbounded higher-is-better
    /// descriptor for undeclared metrics.
    pub fn descriptor_or_default(&self, metric: &str) -> MetricDescriptor {
        self.descriptor(metric).cloned().unwrap_or(MetricDescriptor {
            name: metric.to_string(),
            unit_interval: false,
            higher_is_better: true,
        })
    }

    pub fn group(&self, env: &str, task: &str, algorithm: &str) -> Option<&RunMap> {
        self.environments.get(env)?.get(task)?.get(algorithm)
    }

    pub fn task_algorithms(&self, env: &str, task: &str) -> Option<&AlgorithmMap> {
        self.environments.get(env)?.get(task)
    }

    /// All (env, task) pairs in canonical order.
    pub fn tasks(&self) -> Vec<TaskId> {
        self.environments
            .iter()
            .flat_map(|(env, tasks)| tasks.keys().map(move |t| TaskId::new(env.clone(), t.clone())))
            .collect()
    }

    /// Tasks on which `algorithm` has runs.
    pub fn tasks_for(&self, algorithm: &str) -> Vec<TaskId> {
        self.environments
            .iter()
            .flat_map(|(env, tasks)| {
                tasks
                    .iter()
                    .filter(|(_, algs)| algs.contains_key(algorithm))
                    .map(move |(t, _)| TaskId::new(env.clone(), t.clone()))
            })
            .collect()
    }

    pub fn algorithms(&self) -> BTreeSet<String> {
        self.groups().map(|(_, _, alg, _)| alg.to_string()).collect()
    }

    /// Iterates every (env, task, algorithm, runs) group.
    pub fn groups(&self) -> impl Iterator<Item = (&str, &str, &str, &RunMap)> {
        self.environments.iter().flat_map(|(env, tasks)| {
            tasks.iter().flat_map(move |(task, algs)| {
                algs.iter()
                    .map(move |(alg, runs)| (env.as_str(), task.as_str(), alg.as_str(), runs))
            })
        })
    }

    pub fn into_parts(
        self,
    ) -> (
        Vec<MetricDescriptor>,
        EnvironmentMap,
        BTreeMap<String, String>,
    ) {
        (self.metrics, self.environments, self.metadata)
    }
}

/// Confidence interval construction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Normal,
    StudentT,
    StratifiedBootstrap,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    lower: f64,
    upper: f64,
    level: f64,
    method: CiMethod,
}

impl ConfidenceInterval {
    pub fn new(lower: f64, upper: f64, level: f64, method: CiMethod) -> Result<Self> {
        if lower.partial_cmp(&upper).is_none_or(|o| o == std::cmp::Ordering::Greater) {
            return Err(Error::invariant(
                "$.lower",
                format!("lower bound {lower} exceeds upper bound {upper}"),
            ));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::invariant(
                "$.level",
                format!("level {level} must lie in (0, 1)"),
            ));
        }
        Ok(Self {
            lower,
            upper,
            level,
            method,
        })
    }

    /// Zero-width interval at `value`.
    pub fn degenerate(value: f64, level: f64) -> Self {
        Self {
            lower: value,
            upper: value,
            level,
            method: CiMethod::Degenerate,
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn method(&self) -> CiMethod {
        self.method
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// R×M matrix of per-run, per-task scores for one algorithm and metric.
///
/// Stored column-major: `columns[t][r]` is run `r` on task `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalMatrix {
    algorithm: String,
    metric: String,
    tasks: Vec<TaskId>,
    columns: Vec<Vec<f64>>,
    normalised: bool,
}

/// Tolerance for the `[0, 1]` range check on normalised matrices.
pub const UNIT_TOLERANCE: f64 = 1e-9;

impl EvalMatrix {
    pub fn new(
        algorithm: impl Into<String>,
        metric: impl Into<String>,
        tasks: Vec<TaskId>,
        columns: Vec<Vec<f64>>,
        normalised: bool,
    ) -> Result<Self> {
        if tasks.len() != columns.len() {
            return Err(Error::invariant(
                "$.tasks",
                format!("{} tasks listed for {} columns", tasks.len(), columns.len()),
            ));
        }
        let runs = columns.first().map_or(0, Vec::len);
        for (t, column) in columns.iter().enumerate() {
            let path = index_path("$.values", t);
            if column.len() != runs {
                return Err(Error::invariant(
                    path,
                    format!("matrix must be rectangular ({} rows, expected {runs})", column.len()),
                ));
            }
            for (r, &v) in column.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::invariant(index_path(&path, r), "entries must be finite"));
                }
                if normalised && !(-UNIT_TOLERANCE..=1.0 + UNIT_TOLERANCE).contains(&v) {
                    return Err(Error::invariant(
                        index_path(&path, r),
                        format!("normalised entry {v} outside [0, 1]"),
                    ));
                }
            }
        }
        Ok(Self {
            algorithm: algorithm.into(),
            metric: metric.into(),
            tasks,
            columns,
            normalised,
        })
    }

    /// Builds a matrix from row-major data (`rows[r][t]`).
    pub fn from_rows(
        algorithm: impl Into<String>,
        metric: impl Into<String>,
        tasks: Vec<TaskId>,
        rows: &[Vec<f64>],
        normalised: bool,
    ) -> Result<Self> {
        let width = tasks.len();
        if let Some(r) = rows.iter().position(|row| row.len() != width) {
            return Err(Error::invariant(
                index_path("$.values", r),
                format!("row has {} entries, expected {width}", rows[r].len()),
            ));
        }
        let columns = (0..width)
            .map(|t| rows.iter().map(|row| row[t]).collect())
            .collect();
        Self::new(algorithm, metric, tasks, columns, normalised)
    }

    pub fn algorithm(&self) -> &str {
        &self.algorithm
    }

    pub fn metric(&self) -> &str {
        &self.metric
    }

    pub fn tasks(&self) -> &[TaskId] {
        &self.tasks
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, task: usize) -> &[f64] {
        &self.columns[task]
    }

    pub fn normalised(&self) -> bool {
        self.normalised
    }

    /// Number of runs R.
    pub fn runs(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    /// Number of tasks M.
    pub fn task_count(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, run: usize, task: usize) -> f64 {
        self.columns[task][run]
    }

    pub fn is_empty(&self) -> bool {
        self.runs() == 0 || self.task_count() == 0
    }

    /// All R×M entries, column by column.
    pub fn pooled(&self) -> Vec<f64> {
        self.columns.iter().flatten().copied().collect()
    }
}

fn default_timesteps_off_policy() -> u64 {
    2_000_000
}
fn default_timesteps_on_policy() -> u64 {
    20_000_000
}
fn default_runs() -> usize {
    10
}
fn default_eval_episodes() -> usize {
    32
}
fn default_eval_interval() -> u64 {
    10_000
}
fn default_absolute_episodes() -> usize {
    320
}
fn default_ci_level() -> f64 {
    0.95
}
fn default_bootstrap_replicates() -> usize {
    2000
}
fn default_gamma() -> f64 {
    1.0
}
fn default_seed() -> u64 {
    42
}

/// Evaluation protocol parameters. Defaults are the standard protocol values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(default = "default_timesteps_off_policy")]
    pub timesteps_off_policy: u64,
    #[serde(default = "default_timesteps_on_policy")]
    pub timesteps_on_policy: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    #[serde(default = "default_eval_interval")]
    pub eval_interval: u64,
    #[serde(default = "default_absolute_episodes")]
    pub absolute_episodes: usize,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
    #[serde(default = "default_bootstrap_replicates")]
    pub bootstrap_replicates: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            timesteps_off_policy: default_timesteps_off_policy(),
            timesteps_on_policy: default_timesteps_on_policy(),
            runs: default_runs(),
            eval_episodes: default_eval_episodes(),
            eval_interval: default_eval_interval(),
            absolute_episodes: default_absolute_episodes(),
            ci_level: default_ci_level(),
            bootstrap_replicates: default_bootstrap_replicates(),
            gamma: default_gamma(),
            seed: default_seed(),
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("timesteps_off_policy", self.timesteps_off_policy as u128),
            ("timesteps_on_policy", self.timesteps_on_policy as u128),
            ("runs", self.runs as u128),
            ("eval_episodes", self.eval_episodes as u128),
            ("eval_interval", self.eval_interval as u128),
            ("absolute_episodes", self.absolute_episodes as u128),
            ("bootstrap_replicates", self.bootstrap_replicates as u128),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::invariant(child_path("$", name), "must be positive"));
            }
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::invariant("$.ci_level", "must lie in (0, 1)"));
        }
        if !self.gamma.is_finite() {
            return Err(Error::invariant("$.gamma", "must be finite"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| Error::schema("$", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn returns(values: &[f64]) -> BTreeMap<String, Vec<f64>> {
        BTreeMap::from([(RETURN_METRIC.to_string(), values.to_vec())])
    }

    #[test]
    fn protocol_defaults() {
        let c = ProtocolConfig::default();
        assert_eq!(c.timesteps_off_policy, 2_000_000);
        assert_eq!(c.timesteps_on_policy, 20_000_000);
        assert_eq!(c.runs, 10);
        assert_eq!(c.eval_episodes, 32);
        assert_eq!(c.eval_interval, 10_000);
        assert_eq!(c.absolute_episodes, 10 * c.eval_episodes);
        assert_eq!(c.ci_level, 0.95);
        c.validate().unwrap();
    }

    #[test]
    fn config_json_fills_defaults() {
        let c = ProtocolConfig::from_json(r#"{"runs": 5}"#).unwrap();
        assert_eq!(c.runs, 5);
        assert_eq!(c.eval_episodes, 32);
        assert!(ProtocolConfig::from_json(r#"{"runs": 0}"#).is_err());
        assert!(ProtocolConfig::from_json(r#"{"ci_level": 1.0}"#).is_err());
        assert!(ProtocolConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn interval_requires_return() {
        let m = BTreeMap::from([("win_rate".to_string(), vec![1.0])]);
        let err = IntervalRecord::new(0, m).unwrap_err();
        assert!(err.to_string().contains("return"), "{err}");
    }

    #[test]
    fn interval_rejects_non_finite_and_ragged() {
        assert!(IntervalRecord::new(0, returns(&[])).is_err());
        assert!(IntervalRecord::new(0, returns(&[1.0, f64::NAN])).is_err());
        assert!(IntervalRecord::new(0, returns(&[f64::INFINITY])).is_err());
        let mut m = returns(&[1.0, 2.0]);
        m.insert("win_rate".into(), vec![1.0]);
        assert!(IntervalRecord::new(0, m).is_err());
    }

    #[test]
    fn run_steps_strictly_increase() {
        let a = IntervalRecord::new(10, returns(&[1.0])).unwrap();
        let b = IntervalRecord::new(10, returns(&[1.0])).unwrap();
        let err = RunRecord::new(vec![a, b], None).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation { ref path, .. } if path == "$.intervals[1]"));
    }

    #[test]
    fn ci_invariants() {
        assert!(ConfidenceInterval::new(1.0, 0.0, 0.95, CiMethod::Normal).is_err());
        assert!(ConfidenceInterval::new(0.0, 1.0, 1.0, CiMethod::Normal).is_err());
        let ci = ConfidenceInterval::degenerate(0.3, 0.95);
        assert_eq!((ci.lower(), ci.upper()), (0.3, 0.3));
        assert_eq!(ci.method(), CiMethod::Degenerate);
    }

    #[test]
    fn matrix_shape_and_range() {
        let tasks = vec![TaskId::new("e", "a"), TaskId::new("e", "b")];
        let ok = EvalMatrix::from_rows("x", "return", tasks.clone(), &[vec![0.0, 1.0], vec![0.5, 0.5]], true)
            .unwrap();
        assert_eq!((ok.runs(), ok.task_count()), (2, 2));
        assert_eq!(ok.get(0, 1), 1.0);
        assert!(EvalMatrix::new("x", "return", tasks.clone(), vec![vec![0.0], vec![0.1, 0.2]], true).is_err());
        assert!(EvalMatrix::from_rows("x", "return", tasks.clone(), &[vec![0.0, 1.5]], true).is_err());
        assert!(EvalMatrix::from_rows("x", "return", tasks, &[vec![0.0, 1.5]], false).is_ok());
    }

    #[test]
    fn orientation() {
        let loss = MetricDescriptor::new("loss", false, false).unwrap();
        assert_eq!(loss.orient(3.0), -3.0);
        let fail_rate = MetricDescriptor::new("fail", true, false).unwrap();
        assert_eq!(fail_rate.orient(0.25), 0.75);
        assert!(MetricDescriptor::new("", false, true).is_err());
    }

    #[test]
    fn child_paths_quote_odd_keys() {
        assert_eq!(child_path("$", "environments"), "$.environments");
        assert_eq!(child_path("$.e", "3m"), "$.e[\"3m\"]");
        assert_eq!(child_path("$.e", "seed 1"), "$.e[\"seed 1\"]");
    }
}
