//! Synthetic experiment logs with known ground truth, and brute-force
//! statistical oracles used for differential testing.
//!
//! The oracles share no code with the production statistics: they sort with
//! a comparison sort, trim by explicit slicing and sum pairwise.

use std::collections::BTreeMap;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AbsoluteRecord, EnvironmentMap, ExperimentLog, IntervalRecord, MetricDescriptor, ProtocolConfig, RunRecord,
    RETURN_METRIC,
};
use crate::resample::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveShape {
    Linear,
    #[default]
    Saturating,
}

impl CurveShape {
    /// Fraction of the final mean reached at training progress `p` in [0, 1].
    pub fn progress(self, p: f64) -> f64 {
        match self {
            CurveShape::Linear => p,
            CurveShape::Saturating => (1.0 - (-5.0 * p).exp()) / (1.0 - (-5.0f64).exp()),
        }
    }
}

/// Normal(mean, std²) episode returns around the final performance level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreModel {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthEnvironment {
    pub name: String,
    pub tasks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthAlgorithm {
    pub name: String,
    /// Model for tasks without an entry in `tasks`.
    pub default: ScoreModel,
    /// Per-task overrides keyed by `env/task` or bare task name.
    #[serde(default)]
    pub tasks: BTreeMap<String, ScoreModel>,
    #[serde(default)]
    pub curve: CurveShape,
}

impl SynthAlgorithm {
    fn model(&self, env: &str, task: &str) -> ScoreModel {
        self.tasks
            .get(&format!("{env}/{task}"))
            .or_else(|| self.tasks.get(task))
            .copied()
            .unwrap_or(self.default)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub environments: Vec<SynthEnvironment>,
    pub algorithms: Vec<SynthAlgorithm>,
    pub runs: usize,
    /// Evaluations at `eval_interval, 2·eval_interval, ..., intervals·eval_interval`.
    pub intervals: usize,
    pub eval_interval: u64,
    pub eval_episodes: usize,
    pub absolute_episodes: usize,
    pub seed: u64,
}

impl SynthSpec {
    /// Two environments with two tasks each and two algorithms, at the
    /// protocol's default run, episode, interval and budget settings.
    pub fn protocol_defaults() -> Self {
        let config = ProtocolConfig::default();
        let model = |mean: f64| ScoreModel { mean, std: 2.0 };
        Self {
            environments: vec![
                SynthEnvironment {
                    name: "env_a".into(),
                    tasks: vec!["task_1".into(), "task_2".into()],
                },
                SynthEnvironment {
                    name: "env_b".into(),
                    tasks: vec!["task_1".into(), "task_2".into()],
                },
            ],
            algorithms: vec![
                SynthAlgorithm {
                    name: "alg_a".into(),
                    default: model(20.0),
                    tasks: BTreeMap::from([("env_b/task_2".to_string(), model(8.0))]),
                    curve: CurveShape::Saturating,
                },
                SynthAlgorithm {
                    name: "alg_b".into(),
                    default: model(15.0),
                    tasks: BTreeMap::new(),
                    curve: CurveShape::Linear,
                },
            ],
            runs: config.runs,
            intervals: (config.timesteps_off_policy / config.eval_interval) as usize,
            eval_interval: config.eval_interval,
            eval_episodes: config.eval_episodes,
            absolute_episodes: config.absolute_episodes,
            seed: config.seed,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("synth spec serialisation")
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("runs", self.runs as u64),
            ("intervals", self.intervals as u64),
            ("eval_interval", self.eval_interval),
            ("eval_episodes", self.eval_episodes as u64),
            ("absolute_episodes", self.absolute_episodes as u64),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::InvalidSpec(format!("{name} must be positive")));
            }
        }
        if self.environments.is_empty() || self.environments.iter().any(|e| e.tasks.is_empty()) {
            return Err(Error::InvalidSpec("every environment needs at least one task".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidSpec("at least one algorithm is required".into()));
        }
        for alg in &self.algorithms {
            for model in std::iter::once(&alg.default).chain(alg.tasks.values()) {
                if !model.std.is_finite() || model.std < 0.0 || !model.mean.is_finite() {
                    return Err(Error::InvalidSpec(format!(
                        "algorithm `{}` has an invalid score model (mean {}, std {})",
                        alg.name, model.mean, model.std
                    )));
                }
            }
        }
        Ok(())
    }
}

fn sample(dist: &Normal<f64>, n: usize, rng: &mut impl rand::Rng) -> Vec<f64> {
    (0..n).map(|_| dist.sample(rng)).collect()
}

fn generate_run(spec: &SynthSpec, env: &str, task: &str, alg: &SynthAlgorithm, run: usize) -> Result<RunRecord> {
    let label = format!("{env}\u{1f}{task}\u{1f}{}", alg.name);
    let mut rng = resample::stream_rng(spec.seed, &label, run as u64, 0, 0);
    let model = alg.model(env, task);
    let normal = |mean: f64| Normal::new(mean, model.std).map_err(|e| Error::InvalidSpec(e.to_string()));
    let mut intervals = Vec::with_capacity(spec.intervals);
    for k in 1..=spec.intervals {
        let progress = alg.curve.progress(k as f64 / spec.intervals as f64);
        let dist = normal(model.mean * progress)?;
        let episodes = sample(&dist, spec.eval_episodes, &mut rng);
        intervals.push(IntervalRecord::new(
            k as u64 * spec.eval_interval,
            BTreeMap::from([(RETURN_METRIC.to_string(), episodes)]),
        )?);
    }
    let absolute = AbsoluteRecord::new(BTreeMap::from([(
        RETURN_METRIC.to_string(),
        sample(&normal(model.mean)?, spec.absolute_episodes, &mut rng),
    )]))?;
    RunRecord::new(intervals, Some(absolute))
}

/// Builds a log satisfying every structural constraint implied by `spec`.
/// Deterministic for a fixed seed, independent of execution mode.
pub fn generate_synthetic_log(spec: &SynthSpec) -> Result<ExperimentLog> {
    generate_synthetic_log_with(spec, Execution::default())
}

pub fn generate_synthetic_log_with(spec: &SynthSpec, execution: Execution) -> Result<ExperimentLog> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for env in &spec.environments {
        for task in &env.tasks {
            for alg in &spec.algorithms {
                for run in 0..spec.runs {
                    jobs.push((env.name.as_str(), task.as_str(), alg, run));
                }
            }
        }
    }
    let runs = resample::map_indices(jobs.len(), execution, |i| {
        let (env, task, alg, run) = jobs[i];
        generate_run(spec, env, task, alg, run)
    });
    let mut environments = EnvironmentMap::new();
    for ((env, task, alg, run), record) in jobs.iter().zip(runs) {
        environments
            .entry(env.to_string())
            .or_default()
            .entry(task.to_string())
            .or_default()
            .entry(alg.name.clone())
            .or_default()
            .insert(format!("seed_{run}"), record?);
    }
    let metadata = BTreeMap::from([
        ("generator".to_string(), "marleval synth".to_string()),
        ("seed".to_string(), spec.seed.to_string()),
    ]);
    ExperimentLog::new(vec![MetricDescriptor::episode_return()], environments, metadata)
}

fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (left, right) = values.split_at(n / 2);
            pairwise_sum(left) + pairwise_sum(right)
        }
    }
}

/// Reference interquartile mean.
pub fn oracle_iqm(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("oracle_iqm needs at least one score".into()));
    }
    let mut ordered = scores.to_vec();
    ordered.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let trim = ordered.len() / 4;
    let kept = ordered[trim..ordered.len() - trim].to_vec();
    Ok(pairwise_sum(&kept) / kept.len() as f64)
}

/// Reference probability of improvement: enumerates every (x, y) pair per
/// task, counts ties as one half and averages tasks with equal weight.
pub fn oracle_probability_of_improvement(x_columns: &[Vec<f64>], y_columns: &[Vec<f64>]) -> Result<f64> {
    if x_columns.len() != y_columns.len() {
        return Err(Error::TaskListMismatch(format!(
            "{} tasks against {}",
            x_columns.len(),
            y_columns.len()
        )));
    }
    if x_columns.is_empty() || x_columns.iter().chain(y_columns).any(Vec::is_empty) {
        return Err(Error::EmptyInput("every task needs at least one run on each side".into()));
    }
    let mut total = 0.0;
    for (xs, ys) in x_columns.iter().zip(y_columns) {
        let mut score = 0.0;
        for &x in xs {
            for &y in ys {
                if x > y {
                    score += 1.0;
                } else if x == y {
                    score += 0.5;
                }
            }
        }
        total += score / (xs.len() * ys.len()) as f64;
    }
    Ok(total / x_columns.len() as f64)
}
