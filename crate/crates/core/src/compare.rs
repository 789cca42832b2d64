//! Algorithm comparison: probability of improvement, performance profiles
//! and sample-efficiency curves.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::aggregate::{self, BootstrapOptions, Statistic};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricSeries, Pooling, SeriesStatistic};
use crate::model::{ConfidenceInterval, EvalMatrix, ExperimentLog, ProtocolConfig};
use crate::resample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    PerformanceProfile,
    SampleEfficiency,
    IntervalSeries,
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveKind::PerformanceProfile => "performance_profile",
            CurveKind::SampleEfficiency => "sample_efficiency",
            CurveKind::IntervalSeries => "interval_series",
        })
    }
}

impl FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "performance_profile" | "profile" => Ok(CurveKind::PerformanceProfile),
            "sample_efficiency" | "efficiency" => Ok(CurveKind::SampleEfficiency),
            "interval_series" | "series" => Ok(CurveKind::IntervalSeries),
            other => Err(Error::InvalidArgument(format!("unknown curve kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub estimate: f64,
    pub ci: ConfidenceInterval,
}

/// A sampled curve with pointwise intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    kind: CurveKind,
    label: String,
    xs: Vec<f64>,
    points: Vec<CurvePoint>,
}

impl ProfileCurve {
    pub fn new(kind: CurveKind, label: impl Into<String>, xs: Vec<f64>, points: Vec<CurvePoint>) -> Result<Self> {
        if xs.len() != points.len() {
            return Err(Error::invariant(
                "$.points",
                format!("{} points for {} grid values", points.len(), xs.len()),
            ));
        }
        if let Some(i) = xs.windows(2).position(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less)) {
            return Err(Error::invariant(
                format!("$.xs[{}]", i + 1),
                "grid must be strictly increasing",
            ));
        }
        if kind == CurveKind::PerformanceProfile {
            if let Some(i) = points.iter().position(|p| !(0.0..=1.0).contains(&p.estimate)) {
                return Err(Error::invariant(format!("$.points[{i}]"), "profile estimate outside [0, 1]"));
            }
            if let Some(i) = points.windows(2).position(|w| w[1].estimate > w[0].estimate) {
                return Err(Error::invariant(
                    format!("$.points[{}]", i + 1),
                    "profile estimates must be non-increasing",
                ));
            }
        }
        Ok(Self {
            kind,
            label: label.into(),
            xs,
            points,
        })
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

impl TryFrom<&MetricSeries> for ProfileCurve {
    type Error = Error;

    fn try_from(series: &MetricSeries) -> Result<Self> {
        let xs = series.points.iter().map(|p| p.step_count as f64).collect();
        let points = series
            .points
            .iter()
            .map(|p| CurvePoint {
                estimate: p.estimate,
                ci: p.ci,
            })
            .collect();
        ProfileCurve::new(
            CurveKind::IntervalSeries,
            format!("{} {}/{}", series.algorithm, series.env, series.task),
            xs,
            points,
        )
    }
}

/// P(candidate run beats baseline run), averaged over tasks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovementScore {
    pub candidate: String,
    pub baseline: String,
    pub probability: f64,
    pub ci: ConfidenceInterval,
}

impl ImprovementScore {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("improvement score serialisation")
    }
}

fn check_same_tasks(x: &EvalMatrix, y: &EvalMatrix) -> Result<()> {
    if x.tasks() != y.tasks() {
        return Err(Error::TaskListMismatch(format!(
            "`{}` and `{}` cover different tasks",
            x.algorithm(),
            y.algorithm()
        )));
    }
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyInput("probability of improvement needs non-empty matrices".into()));
    }
    Ok(())
}

/// Mann–Whitney U / (nx·ny) for one task, ties counted ½. `y_sorted` must be
/// ascending.
fn task_u(x: &[f64], y_sorted: &[f64]) -> f64 {
    let mut wins = 0usize;
    let mut ties = 0usize;
    for &xi in x {
        let below = y_sorted.partition_point(|&yj| yj < xi);
        let not_above = y_sorted.partition_point(|&yj| yj <= xi);
        wins += below;
        ties += not_above - below;
    }
    (wins as f64 + 0.5 * ties as f64) / (x.len() * y_sorted.len()) as f64
}

fn poi_point(x_cols: &[Vec<f64>], y_sorted_cols: &[Vec<f64>]) -> f64 {
    let total: f64 = x_cols
        .iter()
        .zip(y_sorted_cols)
        .map(|(x, y)| task_u(x, y))
        .sum();
    total / x_cols.len() as f64
}

/// Probability of improvement of `x` over `y` with a stratified bootstrap
/// interval; both matrices are resampled independently within each task.
pub fn probability_of_improvement(x: &EvalMatrix, y: &EvalMatrix, options: &BootstrapOptions) -> Result<ImprovementScore> {
    check_same_tasks(x, y)?;
    options.check()?;
    let y_sorted = resample::sorted_columns(y.columns());
    let probability = poi_point(x.columns(), &y_sorted);

    let x_sorted = resample::sorted_columns(x.columns());
    let label = format!("{}\u{1f}{}", x.algorithm(), y.algorithm());
    let replicates = resample::map_indices(options.replicates, options.execution, |i| {
        let xs = resample::stratified_replicate(&x_sorted, options.seed, &label, i, 0);
        let ys = resample::sorted_columns(&resample::stratified_replicate(&y_sorted, options.seed, &label, i, 1));
        poi_point(&xs, &ys)
    });
    let ci = aggregate::bootstrap_interval(replicates, options.ci_level)?;
    Ok(ImprovementScore {
        candidate: x.algorithm().to_string(),
        baseline: y.algorithm().to_string(),
        probability,
        ci,
    })
}

/// `points` evenly spaced values on `[0, 1]`.
pub fn default_taus(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// Fraction of sorted scores strictly greater than each tau.
fn tail_fractions(sorted: &[f64], taus: &[f64]) -> Vec<f64> {
    let n = sorted.len() as f64;
    taus.iter()
        .map(|&tau| (sorted.len() - sorted.partition_point(|&s| s <= tau)) as f64 / n)
        .collect()
}

/// Run-score distribution: fraction of all R×M entries with score > τ, with
/// pointwise stratified-bootstrap intervals.
pub fn performance_profile(matrix: &EvalMatrix, taus: &[f64], options: &BootstrapOptions) -> Result<ProfileCurve> {
    if matrix.is_empty() {
        return Err(Error::EmptyInput(format!("evaluation matrix for `{}` is empty", matrix.algorithm())));
    }
    if taus.is_empty() {
        return Err(Error::EmptyInput("tau grid is empty".into()));
    }
    if let Some(i) = taus.windows(2).position(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less)) {
        return Err(Error::InvalidArgument(format!("tau grid must be strictly increasing (index {})", i + 1)));
    }
    options.check()?;
    let mut pooled = matrix.pooled();
    pooled.sort_by(f64::total_cmp);
    let estimates = tail_fractions(&pooled, taus);

    let sorted = resample::sorted_columns(matrix.columns());
    let replicates: Vec<Vec<f64>> = resample::map_indices(options.replicates, options.execution, |i| {
        let mut sample: Vec<f64> = resample::stratified_replicate(&sorted, options.seed, matrix.algorithm(), i, 0)
            .into_iter()
            .flatten()
            .collect();
        sample.sort_by(f64::total_cmp);
        tail_fractions(&sample, taus)
    });
    let points = estimates
        .iter()
        .enumerate()
        .map(|(k, &estimate)| {
            let dist = replicates.iter().map(|r| r[k]).collect();
            Ok(CurvePoint {
                estimate,
                ci: aggregate::bootstrap_interval(dist, options.ci_level)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ProfileCurve::new(CurveKind::PerformanceProfile, matrix.algorithm(), taus.to_vec(), points)
}

/// How to reconcile differing step grids across tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Alignment {
    #[default]
    Strict,
    Intersect,
}

impl FromStr for Alignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Alignment::Strict),
            "intersect" => Ok(Alignment::Intersect),
            other => Err(Error::InvalidArgument(format!(
                "unknown alignment `{other}` (expected strict or intersect)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveBuild {
    pub curve: ProfileCurve,
    pub warnings: Vec<String>,
}

/// Aggregate of normalised interval scores at every shared training step.
pub fn sample_efficiency_curve(
    log: &ExperimentLog,
    algorithm: &str,
    metric: &str,
    statistic: SeriesStatistic,
    pooling: Pooling,
    alignment: Alignment,
    config: &ProtocolConfig,
) -> Result<CurveBuild> {
    let tasks = log.tasks_for(algorithm);
    if tasks.is_empty() {
        return Err(Error::UnknownAlgorithm(algorithm.to_string()));
    }
    let descriptor = log.descriptor_or_default(metric);
    let mut norm_warnings = Vec::new();
    let mut per_task = Vec::with_capacity(tasks.len());
    for task in &tasks {
        per_task.push(metrics::normalised_interval_means(
            log,
            task,
            algorithm,
            metric,
            pooling,
            &descriptor,
            &mut norm_warnings,
        )?);
    }
    let mut warnings: Vec<String> = norm_warnings.iter().map(ToString::to_string).collect();

    let first_grid = &per_task[0].0;
    let steps: Vec<u64> = match alignment {
        Alignment::Strict => {
            let offending: Vec<String> = tasks
                .iter()
                .zip(&per_task)
                .filter(|(_, (grid, _))| grid != first_grid)
                .map(|(t, _)| t.to_string())
                .collect();
            if !offending.is_empty() {
                let mut listed = vec![tasks[0].to_string()];
                listed.extend(offending);
                return Err(Error::StepGridMismatch(listed));
            }
            first_grid.clone()
        }
        Alignment::Intersect => {
            let mut common: BTreeSet<u64> = first_grid.iter().copied().collect();
            for (grid, _) in &per_task[1..] {
                let other: BTreeSet<u64> = grid.iter().copied().collect();
                common = common.intersection(&other).copied().collect();
            }
            let dropped = per_task.iter().any(|(grid, _)| grid.len() != common.len());
            if dropped {
                warnings.push(format!(
                    "step grids differ across tasks; using {} shared step(s)",
                    common.len()
                ));
            }
            common.into_iter().collect()
        }
    };
    if steps.is_empty() {
        return Err(Error::EmptyInput("no step count shared by every task".into()));
    }

    let reducer = match statistic {
        SeriesStatistic::Iqm => Statistic::Iqm,
        SeriesStatistic::Mean => Statistic::Mean,
    };
    let options = BootstrapOptions::from_config(config);
    let mut points = Vec::with_capacity(steps.len());
    for &step in &steps {
        let columns: Vec<Vec<f64>> = per_task
            .iter()
            .map(|(grid, series)| {
                // step is present in every grid by construction of `steps`
                let idx = grid.binary_search(&step).expect("aligned step");
                series.iter().map(|run| run[idx]).collect()
            })
            .collect();
        let label = format!("{algorithm}@{step}");
        let matrix = EvalMatrix::new(label, metric, tasks.clone(), columns, true)
            .map_err(|_| Error::RaggedRuns(format!("`{algorithm}` has unequal run counts across tasks")))?;
        let estimate = aggregate::stratified_bootstrap_ci(&matrix, reducer, &options)?;
        points.push(CurvePoint {
            estimate: estimate.point,
            ci: estimate.ci,
        });
    }
    let xs = steps.iter().map(|&s| s as f64).collect();
    Ok(CurveBuild {
        curve: ProfileCurve::new(CurveKind::SampleEfficiency, algorithm, xs, points)?,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::model::{
        AbsoluteRecord, CiMethod, EnvironmentMap, IntervalRecord, MetricDescriptor, RunRecord, TaskId, RETURN_METRIC,
    };

    fn one_task(alg: &str, column: &[f64]) -> EvalMatrix {
        EvalMatrix::new(alg, "return", vec![TaskId::new("e", "t")], vec![column.to_vec()], false).unwrap()
    }

    fn opts() -> BootstrapOptions {
        BootstrapOptions::new(200, 0.95, 3)
    }

    #[test]
    fn poi_examples() {
        let x = one_task("x", &[0.1, 0.5, 0.9]);
        assert_eq!(probability_of_improvement(&x, &x, &opts()).unwrap().probability, 0.5);
        let a = one_task("a", &[2.0, 2.0]);
        let b = one_task("b", &[1.0, 1.0]);
        assert_eq!(probability_of_improvement(&a, &b, &opts()).unwrap().probability, 1.0);
        let c = one_task("c", &[1.0, 3.0]);
        let d = one_task("d", &[2.0, 2.0]);
        let s = probability_of_improvement(&c, &d, &opts()).unwrap();
        assert_eq!(s.probability, 0.5);
        assert!(s.ci.lower() <= s.ci.upper());
        assert_eq!((s.candidate.as_str(), s.baseline.as_str()), ("c", "d"));
    }

    #[test]
    fn poi_needs_matching_tasks() {
        let x = one_task("x", &[1.0]);
        let y = EvalMatrix::new("y", "return", vec![TaskId::new("e", "other")], vec![vec![1.0]], false).unwrap();
        assert!(matches!(probability_of_improvement(&x, &y, &opts()), Err(Error::TaskListMismatch(_))));
    }

    #[test]
    fn poi_allows_different_run_counts() {
        let x = one_task("x", &[1.0, 2.0, 3.0]);
        let y = one_task("y", &[2.0]);
        // wins 1, ties 1 over 3 pairs
        assert_eq!(probability_of_improvement(&x, &y, &opts()).unwrap().probability, 0.5);
    }

    #[test]
    fn profile_examples() {
        let m = one_task("m", &[0.2, 0.8]);
        let curve = performance_profile(&m, &[0.0, 0.5, 0.8, 1.0], &opts()).unwrap();
        let est: Vec<f64> = curve.points().iter().map(|p| p.estimate).collect();
        assert_eq!(est, vec![1.0, 0.5, 0.0, 0.0]);
        assert!(performance_profile(&m, &[0.5, 0.5], &opts()).is_err());
        assert_eq!(default_taus(101).len(), 101);
        assert_eq!(default_taus(101)[50], 0.5);
    }

    #[test]
    fn curve_invariants() {
        let p = |e: f64| CurvePoint {
            estimate: e,
            ci: ConfidenceInterval::degenerate(e, 0.95),
        };
        assert!(ProfileCurve::new(CurveKind::PerformanceProfile, "a", vec![0.0, 1.0], vec![p(0.5), p(0.6)]).is_err());
        assert!(ProfileCurve::new(CurveKind::SampleEfficiency, "a", vec![0.0, 1.0], vec![p(0.5), p(0.6)]).is_ok());
        assert!(ProfileCurve::new(CurveKind::SampleEfficiency, "a", vec![1.0, 1.0], vec![p(0.5), p(0.6)]).is_err());
        assert!(ProfileCurve::new(CurveKind::SampleEfficiency, "a", vec![1.0], vec![]).is_err());
    }

    fn grid_log(grids: &[(&str, Vec<u64>)], runs: usize) -> ExperimentLog {
        let mut envs: EnvironmentMap = BTreeMap::new();
        for (task, grid) in grids {
            let run_map = (0..runs)
                .map(|r| {
                    let intervals = grid
                        .iter()
                        .map(|&s| {
                            let v = s as f64 / 10_000.0 + r as f64;
                            IntervalRecord::new(s, BTreeMap::from([(RETURN_METRIC.to_string(), vec![v])])).unwrap()
                        })
                        .collect();
                    let abs = AbsoluteRecord::new(BTreeMap::from([(RETURN_METRIC.to_string(), vec![0.0])])).unwrap();
                    (format!("r{r}"), RunRecord::new(intervals, Some(abs)).unwrap())
                })
                .collect();
            envs.entry("env".into())
                .or_default()
                .insert(task.to_string(), BTreeMap::from([("alg".to_string(), run_map)]));
        }
        ExperimentLog::new(vec![MetricDescriptor::episode_return()], envs, BTreeMap::new()).unwrap()
    }

    #[test]
    fn efficiency_single_run_is_normalised_means() {
        let log = grid_log(&[("t", vec![10_000, 20_000, 30_000])], 1);
        let config = ProtocolConfig {
            bootstrap_replicates: 50,
            ..ProtocolConfig::default()
        };
        let build = sample_efficiency_curve(
            &log,
            "alg",
            "return",
            SeriesStatistic::Iqm,
            Pooling::IntervalsOnly,
            Alignment::Strict,
            &config,
        )
        .unwrap();
        let c = &build.curve;
        assert_eq!(c.xs(), &[10_000.0, 20_000.0, 30_000.0]);
        let est: Vec<f64> = c.points().iter().map(|p| p.estimate).collect();
        assert_eq!(est, vec![0.0, 0.5, 1.0]);
        assert!(c.points().iter().all(|p| p.ci.method() == CiMethod::Degenerate));
    }

    #[test]
    fn efficiency_alignment() {
        let config = ProtocolConfig {
            bootstrap_replicates: 20,
            ..ProtocolConfig::default()
        };
        let strict = grid_log(&[("a", vec![0, 10_000]), ("b", vec![0, 20_000])], 2);
        let err = sample_efficiency_curve(
            &strict,
            "alg",
            "return",
            SeriesStatistic::Mean,
            Pooling::Global,
            Alignment::Strict,
            &config,
        )
        .unwrap_err();
        assert!(matches!(err, Error::StepGridMismatch(ref tasks) if tasks.len() == 2), "{err}");

        let log = grid_log(&[("a", vec![0, 10_000]), ("b", vec![0, 10_000, 20_000])], 2);
        let build = sample_efficiency_curve(
            &log,
            "alg",
            "return",
            SeriesStatistic::Mean,
            Pooling::Global,
            Alignment::Intersect,
            &config,
        )
        .unwrap();
        assert_eq!(build.curve.xs(), &[0.0, 10_000.0]);
        assert_eq!(build.warnings.len(), 1);
    }
}
