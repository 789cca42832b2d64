//! Robust aggregate statistics over evaluation matrices with stratified
//! bootstrap confidence intervals.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CiMethod, ConfidenceInterval, EvalMatrix, ProtocolConfig};
use crate::resample::{self, Execution};

fn ensure_non_empty(scores: &[f64], what: &str) -> Result<()> {
    if scores.is_empty() {
        Err(Error::EmptyInput(format!("{what} needs at least one score")))
    } else {
        Ok(())
    }
}

fn sorted(scores: &[f64]) -> Vec<f64> {
    let mut v = scores.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Mean taken as offsets from the first value, so constant input is returned
/// exactly, and clamped to the input range to absorb rounding.
fn anchored_mean(values: &[f64]) -> f64 {
    let anchor = values[0];
    let offset = values.iter().map(|&x| x - anchor).sum::<f64>() / values.len() as f64;
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    (anchor + offset).clamp(lo, hi)
}

pub fn mean(scores: &[f64]) -> Result<f64> {
    ensure_non_empty(scores, "mean")?;
    Ok(anchored_mean(scores))
}

pub fn median(scores: &[f64]) -> Result<f64> {
    ensure_non_empty(scores, "median")?;
    let s = sorted(scores);
    let n = s.len();
    Ok(if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    })
}

/// Interquartile mean: drop `floor(n/4)` scores from each tail of the sorted
/// list and average the rest.
pub fn iqm(scores: &[f64]) -> Result<f64> {
    ensure_non_empty(scores, "iqm")?;
    let s = sorted(scores);
    let k = s.len() / 4;
    Ok(anchored_mean(&s[k..s.len() - k]))
}

/// `gamma` minus the mean of scores clipped at `gamma`.
pub fn optimality_gap(scores: &[f64], gamma: f64) -> Result<f64> {
    ensure_non_empty(scores, "optimality gap")?;
    let clipped: Vec<f64> = scores.iter().map(|&x| x.min(gamma)).collect();
    let clipped = anchored_mean(&clipped);
    // clipping guarantees clipped <= gamma up to rounding
    Ok((gamma - clipped).max(0.0))
}

/// An aggregate statistic over pooled scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Statistic {
    Iqm,
    Mean,
    Median,
    OptimalityGap { gamma: f64 },
}

impl Statistic {
    pub const DEFAULT_GAMMA: f64 = 1.0;

    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Iqm => "iqm",
            Statistic::Mean => "mean",
            Statistic::Median => "median",
            Statistic::OptimalityGap { .. } => "optimality_gap",
        }
    }

    /// Same statistic with `gamma` applied where relevant.
    pub fn with_gamma(self, gamma: f64) -> Self {
        match self {
            Statistic::OptimalityGap { .. } => Statistic::OptimalityGap { gamma },
            other => other,
        }
    }

    pub fn apply(&self, scores: &[f64]) -> Result<f64> {
        match *self {
            Statistic::Iqm => iqm(scores),
            Statistic::Mean => mean(scores),
            Statistic::Median => median(scores),
            Statistic::OptimalityGap { gamma } => optimality_gap(scores, gamma),
        }
    }

    /// All four statistics at the given threshold.
    pub fn all(gamma: f64) -> Vec<Statistic> {
        vec![
            Statistic::Iqm,
            Statistic::Mean,
            Statistic::Median,
            Statistic::OptimalityGap { gamma },
        ]
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iqm" => Ok(Statistic::Iqm),
            "mean" => Ok(Statistic::Mean),
            "median" => Ok(Statistic::Median),
            "optimality_gap" | "og" => Ok(Statistic::OptimalityGap {
                gamma: Statistic::DEFAULT_GAMMA,
            }),
            other => Err(Error::InvalidArgument(format!(
                "unknown statistic `{other}` (expected iqm, mean, median or optimality_gap)"
            ))),
        }
    }
}

/// The statistic applied to all R×M entries pooled together.
pub fn pooled_statistic(matrix: &EvalMatrix, statistic: Statistic) -> Result<f64> {
    if matrix.is_empty() {
        return Err(Error::EmptyInput(format!(
            "evaluation matrix for `{}` is empty",
            matrix.algorithm()
        )));
    }
    statistic.apply(&matrix.pooled())
}

/// Bootstrap settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapOptions {
    pub replicates: usize,
    pub ci_level: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl BootstrapOptions {
    pub fn new(replicates: usize, ci_level: f64, seed: u64) -> Self {
        Self {
            replicates,
            ci_level,
            seed,
            execution: Execution::default(),
        }
    }

    pub fn from_config(config: &ProtocolConfig) -> Self {
        Self::new(config.bootstrap_replicates, config.ci_level, config.seed)
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be at least 1".into()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "ci level {} must lie in (0, 1)",
                self.ci_level
            )));
        }
        Ok(())
    }
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self::from_config(&ProtocolConfig::default())
    }
}

/// A point estimate with its interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub point: f64,
    pub ci: ConfidenceInterval,
}

/// Builds a bootstrap interval from replicate values, marking zero-width
/// intervals as degenerate.
pub(crate) fn bootstrap_interval(replicates: Vec<f64>, level: f64) -> Result<ConfidenceInterval> {
    let (lower, upper) = resample::percentile_interval(replicates, level)?;
    let method = if lower == upper {
        CiMethod::Degenerate
    } else {
        CiMethod::StratifiedBootstrap
    };
    ConfidenceInterval::new(lower, upper, level, method)
}

/// Replicate distribution of `statistics` under stratified resampling.
///
/// Returns one vector of replicate values per statistic. All statistics share
/// the same resampled matrices.
pub fn bootstrap_distributions(
    matrix: &EvalMatrix,
    statistics: &[Statistic],
    options: &BootstrapOptions,
) -> Result<Vec<Vec<f64>>> {
    options.check()?;
    if matrix.is_empty() {
        return Err(Error::EmptyInput(format!(
            "evaluation matrix for `{}` is empty",
            matrix.algorithm()
        )));
    }
    let sorted = resample::sorted_columns(matrix.columns());
    let label = matrix.algorithm();
    let per_replicate: Vec<Vec<f64>> =
        resample::map_indices(options.replicates, options.execution, |i| {
            let pooled: Vec<f64> = resample::stratified_replicate(&sorted, options.seed, label, i, 0)
                .into_iter()
                .flatten()
                .collect();
            statistics
                .iter()
                // non-empty by construction
                .map(|s| s.apply(&pooled).unwrap_or(f64::NAN))
                .collect()
        });
    let transposed = (0..statistics.len())
        .map(|s| per_replicate.iter().map(|row| row[s]).collect())
        .collect();
    Ok(transposed)
}

/// Point estimate plus percentile interval from a stratified bootstrap:
/// each replicate resamples runs with replacement independently within every
/// task column.
pub fn stratified_bootstrap_ci(
    matrix: &EvalMatrix,
    statistic: Statistic,
    options: &BootstrapOptions,
) -> Result<Estimate> {
    let point = pooled_statistic(matrix, statistic)?;
    let mut dists = bootstrap_distributions(matrix, &[statistic], options)?;
    let ci = bootstrap_interval(dists.remove(0), options.ci_level)?;
    Ok(Estimate { point, ci })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInfo {
    pub replicates: usize,
    pub seed: u64,
    pub ci_level: f64,
}

/// Point estimates and intervals per algorithm and statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub metric: String,
    pub gamma: f64,
    pub entries: BTreeMap<String, BTreeMap<String, Estimate>>,
    pub bootstrap: BootstrapInfo,
}

#[derive(Serialize, Deserialize)]
struct EstimateJson {
    point: f64,
    lower: f64,
    upper: f64,
}

#[derive(Serialize, Deserialize)]
struct ReportJson {
    metric: String,
    gamma: f64,
    bootstrap: BootstrapInfo,
    entries: BTreeMap<String, BTreeMap<String, EstimateJson>>,
}

impl AggregateReport {
    pub fn to_json(&self) -> String {
        let json = ReportJson {
            metric: self.metric.clone(),
            gamma: self.gamma,
            bootstrap: self.bootstrap,
            entries: self
                .entries
                .iter()
                .map(|(alg, stats)| {
                    let stats = stats
                        .iter()
                        .map(|(name, e)| {
                            (
                                name.clone(),
                                EstimateJson {
                                    point: e.point,
                                    lower: e.ci.lower(),
                                    upper: e.ci.upper(),
                                },
                            )
                        })
                        .collect();
                    (alg.clone(), stats)
                })
                .collect(),
        };
        // serialising plain structs of finite floats cannot fail
        serde_json::to_string_pretty(&json).expect("report serialisation")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: ReportJson = serde_json::from_str(text).map_err(|e| Error::schema("$", e.to_string()))?;
        if json.bootstrap.replicates == 0 {
            return Err(Error::schema("$.bootstrap.replicates", "must be at least 1"));
        }
        let level = json.bootstrap.ci_level;
        let mut entries = BTreeMap::new();
        for (alg, stats) in json.entries {
            let mut out = BTreeMap::new();
            for (name, e) in stats {
                let method = if e.lower == e.upper {
                    CiMethod::Degenerate
                } else {
                    CiMethod::StratifiedBootstrap
                };
                let ci = ConfidenceInterval::new(e.lower, e.upper, level, method)
                    .map_err(|err| err.rebase(&format!("$.entries.{alg}.{name}")))?;
                out.insert(name, Estimate { point: e.point, ci });
            }
            entries.insert(alg, out);
        }
        Ok(Self {
            metric: json.metric,
            gamma: json.gamma,
            entries,
            bootstrap: json.bootstrap,
        })
    }
}

/// Aggregates every algorithm's matrix. All matrices must share the task
/// list and metric. Sub-seeds per algorithm come from hashing the seed with
/// the algorithm name.
pub fn aggregate_scores(
    matrices: &BTreeMap<String, EvalMatrix>,
    statistics: &[Statistic],
    config: &ProtocolConfig,
) -> Result<AggregateReport> {
    aggregate_scores_with(matrices, statistics, config, Execution::default())
}

pub fn aggregate_scores_with(
    matrices: &BTreeMap<String, EvalMatrix>,
    statistics: &[Statistic],
    config: &ProtocolConfig,
    execution: Execution,
) -> Result<AggregateReport> {
    let mut iter = matrices.values();
    let Some(first) = iter.next() else {
        return Err(Error::EmptyInput("no evaluation matrices".into()));
    };
    if statistics.is_empty() {
        return Err(Error::EmptyInput("no statistics requested".into()));
    }
    for m in iter {
        if m.tasks() != first.tasks() {
            return Err(Error::TaskListMismatch(format!(
                "`{}` and `{}` cover different tasks",
                first.algorithm(),
                m.algorithm()
            )));
        }
        if m.metric() != first.metric() {
            return Err(Error::TaskListMismatch(format!(
                "`{}` uses metric `{}` but `{}` uses `{}`",
                first.algorithm(),
                first.metric(),
                m.algorithm(),
                m.metric()
            )));
        }
    }
    let statistics: Vec<Statistic> = statistics.iter().map(|s| s.with_gamma(config.gamma)).collect();
    let options = BootstrapOptions::from_config(config).with_execution(execution);

    let mut entries = BTreeMap::new();
    for (name, matrix) in matrices {
        let dists = bootstrap_distributions(matrix, &statistics, &options)?;
        let mut stats = BTreeMap::new();
        for (statistic, dist) in statistics.iter().zip(dists) {
            let point = pooled_statistic(matrix, *statistic)?;
            let ci = bootstrap_interval(dist, options.ci_level)?;
            stats.insert(statistic.name().to_string(), Estimate { point, ci });
        }
        entries.insert(name.clone(), stats);
    }
    Ok(AggregateReport {
        metric: first.metric().to_string(),
        gamma: config.gamma,
        entries,
        bootstrap: BootstrapInfo {
            replicates: options.replicates,
            seed: options.seed,
            ci_level: options.ci_level,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TaskId;

    fn matrix(rows: &[Vec<f64>]) -> EvalMatrix {
        let tasks = (0..rows[0].len()).map(|t| TaskId::new("env", format!("t{t}"))).collect();
        EvalMatrix::from_rows("alg", "return", tasks, rows, false).unwrap()
    }

    #[test]
    fn iqm_examples() {
        assert_eq!(iqm(&[0.3; 4]).unwrap(), 0.3);
        let xs: Vec<f64> = (0..8).map(f64::from).collect();
        assert_eq!(iqm(&xs).unwrap(), 3.5);
        assert_eq!(iqm(&[1.0, 2.0, 9.0]).unwrap(), 4.0);
        assert!(matches!(iqm(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn optimality_gap_examples() {
        assert_eq!(optimality_gap(&[1.0, 1.0], 1.0).unwrap(), 0.0);
        assert_eq!(optimality_gap(&[0.0, 0.5], 1.0).unwrap(), 0.75);
        assert_eq!(optimality_gap(&[2.0], 1.0).unwrap(), 0.0);
        assert!(optimality_gap(&[], 1.0).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]).unwrap(), 2.5);
    }

    #[test]
    fn pooled_examples() {
        let single = matrix(&[vec![0.7]]);
        for s in Statistic::all(1.0) {
            let expected = if s.name() == "optimality_gap" { 1.0 - 0.7 } else { 0.7 };
            assert!((pooled_statistic(&single, s).unwrap() - expected).abs() < 1e-15);
        }
        let sym = matrix(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(pooled_statistic(&sym, Statistic::Mean).unwrap(), 0.5);
        let m = matrix(&[vec![0.1, 0.2], vec![0.3, 0.9]]);
        assert!((pooled_statistic(&m, Statistic::Iqm).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn constant_matrix_gives_degenerate_interval() {
        let m = matrix(&vec![vec![0.4; 3]; 5]);
        let e = stratified_bootstrap_ci(&m, Statistic::Iqm, &BootstrapOptions::new(200, 0.95, 1)).unwrap();
        assert_eq!(e.point, 0.4);
        assert_eq!((e.ci.lower(), e.ci.upper()), (0.4, 0.4));
        assert_eq!(e.ci.method(), CiMethod::Degenerate);
    }

    #[test]
    fn bootstrap_is_deterministic_and_execution_free() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|r| (0..4).map(|t| ((r * 7 + t * 3) % 11) as f64 / 10.0).collect())
            .collect();
        let m = matrix(&rows);
        let opts = BootstrapOptions::new(500, 0.95, 9);
        let a = stratified_bootstrap_ci(&m, Statistic::Mean, &opts.with_execution(Execution::Sequential)).unwrap();
        let b = stratified_bootstrap_ci(&m, Statistic::Mean, &opts.with_execution(Execution::Parallel)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ci.method(), CiMethod::StratifiedBootstrap);
        assert!(a.ci.lower() <= a.point && a.point <= a.ci.upper());
    }

    #[test]
    fn rejects_bad_options() {
        let m = matrix(&[vec![0.5]]);
        assert!(stratified_bootstrap_ci(&m, Statistic::Mean, &BootstrapOptions::new(0, 0.95, 1)).is_err());
        assert!(stratified_bootstrap_ci(&m, Statistic::Mean, &BootstrapOptions::new(10, 0.0, 1)).is_err());
    }

    #[test]
    fn aggregate_rejects_mismatched_tasks() {
        let a = matrix(&[vec![0.5]]);
        let b = EvalMatrix::from_rows("b", "return", vec![TaskId::new("other", "x")], &[vec![0.5]], false)
            .unwrap();
        let map = BTreeMap::from([("a".to_string(), a), ("b".to_string(), b)]);
        let err = aggregate_scores(&map, &[Statistic::Mean], &ProtocolConfig::default()).unwrap_err();
        assert!(matches!(err, Error::TaskListMismatch(_)));
    }

    #[test]
    fn report_json_round_trip() {
        let a = matrix(&[vec![0.2, 0.4], vec![0.6, 0.8], vec![0.1, 0.3]]);
        let map = BTreeMap::from([("a".to_string(), a)]);
        let config = ProtocolConfig {
            bootstrap_replicates: 100,
            ..ProtocolConfig::default()
        };
        let report = aggregate_scores(&map, &Statistic::all(1.0), &config).unwrap();
        let text = report.to_json();
        assert!(text.contains("\"iqm\""));
        assert!(text.contains("\"optimality_gap\""));
        let back = AggregateReport::from_json(&text).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn statistic_parsing() {
        assert_eq!("iqm".parse::<Statistic>().unwrap(), Statistic::Iqm);
        assert_eq!(
            "optimality_gap".parse::<Statistic>().unwrap().with_gamma(0.5),
            Statistic::OptimalityGap { gamma: 0.5 }
        );
        assert!("mode".parse::<Statistic>().is_err());
    }
}
