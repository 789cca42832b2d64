//! Log rewriting helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use marleval::model::{AbsoluteRecord, EnvironmentMap, IntervalRecord, RunRecord};
use marleval::{ExperimentLog, MetricDescriptor};

/// Identifies one run while rewriting.
pub struct RunKey<'a> {
    pub env: &'a str,
    pub task: &'a str,
    pub algorithm: &'a str,
    pub run: &'a str,
}

/// Rebuilds a log after passing every run through `f`; `None` drops the run.
pub fn map_runs(log: ExperimentLog, mut f: impl FnMut(&RunKey, RunRecord) -> Option<RunRecord>) -> ExperimentLog {
    let (metrics, environments, metadata) = log.into_parts();
    let mut out = EnvironmentMap::new();
    for (env, tasks) in environments {
        for (task, algs) in tasks {
            for (alg, runs) in algs {
                for (run_id, run) in runs {
                    let key = RunKey {
                        env: &env,
                        task: &task,
                        algorithm: &alg,
                        run: &run_id,
                    };
                    if let Some(run) = f(&key, run) {
                        out.entry(env.clone())
                            .or_default()
                            .entry(task.clone())
                            .or_default()
                            .entry(alg.clone())
                            .or_default()
                            .insert(run_id.clone(), run);
                    }
                }
            }
        }
    }
    ExperimentLog::new(metrics, out, metadata).expect("rewritten log stays valid")
}

pub fn with_metrics(log: ExperimentLog, metrics: Vec<MetricDescriptor>) -> ExperimentLog {
    let (_, environments, metadata) = log.into_parts();
    ExperimentLog::new(metrics, environments, metadata).expect("valid log")
}

fn map_lists(metrics: &BTreeMap<String, Vec<f64>>, f: &mut impl FnMut(&[f64]) -> Vec<f64>) -> BTreeMap<String, Vec<f64>> {
    metrics.iter().map(|(k, v)| (k.clone(), f(v))).collect()
}

/// Rewrites every episode list of a run, interval and absolute alike.
pub fn map_episode_lists(
    run: RunRecord,
    mut intervals: impl FnMut(u64, &[f64]) -> Vec<f64>,
    mut absolute: impl FnMut(&[f64]) -> Vec<f64>,
) -> RunRecord {
    let (ivs, abs) = run.into_parts();
    let ivs = ivs
        .into_iter()
        .map(|iv| {
            let step = iv.step_count();
            IntervalRecord::new(step, map_lists(iv.metrics(), &mut |v| intervals(step, v))).unwrap()
        })
        .collect();
    let abs = abs.map(|a| AbsoluteRecord::new(map_lists(a.metrics(), &mut absolute)).unwrap());
    RunRecord::new(ivs, abs).unwrap()
}

/// Applies `f` to every raw value of a run.
pub fn map_values(run: RunRecord, f: impl Fn(f64) -> f64) -> RunRecord {
    map_episode_lists(run, |_, v| v.iter().map(|&x| f(x)).collect(), |v| v.iter().map(|&x| f(x)).collect())
}

/// Rewrites the interval sequence of a run, keeping its absolute block.
pub fn map_intervals(run: RunRecord, f: impl FnOnce(Vec<IntervalRecord>) -> Vec<IntervalRecord>) -> RunRecord {
    let (ivs, abs) = run.into_parts();
    RunRecord::new(f(ivs), abs).unwrap()
}

pub fn restep(interval: &IntervalRecord, step: u64) -> IntervalRecord {
    IntervalRecord::new(step, interval.metrics().clone()).unwrap()
}

/// A structurally arbitrary log: ragged group sizes, awkward key names,
/// extreme magnitudes, optional absolute blocks and a second metric.
pub fn random_log(seed: u64) -> ExperimentLog {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let names = ["a", "3m", "with space", "quo\"te", "ünï", "x.y", "_"];
    let value = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        match rng.random_range(0..4) {
            0 => rng.random_range(-100..100) as f64,
            1 => rng.random::<f64>() * 10f64.powi(rng.random_range(-300..300)),
            2 => -rng.random::<f64>(),
            _ => 0.1 + rng.random::<f64>(),
        }
    };
    let with_extra = rng.random_bool(0.5);
    let mut environments = EnvironmentMap::new();
    for e in 0..rng.random_range(1..=2) {
        let env_name = format!("{}{e}", names[rng.random_range(0..names.len())]);
        for t in 0..rng.random_range(1..=2) {
            for a in 0..rng.random_range(1..=2) {
                let steps: Vec<u64> = (1..=rng.random_range(1..=3)).map(|k| k * 7).collect();
                let episodes = rng.random_range(1..=3);
                for r in 0..rng.random_range(1..=3) {
                    let lists = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| {
                        let mut m = BTreeMap::from([("return".to_string(), (0..n).map(|_| value(rng)).collect())]);
                        if with_extra {
                            m.insert("win_rate".to_string(), (0..n).map(|_| rng.random::<f64>()).collect());
                        }
                        m
                    };
                    let intervals = steps
                        .iter()
                        .map(|&s| IntervalRecord::new(s, lists(&mut rng, episodes)).unwrap())
                        .collect();
                    let absolute = rng
                        .random_bool(0.7)
                        .then(|| AbsoluteRecord::new(lists(&mut rng, episodes * 2)).unwrap());
                    environments
                        .entry(env_name.clone())
                        .or_default()
                        .entry(format!("task{t}"))
                        .or_default()
                        .entry(format!("alg{a}"))
                        .or_default()
                        .insert(format!("run{r}"), RunRecord::new(intervals, absolute).unwrap());
                }
            }
        }
    }
    let mut metrics = vec![MetricDescriptor::episode_return()];
    if with_extra {
        metrics.push(MetricDescriptor::new("win_rate", true, true).unwrap());
    }
    let metadata = BTreeMap::from([("note".to_string(), names[rng.random_range(0..names.len())].to_string())]);
    ExperimentLog::new(metrics, environments, metadata).unwrap()
}
