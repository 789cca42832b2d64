//! Protocol-conformance checks over an experiment log.
//!
//! Every check has a fixed id and a fixed worst-case severity. Statistical
//! validity breaches (too few runs, no absolute metric, no return metric)
//! fail; comparability breaches (episode counts, interval spacing, a single
//! environment) warn.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{ExperimentLog, ProtocolConfig, RETURN_METRIC};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyClass {
    OnPolicy,
    OffPolicy,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LintStatus {
    Pass,
    NotApplicable,
    Warn,
    Fail,
}

impl fmt::Display for LintStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LintStatus::Pass => "pass",
            LintStatus::NotApplicable => "n/a",
            LintStatus::Warn => "warn",
            LintStatus::Fail => "fail",
        })
    }
}

/// Registry of every check the linter can emit, in report order.
pub const CHECKS: [(&str, &str); 9] = [
    ("multiple_environments", "Evaluate on more than one environment"),
    ("multiple_tasks", "Evaluate on more than one task per environment"),
    ("runs_count", "Use at least the protocol number of independent training runs"),
    ("eval_episode_count", "Use the protocol number of evaluation episodes per interval"),
    ("eval_interval", "Evaluate at the protocol interval of environment timesteps"),
    ("training_duration", "Train for the protocol number of timesteps"),
    ("absolute_present", "Record the absolute metric for every run"),
    ("absolute_episode_count", "Evaluate the absolute metric over 10x the interval episodes"),
    ("return_metric_present", "Always report episode returns"),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LintCheck {
    pub id: String,
    pub description: String,
    pub status: LintStatus,
    pub finding: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LintSummary {
    pub pass: usize,
    pub warn: usize,
    pub fail: usize,
    pub not_applicable: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LintReport {
    pub checks: Vec<LintCheck>,
    pub summary: LintSummary,
}

impl LintReport {
    fn from_checks(checks: Vec<LintCheck>) -> Self {
        let mut summary = LintSummary::default();
        for c in &checks {
            match c.status {
                LintStatus::Pass => summary.pass += 1,
                LintStatus::Warn => summary.warn += 1,
                LintStatus::Fail => summary.fail += 1,
                LintStatus::NotApplicable => summary.not_applicable += 1,
            }
        }
        Self { checks, summary }
    }

    pub fn check(&self, id: &str) -> Option<&LintCheck> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn has_failures(&self) -> bool {
        self.summary.fail > 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("lint report serialisation")
    }
}

impl fmt::Display for LintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.id.len()).max().unwrap_or(0);
        for c in &self.checks {
            writeln!(f, "{:<4}  {:<width$}  {}", c.status.to_string(), c.id, c.finding)?;
        }
        write!(
            f,
            "{} pass, {} warn, {} fail, {} n/a",
            self.summary.pass, self.summary.warn, self.summary.fail, self.summary.not_applicable
        )
    }
}

fn check(id: &str, status: LintStatus, finding: impl Into<String>) -> LintCheck {
    let description = CHECKS
        .iter()
        .find(|(known, _)| *known == id)
        .map(|(_, d)| d.to_string())
        .expect("check id must be registered");
    LintCheck {
        id: id.to_string(),
        description,
        status,
        finding: finding.into(),
    }
}

fn offenders_note(first: &str, count: usize) -> String {
    if count > 1 {
        format!(" (at {first}; {count} location(s))")
    } else {
        format!(" (at {first})")
    }
}

fn multiple_environments(log: &ExperimentLog) -> LintCheck {
    let n = log.environments().len();
    if n >= 2 {
        check("multiple_environments", LintStatus::Pass, format!("{n} environments"))
    } else {
        check(
            "multiple_environments",
            LintStatus::Warn,
            "only one environment; results on a single environment do not generalise",
        )
    }
}

fn multiple_tasks(log: &ExperimentLog) -> LintCheck {
    let single: Vec<&str> = log
        .environments()
        .iter()
        .filter(|(_, tasks)| tasks.len() < 2)
        .map(|(env, _)| env.as_str())
        .collect();
    if single.is_empty() {
        check("multiple_tasks", LintStatus::Pass, format!("{} tasks", log.tasks().len()))
    } else {
        check(
            "multiple_tasks",
            LintStatus::Warn,
            format!("single task in environment(s): {}", single.join(", ")),
        )
    }
}

fn runs_count(log: &ExperimentLog, config: &ProtocolConfig) -> LintCheck {
    let short: Vec<(String, usize)> = log
        .groups()
        .filter(|(_, _, _, runs)| runs.len() < config.runs)
        .map(|(e, t, a, runs)| (format!("{e}/{t}/{a}"), runs.len()))
        .collect();
    match short.iter().min_by_key(|(_, n)| *n) {
        None => check(
            "runs_count",
            LintStatus::Pass,
            format!("every group has at least {} runs", config.runs),
        ),
        Some((at, n)) => check(
            "runs_count",
            LintStatus::Fail,
            format!(
                "found {n}, protocol requires {}{}",
                config.runs,
                offenders_note(at, short.len())
            ),
        ),
    }
}

fn eval_episode_count(log: &ExperimentLog, config: &ProtocolConfig) -> LintCheck {
    let mut bad = 0usize;
    let mut first = None;
    for (e, t, a, runs) in log.groups() {
        for (run_id, run) in runs {
            for interval in run.intervals() {
                let n = interval.episode_count();
                if n != config.eval_episodes {
                    bad += 1;
                    first.get_or_insert_with(|| {
                        (format!("{e}/{t}/{a}/{run_id}@{}", interval.step_count()), n)
                    });
                }
            }
        }
    }
    match first {
        None => check(
            "eval_episode_count",
            LintStatus::Pass,
            format!("{} episodes at every interval", config.eval_episodes),
        ),
        Some((at, n)) => check(
            "eval_episode_count",
            LintStatus::Warn,
            format!(
                "found {n} episodes, protocol uses {}{}",
                config.eval_episodes,
                offenders_note(&at, bad)
            ),
        ),
    }
}

fn eval_interval(log: &ExperimentLog, config: &ProtocolConfig) -> LintCheck {
    let step = config.eval_interval;
    let mut bad = 0usize;
    let mut first = None;
    for (e, t, a, runs) in log.groups() {
        let Some(run) = runs.values().next() else { continue };
        let grid = run.step_grid();
        let start_ok = matches!(grid.first(), Some(&s) if s == 0 || s == step);
        let gap = grid.windows(2).find(|w| w[1] - w[0] != step);
        if !start_ok || gap.is_some() {
            bad += 1;
            first.get_or_insert_with(|| match gap {
                Some(w) => format!("{e}/{t}/{a}: gap {} between steps {} and {}", w[1] - w[0], w[0], w[1]),
                None => format!("{e}/{t}/{a}: first evaluation at step {}", grid[0]),
            });
        }
    }
    match first {
        None => check(
            "eval_interval",
            LintStatus::Pass,
            format!("evaluations every {step} timesteps"),
        ),
        Some(at) => check(
            "eval_interval",
            LintStatus::Warn,
            format!("expected evaluations every {step} timesteps; {at} ({bad} group(s))"),
        ),
    }
}

fn training_duration(
    log: &ExperimentLog,
    config: &ProtocolConfig,
    policy_class: &BTreeMap<String, PolicyClass>,
) -> LintCheck {
    let mut worst = LintStatus::Pass;
    let mut notes = Vec::new();
    for (e, t, a, runs) in log.groups() {
        let final_step = runs.values().map(|r| r.final_step()).max().unwrap_or(0);
        let class = policy_class.get(a).copied().unwrap_or_default();
        let (status, note) = match class {
            PolicyClass::OffPolicy if final_step < config.timesteps_off_policy => (
                LintStatus::Fail,
                format!(
                    "{e}/{t}/{a} (off-policy) trained {final_step} < {} timesteps",
                    config.timesteps_off_policy
                ),
            ),
            PolicyClass::OnPolicy if final_step < config.timesteps_on_policy => (
                LintStatus::Fail,
                format!(
                    "{e}/{t}/{a} (on-policy) trained {final_step} < {} timesteps",
                    config.timesteps_on_policy
                ),
            ),
            PolicyClass::Unknown if final_step < config.timesteps_off_policy => (
                LintStatus::Warn,
                format!(
                    "{e}/{t}/{a} trained {final_step} timesteps, below both the off-policy ({}) \
                     and on-policy ({}) budgets; tag its policy class to enforce",
                    config.timesteps_off_policy, config.timesteps_on_policy
                ),
            ),
            _ => continue,
        };
        worst = worst.max(status);
        notes.push(note);
    }
    match notes.first() {
        None => check(
            "training_duration",
            LintStatus::Pass,
            "every group meets its training budget",
        ),
        Some(first) => check(
            "training_duration",
            worst,
            if notes.len() > 1 {
                format!("{first} ({} group(s))", notes.len())
            } else {
                first.clone()
            },
        ),
    }
}

fn absolute_present(log: &ExperimentLog) -> LintCheck {
    let missing: Vec<String> = log
        .groups()
        .flat_map(|(e, t, a, runs)| {
            runs.iter()
                .filter(|(_, r)| r.absolute().is_none())
                .map(move |(id, _)| format!("{e}/{t}/{a}/{id}"))
        })
        .collect();
    match missing.first() {
        None => check("absolute_present", LintStatus::Pass, "every run has an absolute block"),
        Some(first) => check(
            "absolute_present",
            LintStatus::Fail,
            format!("missing absolute block{}", offenders_note(first, missing.len())),
        ),
    }
}

fn absolute_episode_count(log: &ExperimentLog, config: &ProtocolConfig) -> LintCheck {
    let mut seen = 0usize;
    let mut bad = 0usize;
    let mut first = None;
    for (e, t, a, runs) in log.groups() {
        for (run_id, run) in runs {
            let Some(abs) = run.absolute() else { continue };
            seen += 1;
            if let Some((name, values)) = abs
                .metrics()
                .iter()
                .find(|(_, v)| v.len() != config.absolute_episodes)
            {
                bad += 1;
                first.get_or_insert_with(|| (format!("{e}/{t}/{a}/{run_id} {name}"), values.len()));
            }
        }
    }
    if seen == 0 {
        return check(
            "absolute_episode_count",
            LintStatus::NotApplicable,
            "no absolute blocks recorded",
        );
    }
    match first {
        None => check(
            "absolute_episode_count",
            LintStatus::Pass,
            format!("{} absolute episodes per run", config.absolute_episodes),
        ),
        Some((at, n)) => check(
            "absolute_episode_count",
            LintStatus::Warn,
            format!(
                "found {n} absolute episodes, protocol uses {}{}",
                config.absolute_episodes,
                offenders_note(&at, bad)
            ),
        ),
    }
}

fn return_metric_present(log: &ExperimentLog) -> LintCheck {
    let declared = log.descriptor(RETURN_METRIC).is_some();
    let recorded = log.groups().all(|(_, _, _, runs)| {
        runs.values().all(|run| {
            run.intervals().iter().all(|i| i.metric(RETURN_METRIC).is_some())
                && run.absolute().is_none_or(|a| a.metric(RETURN_METRIC).is_some())
        })
    });
    match (declared, recorded) {
        (true, true) => check("return_metric_present", LintStatus::Pass, "returns recorded everywhere"),
        (false, _) => check(
            "return_metric_present",
            LintStatus::Fail,
            "metric \"return\" is not declared in the metric list",
        ),
        (true, false) => check(
            "return_metric_present",
            LintStatus::Fail,
            "metric \"return\" is missing from some records",
        ),
    }
}

/// Runs every registered check. Algorithms absent from `policy_class` are
/// treated as [`PolicyClass::Unknown`].
pub fn lint_protocol(
    log: &ExperimentLog,
    config: &ProtocolConfig,
    policy_class: &BTreeMap<String, PolicyClass>,
) -> LintReport {
    LintReport::from_checks(vec![
        multiple_environments(log),
        multiple_tasks(log),
        runs_count(log, config),
        eval_episode_count(log, config),
        eval_interval(log, config),
        training_duration(log, config, policy_class),
        absolute_present(log),
        absolute_episode_count(log, config),
        return_metric_present(log),
    ])
}

/// Parses a policy-class map (`{"qmix": "off_policy", ...}`).
pub fn parse_policy_classes(text: &str) -> crate::Result<BTreeMap<String, PolicyClass>> {
    serde_json::from_str(text).map_err(|e| crate::Error::SchemaViolation {
        path: "$".into(),
        message: e.to_string(),
    })
}
