//! Parsing, soft validation and merging of experiment logs.
//!
//! The canonical on-disk format is a single JSON document:
//!
//! ```text
//! {
//!   "version": "1",
//!   "metrics": [ {"name": "return", "unit_interval": false, "higher_is_better": true} ],
//!   "environments": { "<env>": { "<task>": { "<algorithm>": { "<run_id>": {
//!       "intervals": [ {"step_count": 0, "metrics": {"return": [1.0, ...]}} ],
//!       "absolute": {"metrics": {"return": [1.0, ...]}}
//!   } } } } },
//!   "metadata": { "<key>": "<string>" }
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::{
    child_path, index_path, AbsoluteRecord, EnvironmentMap, ExperimentLog, IntervalRecord,
    MetricDescriptor, ProtocolConfig, RunRecord, RETURN_METRIC,
};

pub const FORMAT_VERSION: &str = "1";

const KNOWN_KEYS: [&str; 4] = ["version", "metrics", "environments", "metadata"];

/// A located finding in a validation report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub path: String,
    pub message: String,
}

impl Finding {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Soft-check results. `is_valid` holds exactly when `errors` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
    pub is_valid: bool,
}

impl ValidationReport {
    fn from_findings(errors: Vec<Finding>, warnings: Vec<Finding>) -> Self {
        let is_valid = errors.is_empty();
        Self {
            errors,
            warnings,
            is_valid,
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: {} error(s), {} warning(s)",
            if self.is_valid { "valid" } else { "invalid" },
            self.errors.len(),
            self.warnings.len()
        )?;
        for e in &self.errors {
            writeln!(f, "error   {}: {}", e.path, e.message)?;
        }
        for w in &self.warnings {
            writeln!(f, "warning {}: {}", w.path, w.message)?;
        }
        Ok(())
    }
}

fn type_name(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn expect_object<'a>(value: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    value
        .as_object()
        .ok_or_else(|| Error::schema(path, format!("expected object, found {}", type_name(value))))
}

fn expect_array<'a>(value: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    value
        .as_array()
        .ok_or_else(|| Error::schema(path, format!("expected array, found {}", type_name(value))))
}

fn required<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::schema(child_path(path, key), "missing required field"))
}

fn optional_bool(obj: &Map<String, Value>, key: &str, path: &str, default: bool) -> Result<bool> {
    match obj.get(key) {
        None => Ok(default),
        Some(Value::Bool(b)) => Ok(*b),
        Some(other) => Err(Error::schema(
            child_path(path, key),
            format!("expected boolean, found {}", type_name(other)),
        )),
    }
}

fn parse_episodes(value: &Value, path: &str) -> Result<Vec<f64>> {
    expect_array(value, path)?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_f64().ok_or_else(|| {
                Error::schema(
                    index_path(path, i),
                    format!("expected number, found {}", type_name(v)),
                )
            })
        })
        .collect()
}

fn parse_metric_lists(value: &Value, path: &str) -> Result<BTreeMap<String, Vec<f64>>> {
    expect_object(value, path)?
        .iter()
        .map(|(name, list)| Ok((name.clone(), parse_episodes(list, &child_path(path, name))?)))
        .collect()
}

fn parse_descriptor(value: &Value, path: &str) -> Result<MetricDescriptor> {
    let obj = expect_object(value, path)?;
    let name = required(obj, "name", path)?;
    let name = name.as_str().ok_or_else(|| {
        Error::schema(
            child_path(path, "name"),
            format!("expected string, found {}", type_name(name)),
        )
    })?;
    let unit_interval = optional_bool(obj, "unit_interval", path, false)?;
    let higher_is_better = optional_bool(obj, "higher_is_better", path, true)?;
    MetricDescriptor::new(name, unit_interval, higher_is_better).map_err(|e| e.rebase(path))
}

fn parse_interval(value: &Value, path: &str) -> Result<IntervalRecord> {
    let obj = expect_object(value, path)?;
    let step = required(obj, "step_count", path)?;
    let step = step.as_u64().ok_or_else(|| {
        Error::schema(
            child_path(path, "step_count"),
            format!("expected non-negative integer, found {step}"),
        )
    })?;
    let metrics_path = child_path(path, "metrics");
    let metrics = parse_metric_lists(required(obj, "metrics", path)?, &metrics_path)?;
    if !metrics.contains_key(RETURN_METRIC) {
        return Err(Error::schema(
            child_path(&metrics_path, RETURN_METRIC),
            "missing required metric \"return\"",
        ));
    }
    IntervalRecord::new(step, metrics).map_err(|e| e.rebase(path))
}

fn parse_run(value: &Value, path: &str) -> Result<RunRecord> {
    let obj = expect_object(value, path)?;
    let intervals_path = child_path(path, "intervals");
    let intervals = expect_array(required(obj, "intervals", path)?, &intervals_path)?
        .iter()
        .enumerate()
        .map(|(i, v)| parse_interval(v, &index_path(&intervals_path, i)))
        .collect::<Result<Vec<_>>>()?;
    let absolute = match obj.get("absolute") {
        None | Some(Value::Null) => None,
        Some(v) => {
            let abs_path = child_path(path, "absolute");
            let abs = expect_object(v, &abs_path)?;
            let metrics_path = child_path(&abs_path, "metrics");
            let metrics = parse_metric_lists(required(abs, "metrics", &abs_path)?, &metrics_path)?;
            Some(AbsoluteRecord::new(metrics).map_err(|e| e.rebase(&abs_path))?)
        }
    };
    RunRecord::new(intervals, absolute).map_err(|e| e.rebase(path))
}

/// Parses and fully validates a canonical log document.
///
/// Unknown top-level keys are kept in the metadata map (non-string values as
/// their JSON text).
pub fn parse_experiment_log(bytes: &[u8]) -> Result<ExperimentLog> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::MalformedJson(format!("input is not UTF-8: {e}")))?;
    let root: Value = serde_json::from_str(text).map_err(|e| Error::MalformedJson(e.to_string()))?;
    let root = expect_object(&root, "$")?;

    if let Some(version) = root.get("version") {
        if version.as_str() != Some(FORMAT_VERSION) {
            return Err(Error::schema(
                "$.version",
                format!("unsupported version {version}, expected \"{FORMAT_VERSION}\""),
            ));
        }
    }

    let environments_value = required(root, "environments", "$")?;

    let metrics_value = required(root, "metrics", "$")?;
    let metrics = expect_array(metrics_value, "$.metrics")?
        .iter()
        .enumerate()
        .map(|(i, v)| parse_descriptor(v, &index_path("$.metrics", i)))
        .collect::<Result<Vec<_>>>()?;
    if !metrics.iter().any(|m| m.name() == RETURN_METRIC) {
        return Err(Error::schema(
            "$.metrics",
            "a \"return\" metric descriptor is mandatory",
        ));
    }

    let mut environments = EnvironmentMap::new();
    for (env, tasks) in expect_object(environments_value, "$.environments")? {
        let env_path = child_path("$.environments", env);
        let env_entry = environments.entry(env.clone()).or_default();
        for (task, algorithms) in expect_object(tasks, &env_path)? {
            let task_path = child_path(&env_path, task);
            let task_entry = env_entry.entry(task.clone()).or_default();
            for (algorithm, runs) in expect_object(algorithms, &task_path)? {
                let group_path = child_path(&task_path, algorithm);
                let group = task_entry.entry(algorithm.clone()).or_default();
                for (run_id, run) in expect_object(runs, &group_path)? {
                    group.insert(run_id.clone(), parse_run(run, &child_path(&group_path, run_id))?);
                }
            }
        }
    }

    let mut metadata = BTreeMap::new();
    if let Some(meta) = root.get("metadata") {
        for (key, value) in expect_object(meta, "$.metadata")? {
            let s = value.as_str().ok_or_else(|| {
                Error::schema(
                    child_path("$.metadata", key),
                    format!("expected string, found {}", type_name(value)),
                )
            })?;
            metadata.insert(key.clone(), s.to_string());
        }
    }
    for (key, value) in root {
        if KNOWN_KEYS.contains(&key.as_str()) {
            continue;
        }
        let text = match value {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        metadata.entry(key.clone()).or_insert(text);
    }

    ExperimentLog::new(metrics, environments, metadata)
}

fn metric_lists_value(metrics: &BTreeMap<String, Vec<f64>>) -> Value {
    let mut map = Map::new();
    for (name, values) in metrics {
        map.insert(
            name.clone(),
            Value::Array(
                values
                    .iter()
                    .map(|&v| serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number))
                    .collect(),
            ),
        );
    }
    Value::Object(map)
}

/// Canonical JSON value for a log.
pub fn log_to_value(log: &ExperimentLog) -> Value {
    let metrics: Vec<Value> = log
        .metrics()
        .iter()
        .map(|m| {
            serde_json::json!({
                "name": m.name(),
                "unit_interval": m.unit_interval(),
                "higher_is_better": m.higher_is_better(),
            })
        })
        .collect();

    let mut envs = Map::new();
    for (env, tasks) in log.environments() {
        let mut task_map = Map::new();
        for (task, algorithms) in tasks {
            let mut alg_map = Map::new();
            for (algorithm, runs) in algorithms {
                let mut run_map = Map::new();
                for (run_id, run) in runs {
                    let intervals: Vec<Value> = run
                        .intervals()
                        .iter()
                        .map(|i| {
                            serde_json::json!({
                                "step_count": i.step_count(),
                                "metrics": metric_lists_value(i.metrics()),
                            })
                        })
                        .collect();
                    let mut run_obj = Map::new();
                    run_obj.insert("intervals".into(), Value::Array(intervals));
                    if let Some(abs) = run.absolute() {
                        run_obj.insert(
                            "absolute".into(),
                            serde_json::json!({ "metrics": metric_lists_value(abs.metrics()) }),
                        );
                    }
                    run_map.insert(run_id.clone(), Value::Object(run_obj));
                }
                alg_map.insert(algorithm.clone(), Value::Object(run_map));
            }
            task_map.insert(task.clone(), Value::Object(alg_map));
        }
        envs.insert(env.clone(), Value::Object(task_map));
    }

    serde_json::json!({
        "version": FORMAT_VERSION,
        "metrics": metrics,
        "environments": envs,
        "metadata": log.metadata(),
    })
}

/// Serialises a log to compact canonical JSON (keys sorted, shortest
/// round-trip floats).
pub fn serialize_experiment_log(log: &ExperimentLog) -> String {
    log_to_value(log).to_string()
}

/// Soft checks against the protocol configuration. Never fails.
pub fn validate_log(log: &ExperimentLog, config: &ProtocolConfig) -> ValidationReport {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    if let Err(e) = config.validate() {
        errors.push(Finding::new("config", e.to_string()));
    }

    let declared: BTreeSet<&str> = log.metrics().iter().map(|m| m.name()).collect();
    let mut undeclared = BTreeSet::new();

    for (env, task, algorithm, runs) in log.groups() {
        let group_path = child_path(
            &child_path(&child_path("$.environments", env), task),
            algorithm,
        );
        let reference: Option<Vec<BTreeSet<&str>>> = runs.values().next().map(|run| {
            run.intervals()
                .iter()
                .map(|i| i.metrics().keys().map(String::as_str).collect())
                .collect()
        });
        for (run_id, run) in runs {
            let run_path = child_path(&group_path, run_id);
            for (i, interval) in run.intervals().iter().enumerate() {
                let path = index_path(&child_path(&run_path, "intervals"), i);
                let n = interval.episode_count();
                if n != config.eval_episodes {
                    warnings.push(Finding::new(
                        path.clone(),
                        format!("episode count {n} ≠ {}", config.eval_episodes),
                    ));
                }
                let names: BTreeSet<&str> = interval.metrics().keys().map(String::as_str).collect();
                if let Some(expected) = reference.as_ref().and_then(|r| r.get(i)) {
                    if &names != expected {
                        warnings.push(Finding::new(
                            path.clone(),
                            format!(
                                "metric names {:?} differ from the group's first run {:?}",
                                names, expected
                            ),
                        ));
                    }
                }
                for name in names {
                    if !declared.contains(name) {
                        undeclared.insert(name.to_string());
                    }
                }
            }
            match run.absolute() {
                None => warnings.push(Finding::new(
                    run_path.clone(),
                    format!(
                        "missing absolute block: the absolute metric needs {} episodes of the \
                         best policy found during training",
                        config.absolute_episodes
                    ),
                )),
                Some(abs) => {
                    let abs_path = child_path(&run_path, "absolute");
                    for (name, values) in abs.metrics() {
                        if values.len() != config.absolute_episodes {
                            warnings.push(Finding::new(
                                child_path(&child_path(&abs_path, "metrics"), name),
                                format!(
                                    "absolute episode count {} ≠ {}",
                                    values.len(),
                                    config.absolute_episodes
                                ),
                            ));
                        }
                        if !declared.contains(name.as_str()) {
                            undeclared.insert(name.clone());
                        }
                    }
                }
            }
        }
    }
    for name in undeclared {
        warnings.push(Finding::new(
            "$.metrics",
            format!("metric `{name}` is recorded but not declared"),
        ));
    }

    ValidationReport::from_findings(errors, warnings)
}

/// Unions several logs. Metadata keys are prefixed with `log<i>.` after the
/// source's position.
pub fn merge_logs(logs: &[ExperimentLog]) -> Result<ExperimentLog> {
    if logs.is_empty() {
        return Err(Error::schema("$", "at least one log required"));
    }
    let mut metrics: Vec<MetricDescriptor> = Vec::new();
    let mut environments = EnvironmentMap::new();
    let mut metadata = BTreeMap::new();

    for (source, log) in logs.iter().enumerate() {
        for m in log.metrics() {
            match metrics.iter().find(|known| known.name() == m.name()) {
                None => metrics.push(m.clone()),
                Some(known) if known == m => {}
                Some(_) => {
                    return Err(Error::schema(
                        "$.metrics",
                        format!("metric `{}` is declared differently by log {source}", m.name()),
                    ))
                }
            }
        }
        for (env, task, algorithm, runs) in log.groups() {
            let group = environments
                .entry(env.to_string())
                .or_default()
                .entry(task.to_string())
                .or_default()
                .entry(algorithm.to_string())
                .or_default();
            for (run_id, run) in runs {
                if group.contains_key(run_id) {
                    let path = child_path(
                        &child_path(
                            &child_path(&child_path("$.environments", env), task),
                            algorithm,
                        ),
                        run_id,
                    );
                    return Err(Error::DuplicateRun(path));
                }
                group.insert(run_id.clone(), run.clone());
            }
        }
        for (key, value) in log.metadata() {
            metadata.insert(format!("log{source}.{key}"), value.clone());
        }
    }
    metrics.sort_by(|a, b| a.name().cmp(b.name()));
    ExperimentLog::new(metrics, environments, metadata)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "version": "1",
        "metrics": [{"name": "return", "unit_interval": false, "higher_is_better": true}],
        "environments": {"smac": {"3m": {"qmix": {"seed_1": {
            "intervals": [{"step_count": 0, "metrics": {"return": [1.0]}}]
        }}}}},
        "metadata": {"framework": "x"}
    }"#;

    #[test]
    fn minimal_document() {
        let log = parse_experiment_log(MINIMAL.as_bytes()).unwrap();
        assert_eq!(log.environments().len(), 1);
        assert_eq!(log.tasks().len(), 1);
        assert_eq!(log.algorithms().len(), 1);
        let runs = log.group("smac", "3m", "qmix").unwrap();
        assert_eq!(runs.len(), 1);
        assert_eq!(runs["seed_1"].intervals().len(), 1);
        assert_eq!(log.metadata()["framework"], "x");
    }

    #[test]
    fn empty_object_is_missing_environments() {
        let err = parse_experiment_log(b"{}").unwrap_err();
        assert_eq!(
            err,
            Error::SchemaViolation {
                path: "$.environments".into(),
                message: "missing required field".into()
            }
        );
    }

    #[test]
    fn malformed_and_non_utf8() {
        assert!(matches!(parse_experiment_log(b"{"), Err(Error::MalformedJson(_))));
        assert!(matches!(parse_experiment_log(&[0xff, 0xfe]), Err(Error::MalformedJson(_))));
        let huge = MINIMAL.replace("[1.0]", "[1e400]");
        assert!(matches!(parse_experiment_log(huge.as_bytes()), Err(Error::MalformedJson(_))));
    }

    #[test]
    fn mismatched_step_grids() {
        let doc = r#"{"metrics":[{"name":"return"}],"environments":{"e":{"t":{"a":{
            "r1":{"intervals":[{"step_count":0,"metrics":{"return":[1]}},{"step_count":10000,"metrics":{"return":[1]}}]},
            "r2":{"intervals":[{"step_count":0,"metrics":{"return":[1]}},{"step_count":20000,"metrics":{"return":[1]}}]}
        }}}}}"#;
        let err = parse_experiment_log(doc.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation { .. }));
        assert!(err.to_string().contains("runs share an identical ordered sequence"), "{err}");
    }

    #[test]
    fn wrong_types_name_their_path() {
        let doc = MINIMAL.replace("\"step_count\": 0", "\"step_count\": -5");
        let err = parse_experiment_log(doc.as_bytes()).unwrap_err();
        assert!(
            matches!(&err, Error::SchemaViolation { path, .. }
                if path == "$.environments.smac[\"3m\"].qmix.seed_1.intervals[0].step_count"),
            "{err}"
        );
        let doc = MINIMAL.replace("[1.0]", "[\"1.0\"]");
        let err = parse_experiment_log(doc.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("metrics.return[0]"), "{err}");
    }

    #[test]
    fn return_is_mandatory() {
        let doc = MINIMAL.replace("{\"return\": [1.0]}", "{\"win_rate\": [1.0]}");
        let err = parse_experiment_log(doc.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("return"), "{err}");
        let doc = MINIMAL.replace("\"name\": \"return\"", "\"name\": \"win_rate\"");
        assert!(parse_experiment_log(doc.as_bytes()).is_err());
    }

    #[test]
    fn unknown_top_level_keys_go_to_metadata() {
        let doc = MINIMAL.replacen('{', "{\"notes\": {\"k\": 1}, \"owner\": \"lab\",", 1);
        let log = parse_experiment_log(doc.as_bytes()).unwrap();
        assert_eq!(log.metadata()["owner"], "lab");
        assert_eq!(log.metadata()["notes"], "{\"k\":1}");
    }

    #[test]
    fn round_trip_minimal() {
        let log = parse_experiment_log(MINIMAL.as_bytes()).unwrap();
        let text = serialize_experiment_log(&log);
        assert_eq!(parse_experiment_log(text.as_bytes()).unwrap(), log);
    }

    #[test]
    fn validate_flags_short_intervals_and_missing_absolute() {
        let log = parse_experiment_log(MINIMAL.as_bytes()).unwrap();
        let report = validate_log(&log, &ProtocolConfig::default());
        assert!(report.is_valid);
        assert!(report.warnings.iter().any(|w| w.message == "episode count 1 ≠ 32"));
        assert!(report.warnings.iter().any(|w| w.message.contains("missing absolute block")));
        assert_eq!(report, validate_log(&log, &ProtocolConfig::default()));
    }

    #[test]
    fn merge_rules() {
        let log = parse_experiment_log(MINIMAL.as_bytes()).unwrap();
        assert!(matches!(merge_logs(&[]), Err(Error::SchemaViolation { .. })));
        assert!(matches!(merge_logs(&[log.clone(), log.clone()]), Err(Error::DuplicateRun(_))));
        let other = parse_experiment_log(MINIMAL.replace("qmix", "vdn").as_bytes()).unwrap();
        let merged = merge_logs(&[log, other]).unwrap();
        assert_eq!(merged.algorithms().len(), 2);
        assert_eq!(merged.metadata()["log0.framework"], "x");
        assert_eq!(merged.metadata()["log1.framework"], "x");
    }
}
