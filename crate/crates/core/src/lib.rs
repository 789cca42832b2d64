//! Evaluation toolkit for multi-run, multi-task reinforcement-learning
//! experiments.
//!
//! The pipeline is:
//!
//! 1. [`ingest`] parses a canonical JSON log into an [`ExperimentLog`].
//! 2. [`metrics`] normalises absolute returns per task into an
//!    [`EvalMatrix`] (runs × tasks).
//! 3. [`aggregate`] computes IQM, mean, median and optimality gap with
//!    stratified-bootstrap intervals; [`compare`] adds probability of
//!    improvement, performance profiles and sample-efficiency curves.
//! 4. [`lint`] checks a log against the evaluation protocol and [`report`]
//!    renders tables, report cards, CSV plot data and SVG charts.
//!
//! Bootstrap replicates run on a rayon pool when the `parallel` feature is
//! enabled (the default). Results are bit-identical either way.

pub mod aggregate;
pub mod compare;
mod error;
pub mod ingest;
pub mod lint;
pub mod metrics;
pub mod model;
pub mod report;
pub mod resample;
pub mod synth;

pub use aggregate::{
    aggregate_scores, iqm, optimality_gap, pooled_statistic, stratified_bootstrap_ci, AggregateReport,
    BootstrapOptions, Estimate, Statistic,
};
pub use compare::{
    performance_profile, probability_of_improvement, sample_efficiency_curve, Alignment, CurveKind, ImprovementScore,
    ProfileCurve,
};
pub use error::{Error, Result};
pub use ingest::{merge_logs, parse_experiment_log, serialize_experiment_log, validate_log, ValidationReport};
pub use lint::{lint_protocol, LintReport, LintStatus, PolicyClass};
pub use metrics::{build_evaluation_matrix, min_max_normalise, task_score_bounds, Pooling, TaskBounds};
pub use model::{
    CiMethod, ConfidenceInterval, EvalMatrix, ExperimentLog, MetricDescriptor, ProtocolConfig, TaskId,
};
pub use resample::Execution;
