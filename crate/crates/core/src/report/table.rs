use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::aggregate::{AggregateReport, Estimate};
use crate::error::{Error, Result};
use crate::model::{ConfidenceInterval, TaskId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Markdown,
    Latex,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "md" | "markdown" => Ok(TableFormat::Markdown),
            "tex" | "latex" => Ok(TableFormat::Latex),
            other => Err(Error::InvalidArgument(format!("unknown table format `{other}` (expected md or tex)"))),
        }
    }
}

pub const MAX_PRECISION: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSpec {
    format: TableFormat,
    precision: usize,
    caption: String,
}

impl TableSpec {
    pub fn new(format: TableFormat, precision: usize, caption: impl Into<String>) -> Result<Self> {
        if precision > MAX_PRECISION {
            return Err(Error::InvalidArgument(format!(
                "precision {precision} outside [0, {MAX_PRECISION}]"
            )));
        }
        Ok(Self {
            format,
            precision,
            caption: caption.into(),
        })
    }

    pub fn format(&self) -> TableFormat {
        self.format
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn caption(&self) -> &str {
        &self.caption
    }
}

impl Default for TableSpec {
    fn default() -> Self {
        Self {
            format: TableFormat::Markdown,
            precision: 3,
            caption: String::new(),
        }
    }
}

/// Fixed-point text of `value`, rounding the exact binary value half to even.
pub fn format_number(value: f64, precision: usize) -> String {
    let text = format!("{value:.precision$}");
    match text.strip_prefix('-') {
        Some(rest) if rest.chars().all(|c| c == '0' || c == '.') => rest.to_string(),
        _ => text,
    }
}

/// `"point (lower, upper)"`.
pub fn format_cell(point: f64, ci: &ConfidenceInterval, precision: usize) -> String {
    format!(
        "{} ({}, {})",
        format_number(point, precision),
        format_number(ci.lower(), precision),
        format_number(ci.upper(), precision)
    )
}

fn escape_markdown(text: &str) -> String {
    text.replace('|', "\\|")
}

fn escape_latex(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\textbackslash{}"),
            '&' | '%' | '$' | '#' | '_' | '{' | '}' => {
                out.push('\\');
                out.push(c);
            }
            '~' => out.push_str("\\textasciitilde{}"),
            '^' => out.push_str("\\textasciicircum{}"),
            _ => out.push(c),
        }
    }
    out
}

fn render(header: &[String], rows: &[Vec<String>], spec: &TableSpec) -> String {
    let mut out = String::new();
    match spec.format {
        TableFormat::Markdown => {
            let line = |cells: &[String]| {
                let cells: Vec<String> = cells.iter().map(|c| escape_markdown(c)).collect();
                format!("| {} |\n", cells.join(" | "))
            };
            out.push_str(&line(header));
            out.push_str(&format!("|{}\n", " --- |".repeat(header.len())));
            for row in rows {
                out.push_str(&line(row));
            }
            if !spec.caption.is_empty() {
                let _ = write!(out, "\nTable: {}\n", spec.caption);
            }
        }
        TableFormat::Latex => {
            let line = |cells: &[String]| {
                let cells: Vec<String> = cells.iter().map(|c| escape_latex(c)).collect();
                cells.join(" & ")
            };
            out.push_str("\\begin{table}[h]\n\\centering\n");
            if !spec.caption.is_empty() {
                let _ = writeln!(out, "\\caption{{{}}}", escape_latex(&spec.caption));
            }
            let _ = writeln!(out, "\\begin{{tabular}}{{{}}}", "l".repeat(header.len()));
            out.push_str("\\hline\n");
            let _ = writeln!(out, "{} \\\\", line(header));
            out.push_str("\\hline\n");
            let body: Vec<String> = rows.iter().map(|r| line(r)).collect();
            if !body.is_empty() {
                out.push_str(&body.join(" \\\\\n"));
                out.push_str(" \\\\\n");
            }
            out.push_str("\\hline\n\\end{tabular}\n\\end{table}\n");
        }
    }
    out
}

/// Per-task results: algorithm → task → estimate.
pub type TaskResults = BTreeMap<String, BTreeMap<TaskId, Estimate>>;

/// One row per task, one column per algorithm (lexicographic).
pub fn render_task_table(data: &TaskResults, spec: &TableSpec) -> Result<String> {
    let mut algs = data.iter();
    let Some((first_alg, first_tasks)) = algs.next() else {
        return Err(Error::EmptyInput("no algorithms to tabulate".into()));
    };
    for (alg, tasks) in algs {
        if !tasks.keys().eq(first_tasks.keys()) {
            return Err(Error::TaskListMismatch(format!(
                "`{first_alg}` and `{alg}` report different tasks"
            )));
        }
    }
    let mut header = vec!["Environment".to_string(), "Task".to_string()];
    header.extend(data.keys().cloned());
    let rows: Vec<Vec<String>> = first_tasks
        .keys()
        .map(|task| {
            let mut row = vec![task.env.clone(), task.task.clone()];
            row.extend(
                data.values()
                    .map(|tasks| format_cell(tasks[task].point, &tasks[task].ci, spec.precision)),
            );
            row
        })
        .collect();
    Ok(render(&header, &rows, spec))
}

const STAT_ORDER: [&str; 4] = ["iqm", "mean", "median", "optimality_gap"];

fn stat_heading(name: &str) -> String {
    match name {
        "iqm" => "IQM".into(),
        "mean" => "Mean".into(),
        "median" => "Median".into(),
        "optimality_gap" => "Optimality gap".into(),
        other => other.to_string(),
    }
}

/// One row per algorithm, one column per statistic.
pub fn render_environment_table(report: &AggregateReport, spec: &TableSpec) -> Result<String> {
    let mut algs = report.entries.iter();
    let Some((first_alg, first_stats)) = algs.next() else {
        return Err(Error::EmptyInput("report has no algorithms".into()));
    };
    for (alg, stats) in algs {
        if !stats.keys().eq(first_stats.keys()) {
            return Err(Error::TaskListMismatch(format!(
                "`{first_alg}` and `{alg}` report different statistics"
            )));
        }
    }
    let mut stats: Vec<&str> = STAT_ORDER
        .iter()
        .copied()
        .filter(|s| first_stats.contains_key(*s))
        .collect();
    stats.extend(
        first_stats
            .keys()
            .map(String::as_str)
            .filter(|s| !STAT_ORDER.contains(s)),
    );
    let mut header = vec!["Algorithm".to_string()];
    header.extend(stats.iter().map(|s| stat_heading(s)));
    let rows: Vec<Vec<String>> = report
        .entries
        .iter()
        .map(|(alg, entries)| {
            let mut row = vec![alg.clone()];
            row.extend(
                stats
                    .iter()
                    .map(|s| format_cell(entries[*s].point, &entries[*s].ci, spec.precision)),
            );
            row
        })
        .collect();
    Ok(render(&header, &rows, spec))
}
