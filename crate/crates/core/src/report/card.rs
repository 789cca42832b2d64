use std::fmt::Write as _;

use super::table::TableFormat;
use crate::model::ProtocolConfig;

/// Section headings and line items of the experimental-details card.
pub const TEMPLATE: &[(&str, &[&str])] = &[
    (
        "Hyperparameters",
        &[
            "Discount factor",
            "Batch size",
            "Replay buffer size",
            "Minimum replay buffer size before updating",
            "N steps bootstrapping",
            "Target network update period",
            "Epsilon schedule (decay steps, epsilon start, epsilon min)",
            "Value Network architecture",
            "Value Network initializer",
            "Value Network Layer size",
            "Value Network Layer normalisation",
            "Mixing network (architecture, size, activation)",
            "Hypernetworks (size, activation)",
            "Parameter sharing",
            "Parallel workers",
            "Seed range",
        ],
    ),
    (
        "Code-level optimisations",
        &[
            "Optimiser (type, parameters)",
            "Learning rate",
            "Reward normalisation",
            "Death masking",
            "Clipped updates",
            "Eligibility trace",
            "TD(lambda) value",
        ],
    ),
    (
        "Computational resources",
        &[
            "Average Wall-clock time per algorithm",
            "CPUs per experiment",
            "GPU per experiment",
            "RAM per experiment",
        ],
    ),
    (
        "Evaluation protocol",
        &[
            "Total training (timesteps)",
            "Evaluation interval (timesteps)",
            "Independent evaluation episodes",
            "Absolute metric (evaluation episodes, aggregation method)",
            "Local aggregation method",
            "Global aggregation method",
            "Metrics (per environment)",
            "Exploration behaviour",
        ],
    ),
    ("Framework", &["Name (version)"]),
    (
        "Environment settings",
        &[
            "Environment name (version)",
            "Env related configs",
            "Training configs",
            "In sample evaluation configs",
            "Out of sample evaluation configs",
        ],
    ),
];

/// Heading for fields not in the template.
pub const ADDITIONAL: &str = "Additional";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardSection {
    pub heading: String,
    pub fields: Vec<(String, Option<String>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportCard {
    sections: Vec<CardSection>,
}

impl Default for ReportCard {
    fn default() -> Self {
        let sections = TEMPLATE
            .iter()
            .map(|(heading, fields)| CardSection {
                heading: heading.to_string(),
                fields: fields.iter().map(|f| (f.to_string(), None)).collect(),
            })
            .collect();
        Self { sections }
    }
}

impl ReportCard {
    pub fn sections(&self) -> &[CardSection] {
        &self.sections
    }

    /// Sets a field by name. Names outside the template land in a trailing
    /// "Additional" section.
    pub fn set(&mut self, field: &str, value: impl Into<String>) -> &mut Self {
        let value = Some(value.into());
        for section in &mut self.sections {
            if let Some(slot) = section.fields.iter_mut().find(|(name, _)| name == field) {
                slot.1 = value;
                return self;
            }
        }
        if self.sections.last().map(|s| s.heading.as_str()) != Some(ADDITIONAL) {
            self.sections.push(CardSection {
                heading: ADDITIONAL.to_string(),
                fields: Vec::new(),
            });
        }
        let extra = self.sections.last_mut().expect("additional section");
        extra.fields.push((field.to_string(), value));
        self
    }

    pub fn get(&self, field: &str) -> Option<&str> {
        self.sections
            .iter()
            .flat_map(|s| &s.fields)
            .find(|(name, _)| name == field)
            .and_then(|(_, v)| v.as_deref())
    }

    /// Fills the evaluation-protocol rows from a configuration.
    pub fn with_protocol(mut self, config: &ProtocolConfig) -> Self {
        self.set(
            "Total training (timesteps)",
            format!(
                "{} (off-policy), {} (on-policy)",
                config.timesteps_off_policy, config.timesteps_on_policy
            ),
        );
        self.set("Evaluation interval (timesteps)", config.eval_interval.to_string());
        self.set("Independent evaluation episodes", config.eval_episodes.to_string());
        self.set(
            "Absolute metric (evaluation episodes, aggregation method)",
            format!("{}, mean", config.absolute_episodes),
        );
        self.set(
            "Global aggregation method",
            format!(
                "IQM with {}% stratified bootstrap CI ({} replicates)",
                config.ci_level * 100.0,
                config.bootstrap_replicates
            ),
        );
        self
    }
}

fn latex_escape(text: &str) -> String {
    text.replace('\\', "\\textbackslash{}")
        .replace('&', "\\&")
        .replace('%', "\\%")
        .replace('_', "\\_")
        .replace('#', "\\#")
        .replace('$', "\\$")
}

/// Renders every section in order; unset fields are left blank.
pub fn render_report_card(card: &ReportCard, format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Markdown => {
            for (i, section) in card.sections.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "## {}\n", section.heading);
                out.push_str("| Field | Value |\n| --- | --- |\n");
                for (name, value) in &section.fields {
                    let _ = writeln!(
                        out,
                        "| {} | {} |",
                        name.replace('|', "\\|"),
                        value.as_deref().unwrap_or("").replace('|', "\\|")
                    );
                }
            }
        }
        TableFormat::Latex => {
            out.push_str("\\begin{tabular}{ll}\n\\hline\n");
            for section in &card.sections {
                let _ = writeln!(out, "\\textbf{{{}}} & \\\\", latex_escape(&section.heading));
                out.push_str("\\hline\n");
                for (name, value) in &section.fields {
                    let _ = writeln!(
                        out,
                        "{} & {} \\\\",
                        latex_escape(name),
                        latex_escape(value.as_deref().unwrap_or(""))
                    );
                }
                out.push_str("\\hline\n");
            }
            out.push_str("\\end{tabular}\n");
        }
    }
    out
}
