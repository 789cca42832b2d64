//! Rendering: result tables, the experimental-details card, plot data and
//! SVG charts. All output is deterministic for fixed input.

mod card;
mod plot;
mod table;

pub use card::{render_report_card, CardSection, ReportCard, ADDITIONAL, TEMPLATE};
pub use plot::{emit_plot_data, parse_plot_data, render_svg, SvgStyle, CSV_HEADER};
pub use table::{
    format_cell, format_number, render_environment_table, render_task_table, TableFormat, TableSpec, TaskResults,
};
