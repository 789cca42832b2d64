//! `marleval` command-line front end. Every subcommand reads files, calls
//! into the library and writes the result; no statistics live here.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use marleval::compare::{default_taus, CurveKind};
use marleval::ingest::validate_log;
use marleval::lint::parse_policy_classes;
use marleval::metrics::{build_evaluation_matrix_for, SeriesStatistic};
use marleval::report::{
    emit_plot_data, parse_plot_data, render_environment_table, render_report_card, render_svg, ReportCard, SvgStyle,
    TableFormat, TableSpec,
};
use marleval::synth::{generate_synthetic_log, oracle_iqm, oracle_probability_of_improvement, SynthSpec};
use marleval::{
    aggregate_scores, lint_protocol, parse_experiment_log, performance_profile, probability_of_improvement,
    sample_efficiency_curve, serialize_experiment_log, AggregateReport, Alignment, BootstrapOptions, CiMethod,
    EvalMatrix, ExperimentLog, Pooling, ProtocolConfig, Statistic, TaskId,
};

/// Exit status 1: bad data or a failed lint. Exit status 2: bad usage or
/// unreadable input.
#[derive(Debug)]
enum Failure {
    Data(anyhow::Error),
    Usage(anyhow::Error),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Data(e) | Failure::Usage(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<marleval::Error> for Failure {
    fn from(e: marleval::Error) -> Self {
        match e {
            marleval::Error::InvalidArgument(_) => Failure::Usage(e.into()),
            other => Failure::Data(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

#[derive(Parser)]
#[command(name = "marleval", version, about = "Evaluate multi-run, multi-task experiment logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a log against the schema and report structural warnings
    Validate {
        log: PathBuf,
        /// Protocol configuration JSON (field names as in the protocol config)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Emit the report as JSON
        #[arg(long)]
        json: bool,
    },
    /// Check a log against the evaluation protocol; exits 1 if any check fails
    Lint {
        log: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// JSON object mapping algorithm name to on_policy, off_policy or unknown
        #[arg(long = "policy-class")]
        policy_class: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Aggregate normalised absolute scores with stratified-bootstrap intervals
    Aggregate {
        log: PathBuf,
        #[command(flatten)]
        select: Selection,
        /// Comma-separated statistics: iqm, mean, median, optimality_gap
        #[arg(long, value_delimiter = ',', default_value = "iqm,mean,median,optimality_gap")]
        stats: Vec<String>,
        /// Threshold for the optimality gap
        #[arg(long)]
        gamma: Option<f64>,
        #[command(flatten)]
        boot: Bootstrap,
        #[arg(long)]
        out: PathBuf,
    },
    /// Probability that a run of the candidate beats a run of the baseline
    Compare {
        log: PathBuf,
        #[arg(long)]
        candidate: String,
        #[arg(long)]
        baseline: String,
        #[command(flatten)]
        select: Selection,
        #[command(flatten)]
        boot: Bootstrap,
    },
    /// Performance profile of run scores as CSV
    Profile {
        log: PathBuf,
        #[command(flatten)]
        select: Selection,
        /// Algorithm to profile; every algorithm when omitted, one file each
        /// named `<out-stem>_<algorithm>.<ext>`
        #[arg(long)]
        algorithm: Option<String>,
        /// Number of evenly spaced thresholds on [0, 1]
        #[arg(long = "tau-points", default_value_t = 101)]
        tau_points: usize,
        #[command(flatten)]
        boot: Bootstrap,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample-efficiency curve of normalised interval scores as CSV
    Curves {
        log: PathBuf,
        #[arg(long)]
        algorithm: String,
        #[arg(long, default_value = "return")]
        metric: String,
        #[arg(long, value_enum, default_value_t = PoolingArg::Global)]
        pooling: PoolingArg,
        #[arg(long, value_enum, default_value_t = SeriesArg::Iqm)]
        statistic: SeriesArg,
        /// How to handle tasks evaluated at different steps
        #[arg(long, value_enum, default_value_t = AlignArg::Strict)]
        align: AlignArg,
        #[command(flatten)]
        boot: Bootstrap,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render an aggregate report as a table
    Tables {
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Md)]
        format: FormatArg,
        #[arg(long, default_value_t = 3)]
        precision: usize,
        #[arg(long, default_value = "")]
        caption: String,
    },
    /// Print the experimental-details report card template
    Card {
        #[arg(long, value_enum, default_value_t = FormatArg::Md)]
        format: FormatArg,
        /// Prefill the evaluation-protocol rows from this configuration
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Draw plot-data CSV files as one SVG chart
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Curve kind of every input file
        #[arg(long, value_enum, default_value_t = KindArg::Profile)]
        kind: KindArg,
        #[arg(long)]
        title: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic log, or run a reference oracle
    Synth(SynthArgs),
}

#[derive(Args)]
struct Selection {
    #[arg(long, default_value = "return")]
    metric: String,
    /// Which raw values set each task's normalisation bounds
    #[arg(long, value_enum, default_value_t = PoolingArg::Global)]
    pooling: PoolingArg,
    /// Restrict to the tasks of one environment
    #[arg(long)]
    env: Option<String>,
}

#[derive(Args)]
struct Bootstrap {
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "ci-level")]
    ci_level: Option<f64>,
    /// Protocol configuration JSON supplying defaults for the flags above
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
struct SynthArgs {
    /// Generator spec JSON; the protocol-default spec when omitted
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, required = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    oracle: Option<SynthCommand>,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Reference implementations for cross-checking
    Oracle {
        #[command(subcommand)]
        which: Oracle,
    },
}

#[derive(Subcommand)]
enum Oracle {
    /// Interquartile mean of the given values
    Iqm {
        #[arg(required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
    },
    /// Probability of improvement from a JSON file `{"x": [[...]], "y": [[...]]}`
    /// holding one score column per task for each side
    Poi { input: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum PoolingArg {
    Global,
    AbsoluteOnly,
    IntervalsOnly,
}

impl From<PoolingArg> for Pooling {
    fn from(p: PoolingArg) -> Self {
        match p {
            PoolingArg::Global => Pooling::Global,
            PoolingArg::AbsoluteOnly => Pooling::AbsoluteOnly,
            PoolingArg::IntervalsOnly => Pooling::IntervalsOnly,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SeriesArg {
    Iqm,
    Mean,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlignArg {
    Strict,
    Intersect,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Md,
    Tex,
}

impl From<FormatArg> for TableFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Md => TableFormat::Markdown,
            FormatArg::Tex => TableFormat::Latex,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Profile,
    SampleEfficiency,
    IntervalSeries,
}

impl From<KindArg> for CurveKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Profile => CurveKind::PerformanceProfile,
            KindArg::SampleEfficiency => CurveKind::SampleEfficiency,
            KindArg::IntervalSeries => CurveKind::IntervalSeries,
        }
    }
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => Failure::Usage(anyhow::anyhow!("no such file: {}", path.display())),
        _ => Failure::Usage(anyhow::Error::new(e).context(format!("cannot read {}", path.display()))),
    })
}

fn read_text(path: &Path) -> CliResult<String> {
    String::from_utf8(read(path)?).map_err(|_| Failure::Data(anyhow::anyhow!("{} is not UTF-8", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::Usage)
}

fn load_log(path: &Path) -> CliResult<ExperimentLog> {
    parse_experiment_log(&read(path)?)
        .with_context(|| format!("in {}", path.display()))
        .map_err(Failure::Data)
}

fn load_config(path: Option<&Path>) -> CliResult<ProtocolConfig> {
    match path {
        None => Ok(ProtocolConfig::default()),
        Some(p) => ProtocolConfig::from_json(&read_text(p)?)
            .with_context(|| format!("in --config {}", p.display()))
            .map_err(Failure::Usage),
    }
}

fn bootstrap_config(boot: &Bootstrap) -> CliResult<ProtocolConfig> {
    let mut config = load_config(boot.config.as_deref())?;
    if let Some(r) = boot.replicates {
        config.bootstrap_replicates = r;
    }
    if let Some(s) = boot.seed {
        config.seed = s;
    }
    if let Some(l) = boot.ci_level {
        config.ci_level = l;
    }
    config.validate().context("invalid bootstrap flags").map_err(Failure::Usage)?;
    Ok(config)
}

fn selected_tasks(log: &ExperimentLog, env: Option<&str>) -> CliResult<Vec<TaskId>> {
    let tasks: Vec<TaskId> = log.tasks().into_iter().filter(|t| env.is_none_or(|e| t.env == e)).collect();
    if tasks.is_empty() {
        return Err(Failure::Usage(anyhow::anyhow!(
            "--env {}: no such environment in the log",
            env.unwrap_or_default()
        )));
    }
    Ok(tasks)
}

fn matrix(log: &ExperimentLog, tasks: &[TaskId], algorithm: &str, select: &Selection) -> CliResult<EvalMatrix> {
    let descriptor = log.descriptor_or_default(&select.metric);
    let build = build_evaluation_matrix_for(log, tasks, algorithm, &select.metric, select.pooling.into(), &descriptor)?;
    for w in &build.warnings {
        eprintln!("warning: {w}");
    }
    Ok(build.matrix)
}

fn validate(log: &Path, config: Option<&Path>, json: bool) -> CliResult {
    let config = load_config(config)?;
    let report = validate_log(&load_log(log)?, &config);
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serialisation"));
    } else {
        print!("{report}");
    }
    if report.is_valid {
        Ok(())
    } else {
        Err(Failure::Data(anyhow::anyhow!("{} is not valid", log.display())))
    }
}

fn lint(log: &Path, config: Option<&Path>, policy_class: Option<&Path>, json: bool) -> CliResult {
    let config = load_config(config)?;
    let classes = match policy_class {
        None => BTreeMap::new(),
        Some(p) => parse_policy_classes(&read_text(p)?)
            .with_context(|| format!("in --policy-class {}", p.display()))
            .map_err(Failure::Usage)?,
    };
    let report = lint_protocol(&load_log(log)?, &config, &classes);
    if json {
        println!("{}", report.to_json());
    } else {
        println!("{report}");
    }
    if report.has_failures() {
        Err(Failure::Data(anyhow::anyhow!("{} protocol check(s) failed", report.summary.fail)))
    } else {
        Ok(())
    }
}

fn aggregate(
    log: &Path,
    select: &Selection,
    stats: &[String],
    gamma: Option<f64>,
    boot: &Bootstrap,
    out: &Path,
) -> CliResult {
    let mut config = bootstrap_config(boot)?;
    if let Some(g) = gamma {
        config.gamma = g;
    }
    let statistics = stats
        .iter()
        .map(|s| s.trim().parse::<Statistic>().map(|s| s.with_gamma(config.gamma)))
        .collect::<Result<Vec<_>, _>>()
        .context("--stats")
        .map_err(Failure::Usage)?;
    let log = load_log(log)?;
    let tasks = selected_tasks(&log, select.env.as_deref())?;
    let mut matrices = BTreeMap::new();
    for alg in log.algorithms() {
        if log.tasks_for(&alg).iter().any(|t| tasks.contains(t)) {
            let m = matrix(&log, &tasks, &alg, select)?;
            matrices.insert(alg, m);
        }
    }
    let report = aggregate_scores(&matrices, &statistics, &config)?;
    write(out, &report.to_json())
}

fn compare(log: &Path, candidate: &str, baseline: &str, select: &Selection, boot: &Bootstrap) -> CliResult {
    let config = bootstrap_config(boot)?;
    let log = load_log(log)?;
    let tasks = selected_tasks(&log, select.env.as_deref())?;
    let x = matrix(&log, &tasks, candidate, select)?;
    let y = matrix(&log, &tasks, baseline, select)?;
    let score = probability_of_improvement(&x, &y, &BootstrapOptions::from_config(&config))?;
    println!("{}", score.to_json());
    Ok(())
}

fn per_algorithm_path(out: &Path, algorithm: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_{algorithm}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{algorithm}"),
    };
    out.with_file_name(name)
}

fn profile(
    log: &Path,
    select: &Selection,
    algorithm: Option<&str>,
    tau_points: usize,
    boot: &Bootstrap,
    out: &Path,
) -> CliResult {
    if tau_points < 2 {
        return Err(Failure::Usage(anyhow::anyhow!("--tau-points must be at least 2")));
    }
    let options = BootstrapOptions::from_config(&bootstrap_config(boot)?);
    let log = load_log(log)?;
    let tasks = selected_tasks(&log, select.env.as_deref())?;
    let taus = default_taus(tau_points);
    let targets: Vec<(String, PathBuf)> = match algorithm {
        Some(a) => vec![(a.to_string(), out.to_path_buf())],
        None => log.algorithms().into_iter().map(|a| (a.clone(), per_algorithm_path(out, &a))).collect(),
    };
    for (alg, path) in targets {
        let curve = performance_profile(&matrix(&log, &tasks, &alg, select)?, &taus, &options)?;
        write(&path, &emit_plot_data(&curve))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn curves(
    log: &Path,
    algorithm: &str,
    metric: &str,
    pooling: PoolingArg,
    statistic: SeriesArg,
    align: AlignArg,
    boot: &Bootstrap,
    out: &Path,
) -> CliResult {
    let config = bootstrap_config(boot)?;
    let statistic = match statistic {
        SeriesArg::Iqm => SeriesStatistic::Iqm,
        SeriesArg::Mean => SeriesStatistic::Mean,
    };
    let alignment = match align {
        AlignArg::Strict => Alignment::Strict,
        AlignArg::Intersect => Alignment::Intersect,
    };
    let log = load_log(log)?;
    let build = sample_efficiency_curve(&log, algorithm, metric, statistic, pooling.into(), alignment, &config)?;
    for w in &build.warnings {
        eprintln!("warning: {w}");
    }
    write(out, &emit_plot_data(&build.curve))
}

fn tables(report: &Path, format: FormatArg, precision: usize, caption: &str) -> CliResult {
    let spec = TableSpec::new(format.into(), precision, caption).context("--precision").map_err(Failure::Usage)?;
    let report = AggregateReport::from_json(&read_text(report)?)
        .with_context(|| format!("in {}", report.display()))
        .map_err(Failure::Data)?;
    print!("{}", render_environment_table(&report, &spec)?);
    Ok(())
}

fn card(format: FormatArg, config: Option<&Path>) -> CliResult {
    let mut card = ReportCard::default();
    if config.is_some() {
        card = card.with_protocol(&load_config(config)?);
    }
    print!("{}", render_report_card(&card, format.into()));
    Ok(())
}

fn plot(csv: &[PathBuf], kind: KindArg, title: Option<String>, out: &Path) -> CliResult {
    let config = ProtocolConfig::default();
    let mut curves = Vec::with_capacity(csv.len());
    for path in csv {
        let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let curve = parse_plot_data(
            &read_text(path)?,
            kind.into(),
            &label,
            config.ci_level,
            CiMethod::StratifiedBootstrap,
        )
        .with_context(|| format!("in {}", path.display()))
        .map_err(Failure::Data)?;
        curves.push(curve);
    }
    let (x_label, y_label) = match kind {
        KindArg::Profile => ("Normalised score (τ)", "Fraction of runs with score > τ"),
        KindArg::SampleEfficiency | KindArg::IntervalSeries => ("Timesteps", "Normalised score"),
    };
    let style = SvgStyle {
        title,
        x_label: Some(x_label.into()),
        y_label: Some(y_label.into()),
        ..SvgStyle::default()
    };
    write(out, &render_svg(&curves, &style)?)
}

#[derive(serde::Deserialize)]
struct PoiInput {
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
}

fn synth(args: SynthArgs) -> CliResult {
    match args.oracle {
        Some(SynthCommand::Oracle { which: Oracle::Iqm { values } }) => {
            println!("{}", oracle_iqm(&values)?);
        }
        Some(SynthCommand::Oracle { which: Oracle::Poi { input } }) => {
            let data: PoiInput = serde_json::from_str(&read_text(&input)?)
                .with_context(|| format!("in {}", input.display()))
                .map_err(Failure::Data)?;
            println!("{}", oracle_probability_of_improvement(&data.x, &data.y)?);
        }
        None => {
            let spec = match &args.spec {
                Some(p) => SynthSpec::from_json(&read_text(p)?)
                    .with_context(|| format!("in --spec {}", p.display()))
                    .map_err(Failure::Data)?,
                None => SynthSpec::protocol_defaults(),
            };
            let out = args.out.expect("clap enforces --out");
            write(&out, &serialize_experiment_log(&generate_synthetic_log(&spec)?))?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Validate { log, config, json } => validate(&log, config.as_deref(), json),
        Command::Lint {
            log,
            config,
            policy_class,
            json,
        } => lint(&log, config.as_deref(), policy_class.as_deref(), json),
        Command::Aggregate {
            log,
            select,
            stats,
            gamma,
            boot,
            out,
        } => aggregate(&log, &select, &stats, gamma, &boot, &out),
        Command::Compare {
            log,
            candidate,
            baseline,
            select,
            boot,
        } => compare(&log, &candidate, &baseline, &select, &boot),
        Command::Profile {
            log,
            select,
            algorithm,
            tau_points,
            boot,
            out,
        } => profile(&log, &select, algorithm.as_deref(), tau_points, &boot, &out),
        Command::Curves {
            log,
            algorithm,
            metric,
            pooling,
            statistic,
            align,
            boot,
            out,
        } => curves(&log, &algorithm, &metric, pooling, statistic, align, &boot, &out),
        Command::Tables {
            report,
            format,
            precision,
            caption,
        } => tables(&report, format, precision, &caption),
        Command::Card { format, config } => card(format, config.as_deref()),
        Command::Plot { csv, kind, title, out } => plot(&csv, kind, title, &out),
        Command::Synth(args) => synth(args),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            match failure {
                Failure::Data(_) => ExitCode::from(1),
                Failure::Usage(_) => ExitCode::from(2),
            }
        }
    }
}
