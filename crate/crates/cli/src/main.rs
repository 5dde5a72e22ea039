use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chronos_cli::{exit_code, parse_factors, preset, read_file, with_path, Scenario};
use chronos_core::optimizer::{export_miqcp, solve, ExactOptions, OptimizationProblem, SolveMethod};
use chronos_core::sim::{
    read_sweep_csv, summarize, summary_text, write_metrics_csv, write_trace_csv, AfterLimit, Horizon, SweepTable,
};
use chronos_core::{
    generate_task_set, is_harmonic_chain, CostWeights, Error, GenerationSpec, Mapping, Result, SimConfig,
    StrategyKind, TaskSet, Time,
};

/// Exit status of a successful optimize that fell back to the greedy heuristic.
const EXIT_HEURISTIC: u8 = 5;

#[derive(Parser)]
#[command(name = "chronos", version, about = "Multi-timer tick dispatching: optimise, simulate, sweep")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a task set from a generation spec or a preset.
    Generate(GenerateArgs),
    /// Partition a task set across timers.
    Optimize(OptimizeArgs),
    /// Run one simulation and write its metrics.
    Simulate(SimulateArgs),
    /// Run a scenario over period factors.
    Sweep(SweepArgs),
    /// Summarise a sweep CSV.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct TaskSource {
    /// Task-set JSON.
    #[arg(long, conflicts_with = "preset")]
    tasks: Option<PathBuf>,
    /// Take the task set from a shipped preset.
    #[arg(long)]
    preset: Option<String>,
    /// Generator seed, for presets.
    #[arg(long)]
    seed: Option<u64>,
}

impl TaskSource {
    fn load(&self) -> Result<TaskSet> {
        match (&self.tasks, &self.preset) {
            (Some(path), _) => TaskSet::from_json(&read_file(path)?),
            (None, Some(name)) => preset(name)?.task_set(self.seed),
            (None, None) => Err(Error::Usage("give --tasks or --preset".into())),
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Generation spec JSON.
    #[arg(long, conflicts_with = "preset")]
    spec: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    source: TaskSource,
    #[arg(long, default_value_t = 4)]
    timers: usize,
    /// Also write the MIQCP model in LP format.
    #[arg(long)]
    export_lp: Option<PathBuf>,
    /// Largest distinct-period count the exact solver accepts.
    #[arg(long)]
    exact_bound: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: TaskSource,
    /// Mapping JSON (an optimize result works); optimised on the fly when absent.
    #[arg(long)]
    mapping: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    timers: usize,
    #[arg(long, default_value = "chronos")]
    strategy: StrategyKind,
    /// Scale task and timer periods by this factor.
    #[arg(long, default_value_t = 1)]
    period_factor: u64,
    /// A time, `hyperperiod` or `until-retired`.
    #[arg(long, default_value = "hyperperiod")]
    horizon: String,
    /// Cost weights JSON.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    capacity: u64,
    #[arg(long, default_value_t = 1)]
    work_per_cost: u64,
    #[arg(long)]
    overhead_as_time: bool,
    /// Keep releasing tasks that reached their release limit.
    #[arg(long)]
    idle_releases: bool,
    /// Write the event trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    trace_limit: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, conflicts_with = "scenario")]
    preset: Option<String>,
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the scenario's strategies (comma separated).
    #[arg(long, value_delimiter = ',')]
    strategy: Vec<StrategyKind>,
    /// `4`, `1-15` or `1,2,8`.
    #[arg(long)]
    period_factor: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Sweep output; defaults to the scenario's output path, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the summary table here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Sweep CSV.
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Optimize(a) => optimize(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("chronos: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| with_path(e, p))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    let mut out = output(path)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn generate(a: GenerateArgs) -> Result<u8> {
    let tasks = match (&a.spec, &a.preset) {
        (Some(path), _) => {
            let text = read_file(path)?;
            let mut spec: GenerationSpec =
                serde_json::from_str(&text).map_err(|e| Error::Usage(format!("generation spec: {e}")))?;
            if let Some(seed) = a.seed {
                spec.seed = seed;
            }
            generate_task_set(&spec)?
        }
        (None, Some(name)) => preset(name)?.task_set(a.seed)?,
        (None, None) => return Err(Error::Usage("give --spec or --preset".into())),
    };
    write_text(a.out.as_deref(), &(tasks.to_json()? + "\n"))?;
    let distinct = tasks.distinct_periods();
    eprintln!("tasks: {}", tasks.len());
    eprintln!("distinct periods: {} {:?}", distinct.len(), distinct);
    eprintln!("harmonic chain: {}", if is_harmonic_chain(&distinct) { "yes" } else { "no" });
    Ok(0)
}

fn optimize(a: OptimizeArgs) -> Result<u8> {
    let tasks = a.source.load()?;
    let problem = OptimizationProblem::from_task_set(&tasks, a.timers)?;
    let mut options = ExactOptions::default();
    if let Some(bound) = a.exact_bound {
        options.bound = bound;
    }
    let result = solve(&problem, &options);
    if let Some(path) = &a.export_lp {
        export_miqcp(&problem, path)?;
    }
    write_text(a.out.as_deref(), &(result.to_json()? + "\n"))?;
    eprintln!("method: {}", result.method);
    eprintln!("timers: {:?}", result.timer_periods());
    eprintln!("rate: {}", result.objective);
    Ok(if result.method == SolveMethod::Greedy { EXIT_HEURISTIC } else { 0 })
}

fn parse_horizon(text: &str, tasks: &TaskSet) -> Result<Horizon> {
    match text {
        "until-retired" => Ok(Horizon::UntilRetired),
        "hyperperiod" => Ok(Horizon::Fixed(tasks.hyperperiod()?)),
        t => t
            .parse::<Time>()
            .map(Horizon::Fixed)
            .map_err(|_| Error::Usage(format!("bad horizon '{t}'"))),
    }
}

fn simulate(a: SimulateArgs) -> Result<u8> {
    if a.period_factor == 0 {
        return Err(Error::Usage("period factor must be >= 1".into()));
    }
    let base = a.source.load()?;
    let mapping = match &a.mapping {
        Some(path) => serde_json::from_str::<Mapping>(&read_file(path)?)
            .map_err(|e| Error::Usage(format!("mapping json: {e}")))?,
        None => solve(&OptimizationProblem::from_task_set(&base, a.timers)?, &ExactOptions::default()).mapping,
    };
    let tasks = base.scaled(a.period_factor)?;
    let mapping = mapping.scaled(a.period_factor)?;
    let horizon = parse_horizon(&a.horizon, &tasks)?;
    let mut cfg = SimConfig::new(tasks, mapping, a.strategy, horizon);
    if let Some(path) = &a.weights {
        cfg.weights = serde_json::from_str::<CostWeights>(&read_file(path)?)
            .map_err(|e| Error::Usage(format!("weights json: {e}")))?;
    }
    cfg.capacity_per_unit = a.capacity;
    cfg.work_per_cost_unit = a.work_per_cost;
    cfg.overhead_as_time = a.overhead_as_time;
    if a.idle_releases {
        cfg.after_limit = AfterLimit::IdleReleases;
    }
    if a.trace.is_some() {
        cfg = cfg.with_trace(a.trace_limit);
    }
    let metrics = chronos_core::run(&cfg)?;
    if let Some(path) = &a.trace {
        write_trace_csv(output(Some(path))?, metrics.trace.as_deref().unwrap_or_default())?;
    }
    match a.format {
        Format::Json => {
            let mut m = metrics.clone();
            m.trace = None;
            write_text(a.out.as_deref(), &(m.to_json()? + "\n"))?;
        }
        Format::Csv => write_metrics_csv(output(a.out.as_deref())?, &[metrics.row()])?,
    }
    eprintln!(
        "{}: {} interrupts ({} not required), overhead {}, {} misses",
        metrics.strategy,
        metrics.total_interrupts,
        metrics.not_required_interrupts,
        metrics.overhead_cost,
        metrics.deadline_misses()
    );
    Ok(0)
}

fn sweep(a: SweepArgs) -> Result<u8> {
    let mut scenario = match (&a.preset, &a.scenario) {
        (Some(name), _) => preset(name)?,
        (None, Some(path)) => Scenario::load(path)?,
        (None, None) => return Err(Error::Usage("give --preset or --scenario".into())),
    };
    if !a.strategy.is_empty() {
        scenario.strategies = a.strategy.clone();
    }
    if let Some(text) = &a.period_factor {
        scenario.factors = parse_factors(text)?;
    }
    let tasks = scenario.task_set(a.seed)?;
    let (mapping, _) = scenario.mapping(&tasks)?;
    let cfg = scenario.sweep_config(tasks, mapping);
    let table = chronos_core::sim::period_factor_sweep(&cfg, &scenario.factors)?;

    let out = a.out.clone().or_else(|| scenario.outputs.sweep_csv.as_ref().map(PathBuf::from));
    match a.format {
        Format::Csv => table.write_csv(output(out.as_deref())?)?,
        Format::Json => write_text(out.as_deref(), &(serde_json::to_string_pretty(&table)? + "\n"))?,
    }
    let summary = table.summary_text();
    if let Some(path) = a.summary.clone().or_else(|| scenario.outputs.summary.as_ref().map(PathBuf::from)) {
        fs::write(&path, &summary).map_err(|e| with_path(e, &path))?;
    }
    // Keep stdout clean when it carries the sweep itself.
    if out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    report_row_errors(&table);
    if table.rows.iter().all(|r| r.error.is_some()) {
        return Err(Error::Config("every sweep row failed".into()));
    }
    Ok(0)
}

fn report_row_errors(table: &SweepTable) {
    for row in table.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("factor {} {}: {}", row.factor, row.strategy, row.error.as_deref().unwrap_or_default());
    }
    for (strategy, factor) in &table.monotonicity_violations {
        eprintln!("note: {strategy} misses deadlines at factor {factor} but not at the factor before");
    }
}

fn report(a: ReportArgs) -> Result<u8> {
    let rows = read_sweep_csv(File::open(&a.input).map_err(|e| with_path(e, &a.input))?)?;
    let summary = summarize(&rows);
    match a.format {
        Some(Format::Json) => write_text(a.out.as_deref(), &(serde_json::to_string_pretty(&summary)? + "\n")),
        Some(Format::Csv) => {
            let mut w = output(a.out.as_deref())?;
            writeln!(w, "strategy,peak_reduction,mean_reduction,factors_counted")?;
            for s in &summary {
                let f = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
                writeln!(w, "{},{},{},{}", s.strategy, f(s.peak_reduction), f(s.mean_reduction), s.factors_counted)?;
            }
            w.flush()?;
            Ok(())
        }
        None => write_text(a.out.as_deref(), &summary_text(&summary)),
    }?;
    Ok(0)
}
