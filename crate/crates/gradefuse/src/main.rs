use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use gradefuse::config::{self, PipelineArgs, SimArgs};
use gradefuse::io::{self, InputFormat};
use gradefuse::report::{self, ReportFormat};
use gradefuse::{Error, Parallel};
use gradefuse_core::pipeline::{self, StageTiming};
use gradefuse_core::screening::{DecreaseEvaluator, Sequential};
use gradefuse_core::{simulator, CellRef, Config, GradeTable, RunReport};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "gradefuse", version, about = "Screen anomalous peer-review grades and fuse the rest")]
struct Cli {
    /// Settings file (flat TOML); defaults to $GRADEFUSE_CONFIG
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full pipeline: reconcile classes, screen, fuse, rank
    Run(RunArgs),
    /// Rough and greedy screening only
    Screen(RunArgs),
    /// Class comparison tests only (two or more classes)
    Test(RunArgs),
    /// Generate a synthetic table, run the pipeline and score recovery
    Simulate(Box<SimulateArgs>),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Grade table (CSV)
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    input_format: InputFormat,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
    /// Write the report here instead of stdout
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Evaluate greedy decreases on all cores
    #[arg(long)]
    parallel: bool,
    /// Include wall-clock timing in the report
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Also write the generated table (long CSV)
    #[arg(long)]
    table_out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct SimulationSummary {
    seed: u64,
    students: usize,
    /// Kendall correlation of the fused ranking with true ability.
    recovery: f64,
    /// Same for the plain per-student mean.
    baseline_recovery: f64,
    injected: usize,
    confirmed: usize,
    /// Confirmed cells that were injected anomalies.
    overlap: usize,
    report: RunReport,
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn settings(cli_config: Option<PathBuf>) -> Result<config::FileSettings, Error> {
    let path = config::config_path(cli_config);
    config::load(path.as_deref())
}

fn evaluator(parallel: bool) -> &'static dyn DecreaseEvaluator {
    if parallel {
        &Parallel
    } else {
        &Sequential
    }
}

fn timed<T>(
    enabled: bool,
    f: impl FnOnce() -> Result<T, gradefuse_core::PipelineError>,
) -> Result<(T, Option<Vec<StageTiming>>), Error> {
    let start = Instant::now();
    let value = f()?;
    let timing = enabled.then(|| {
        vec![StageTiming {
            stage: "total".into(),
            millis: start.elapsed().as_secs_f64() * 1e3,
        }]
    });
    Ok((value, timing))
}

fn run_table(kind: &Command, args: &RunArgs, file: config::FileSettings) -> Result<(), Error> {
    let config: Config = args.pipeline.clone().or(file.pipeline).to_config();
    let table = io::ingest(&args.input.input, args.input.input_format)?;
    let eval = evaluator(args.output.parallel);
    let (mut report, timing) = timed(args.output.timing, || match kind {
        Command::Run(_) => pipeline::run(&table, &config, eval),
        Command::Screen(_) => pipeline::run_screening(&table, &config, eval).map(|(r, _)| r),
        Command::Test(_) => pipeline::run_tests(&table, &config),
        Command::Simulate(_) => unreachable!(),
    })?;
    report.timing = timing;
    let text = report::render(&report, args.output.format)?;
    write_output(args.output.out.as_deref(), &text)
}

fn overlap(table: &GradeTable, report: &RunReport, injected: &[CellRef]) -> Result<usize, Error> {
    let mut n = 0;
    for c in &report.confirmed {
        let at = table.locate(&c.class, &c.reviewer, &c.student)?;
        if injected.contains(&at) {
            n += 1;
        }
    }
    Ok(n)
}

fn simulate(args: &SimulateArgs, file: config::FileSettings) -> Result<(), Error> {
    let pipeline_args = args.pipeline.clone().or(file.pipeline);
    let config = pipeline_args.to_config();
    let spec = args.sim.clone().or(file.sim).to_spec(config.seed);
    let sim = simulator::generate(&spec)?;
    if let Some(path) = &args.table_out {
        let f = std::fs::File::create(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        io::write_long(&sim.table, f)?;
    }
    let eval = evaluator(args.output.parallel);
    let (mut report, timing) = timed(args.output.timing, || {
        pipeline::run(&sim.table, &config, eval)
    })?;
    report.timing = timing;
    let recovered: Vec<f64> = report.results.iter().map(|r| r.display).collect();
    let recovery = simulator::kendall_correlation(&recovered, &sim.truth)?;
    let baseline =
        simulator::kendall_correlation(&simulator::mean_baseline(&sim.table), &sim.truth)?;
    let summary = SimulationSummary {
        seed: spec.seed,
        students: sim.truth.len(),
        recovery,
        baseline_recovery: baseline,
        injected: sim.anomalies.len(),
        confirmed: report.confirmed.len(),
        overlap: overlap(&sim.table, &report, &sim.anomalies)?,
        report,
    };
    let text = match args.output.format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&summary)?;
            s.push('\n');
            s
        }
        ReportFormat::Csv => report::to_csv(&summary.report)?,
        ReportFormat::Text => format!(
            "seed {}: recovery {:.4} (mean baseline {:.4}); injected {}, confirmed {}, overlap {}\n\n{}",
            summary.seed,
            summary.recovery,
            summary.baseline_recovery,
            summary.injected,
            summary.confirmed,
            summary.overlap,
            report::to_text(&summary.report)
        ),
    };
    write_output(args.output.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = settings(cli.config.clone()).and_then(|file| match &cli.command {
        Command::Simulate(args) => simulate(args, file),
        kind @ (Command::Run(args) | Command::Screen(args) | Command::Test(args)) => {
            run_table(kind, args, file)
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Validation(violations) = &e {
                for v in violations {
                    eprintln!("  {v}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
