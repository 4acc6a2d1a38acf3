use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use flexagg::disaggregation::{run_rolling_with, Objective, Strategy};
use flexagg::oracle::{backward_soc_sets, verify_band, GridSpec, Rounding};
use flexagg::{aggregate, Limits, Mode, ModelKind};
use serde::Serialize;

use crate::case_file::{load_case, CaseFile};
use crate::comparison::{run_comparison, ComparisonConfig};
use crate::error::{read, write, Result};
use crate::result_file::{band_csv, load_band, load_result, load_trajectory, to_json, LogFile, ResultFile};
use crate::trajectory::SampleMode;

fn parse<T: FromStr>(s: &str) -> std::result::Result<T, String>
where
    T::Err: Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "flexagg", version, about = "Flexibility bands for distribution systems with storage")]
pub struct Cli {
    /// Increase log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one aggregation model and write its band and certificate.
    Aggregate {
        #[arg(long)]
        case: PathBuf,
        #[arg(long, value_parser = parse::<ModelKind>)]
        model: ModelKind,
        #[arg(long, default_value = "full", value_parser = parse::<Mode>)]
        mode: Mode,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cap on scenario leaves and trajectory patterns.
        #[arg(long)]
        max_leaves: Option<usize>,
        /// Record wall-clock time in the result.
        #[arg(long)]
        timings: bool,
    },
    /// Realize a setpoint trajectory period by period.
    Disaggregate {
        #[arg(long)]
        case: PathBuf,
        #[arg(long)]
        result: PathBuf,
        /// JSON array of setpoints in MW.
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long, value_parser = parse::<Strategy>)]
        strategy: Strategy,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Accept any feasible dispatch instead of minimizing cost.
        #[arg(long)]
        feasibility_only: bool,
    },
    /// Compare models and dispatch strategies over seeded trajectories.
    Simulate {
        #[arg(long)]
        case: PathBuf,
        #[arg(long, value_delimiter = ',', value_parser = parse::<ModelKind>,
              default_value = "envelope,single-ess,rectangular,enumeration,two-stage,outer")]
        models: Vec<ModelKind>,
        #[arg(long, value_delimiter = ',', value_parser = parse::<Strategy>, default_value = "envelope,rectangular,enumeration")]
        strategies: Vec<Strategy>,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "full", value_parser = parse::<Mode>)]
        mode: Mode,
        #[arg(long, value_delimiter = ',', value_parser = parse::<SampleMode>, default_value = "uniform,vertex")]
        sampling: Vec<SampleMode>,
        #[arg(long)]
        max_leaves: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include wall-clock figures (makes the report non-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Check a band with the grid recursion on tiny cases.
    OracleCheck {
        #[arg(long)]
        case: PathBuf,
        /// Result file or `{"lower": [...], "upper": [...]}`.
        #[arg(long)]
        band: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        grid_step: f64,
        /// Energy grid step; defaults to the power step.
        #[arg(long)]
        soc_step: Option<f64>,
    },
    /// Write band curves of one or more results as CSV.
    EmitPlot {
        #[arg(long, required = true)]
        result: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn limits(max_leaves: Option<usize>) -> Limits {
    let mut l = Limits::default();
    if let Some(n) = max_leaves {
        l.max_leaves = n;
    }
    l
}

#[derive(Serialize)]
struct OracleReport {
    conservative: bool,
    optimistic: bool,
    /// Grid points in the first-period set under each rounding.
    initial_set_size: [usize; 2],
    grid_points: usize,
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Aggregate { case, model, mode, out, max_leaves, timings } => {
            let case = load_case(&case)?;
            let r = aggregate(&case, model, mode, &limits(max_leaves))?;
            emit(out.as_deref(), &(to_json(&ResultFile::from_result(&r, mode, timings)) + "\n"))?;
        }
        Command::Disaggregate { case, result, trajectory, strategy, out, feasibility_only } => {
            let case = load_case(&case)?;
            let result = load_result(&result)?.to_result()?;
            let trajectory = load_trajectory(&trajectory)?;
            let objective = if feasibility_only { Objective::FeasibilityOnly } else { Objective::Cost };
            let log = run_rolling_with(&case, &result, &trajectory, strategy, objective)?;
            emit(out.as_deref(), &(to_json(&LogFile::from_log(&log)) + "\n"))?;
        }
        Command::Simulate { case, models, strategies, n, seed, mode, sampling, max_leaves, out, timings } => {
            let file = CaseFile::parse(&read(&case)?, &case)?;
            let name = file.meta.name.clone().or_else(|| case.file_stem().map(|s| s.to_string_lossy().into_owned()));
            let config = ComparisonConfig { models, strategies, n_trajectories: n, seed, mode, sampling, limits: limits(max_leaves), timings };
            let report = run_comparison(&file.to_case()?, name.as_deref(), &config)?;
            emit(out.as_deref(), &(to_json(&report) + "\n"))?;
        }
        Command::OracleCheck { case, band, grid_step, soc_step } => {
            let case = load_case(&case)?;
            let band = load_band(&band)?;
            let grid = GridSpec { soc_step: soc_step.unwrap_or(grid_step), ..GridSpec::uniform(grid_step) };
            let inner = backward_soc_sets(&case, &band, &grid, Rounding::Conservative)?;
            let outer = backward_soc_sets(&case, &band, &grid, Rounding::Optimistic)?;
            let report = OracleReport {
                conservative: verify_band(&case, &band, &grid, Rounding::Conservative)?,
                optimistic: verify_band(&case, &band, &grid, Rounding::Optimistic)?,
                initial_set_size: [inner.count(0), outer.count(0)],
                grid_points: inner.points.len(),
            };
            println!("{}", to_json(&report));
            if !report.optimistic {
                return Ok(4);
            }
        }
        Command::EmitPlot { result, out } => {
            let files = result.iter().map(|p| load_result(p)).collect::<Result<Vec<_>>>()?;
            emit(out.as_deref(), &band_csv(&files)?)?;
        }
    }
    Ok(0)
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
