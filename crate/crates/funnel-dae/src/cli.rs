//! Argument parsing and the three subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use funnel_dae_core::closed_loop::{SimulationConfig, Trajectory};
use funnel_dae_core::dae_analysis::LinearDae;
use funnel_dae_core::registry::{self, ClosedLoopExample};

use crate::format::{registry_example, MethodSpec, SystemFile};
use crate::report::analyze_system;
use crate::selftest::{run_battery, Fixtures};
use crate::simulate::{run, summarize, write_csv, Summary};
use crate::{exit, CliError};

#[derive(Debug, Parser)]
#[command(
    name = "funnel-dae",
    version,
    about = "Structural analysis and funnel control of DAE systems"
)]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze a linear system given by registry name or JSON file.
    Analyze {
        /// Registry name or JSON file.
        target: String,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate closed loops given by registry name or JSON config.
    Simulate(SimulateArgs),
    /// Run the golden-example battery.
    Selftest {
        /// Only cases whose `group/name` contains this string.
        #[arg(long)]
        filter: Option<String>,
    },
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Registry names or JSON config files.
    #[arg(required = true)]
    pub targets: Vec<String>,
    /// Final time.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Local error tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Override `k̂`.
    #[arg(long)]
    pub k_hat: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodSpec>,
    /// Record every n-th accepted step.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Trajectory CSV (single target).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON (single target); printed to standard output otherwise.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Directory for `<name>.csv` and `<name>.summary.json` of every target.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Run the targets in parallel.
    #[arg(long)]
    pub batch: bool,
}

pub fn dispatch(args: Args, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match args.command {
        Command::Analyze { target, out: path } => cmd_analyze(&target, path.as_deref(), out),
        Command::Simulate(sim) => cmd_simulate(&sim, out),
        Command::Selftest { filter } => cmd_selftest(filter.as_deref(), out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn read_system_file(path: &str) -> Result<SystemFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Parse(format!("{path}: not a registry entry and unreadable ({e})"))
    })?;
    SystemFile::from_json(&text).map_err(|e| CliError::Parse(format!("{path}: {e}")))
}

fn label_of(target: &str) -> String {
    Path::new(target)
        .file_stem()
        .map_or_else(|| target.to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn load_linear(target: &str) -> Result<LinearDae, CliError> {
    if let Some(sys) = registry::linear(target) {
        return Ok(sys);
    }
    match read_system_file(target)? {
        SystemFile::Linear(f) => f.to_system(),
        SystemFile::Nonlinear(_) => Err(CliError::Parse(format!(
            "{target}: analyze needs a linear system"
        ))),
    }
}

fn write_json(
    value: &impl serde::Serialize,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Parse(e.to_string()))?;
    match path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => writeln!(out, "{text}")?,
    }
    Ok(())
}

pub fn cmd_analyze(
    target: &str,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let sys = load_linear(target)?;
    let report = analyze_system(&label_of(target), &sys);
    write_json(&report, path, out)?;
    Ok(if report.failures.is_empty() {
        exit::OK
    } else {
        exit::PRECONDITION
    })
}

/// The closed loop and run settings of one target; flags win over the file.
pub fn load_run(
    target: &str,
    args: &SimulateArgs,
) -> Result<(ClosedLoopExample, SimulationConfig), CliError> {
    let (ex, mut cfg) = match registry_example(target, args.k_hat) {
        Some(ex) => (ex, SimulationConfig::default()),
        None => match read_system_file(target)? {
            SystemFile::Nonlinear(f) => (f.build(args.k_hat)?, f.simulation.to_config()),
            SystemFile::Linear(_) => {
                return Err(CliError::Parse(format!(
                    "{target}: simulate needs a nonlinear configuration"
                )))
            }
        },
    };
    if let Some(t) = args.t_end {
        cfg.t_end = t;
    }
    if let Some(t) = args.tol {
        cfg.tol = t;
    }
    if let Some(m) = args.method {
        cfg.method = m.into();
    }
    if let Some(s) = args.stride {
        cfg.stride = s;
    }
    Ok((ex, cfg))
}

type RunResult = Result<(Summary, Trajectory), CliError>;

fn simulate_one(target: &str, args: &SimulateArgs) -> RunResult {
    let (ex, cfg) = load_run(target, args)?;
    let traj = run(&ex, &cfg)?;
    Ok((summarize(&label_of(target), &traj, &cfg), traj))
}

fn write_csv_file(traj: &Trajectory, path: &Path) -> Result<(), CliError> {
    write_csv(traj, BufWriter::new(File::create(path)?))
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let single = args.targets.len() == 1;
    if !single && (args.out.is_some() || args.summary.is_some()) {
        return Err(CliError::Parse(
            "--out and --summary take a single target; use --out-dir".into(),
        ));
    }
    let results: Vec<RunResult> = if args.batch {
        std::thread::scope(|s| {
            let handles: Vec<_> = args
                .targets
                .iter()
                .map(|t| s.spawn(move || simulate_one(t, args)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("simulation thread panicked"))
                .collect()
        })
    } else {
        args.targets.iter().map(|t| simulate_one(t, args)).collect()
    };

    if single {
        let (summary, traj) = results.into_iter().next().expect("one target")?;
        if let Some(p) = &args.out {
            write_csv_file(&traj, p)?;
        }
        write_outputs_to_dir(args, &summary, &traj)?;
        write_json(&summary, args.summary.as_deref(), out)?;
        return Ok(summary.exit_code);
    }

    let mut code = exit::OK;
    for (target, res) in args.targets.iter().zip(results) {
        let this = match res {
            Ok((summary, traj)) => {
                write_outputs_to_dir(args, &summary, &traj)?;
                writeln!(out, "{target}: exit {}", summary.exit_code)?;
                summary.exit_code
            }
            Err(e) => {
                writeln!(out, "{target}: exit {} ({e})", e.exit_code())?;
                e.exit_code()
            }
        };
        if code == exit::OK {
            code = this;
        }
    }
    Ok(code)
}

fn write_outputs_to_dir(
    args: &SimulateArgs,
    summary: &Summary,
    traj: &Trajectory,
) -> Result<(), CliError> {
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir)?;
        write_csv_file(traj, &dir.join(format!("{}.csv", summary.system)))?;
        let path = dir.join(format!("{}.summary.json", summary.system));
        write_json(summary, Some(&path), &mut std::io::sink())?;
    }
    Ok(())
}

pub fn cmd_selftest(filter: Option<&str>, out: &mut dyn Write) -> Result<i32, CliError> {
    let results = run_battery(&Fixtures::default(), filter, out)?;
    Ok(if results.iter().all(|r| r.error.is_none()) {
        exit::OK
    } else {
        exit::SELFTEST_FAILED
    })
}
