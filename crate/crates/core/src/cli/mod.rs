//! Command-line front end.
//!
//! `weakbeam <mode> --config <path> [--out-dir <path>] [--seed <u64>]
//! [--epsilon <rad>] [--quiet] [--print-config]`
//!
//! Exit status: 0 success, 2 config parse or usage error, 3 validation
//! error, 4 pipeline or physics failure, 5 I/O or malformed data file.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::error::{Error, Result};

pub use commands::{
    cmd_analyze, cmd_crlb, cmd_simulate, cmd_sweep, cmd_theory, load_input, sweep_point, write_pipeline_output,
    write_resolved_config, Input, StreamSummary, SweepRow, REFERENCE_SEED_OFFSETS, SWEEP_HEADER,
};
pub use config::{
    AnalysisSection, CrlbSection, DetectorSection, GammaSpec, Mode, OutputSection, PhysicsSection, RunConfig,
    SimulationSection, SweepSection, TheorySection,
};

pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_PIPELINE: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Simulate,
    Analyze,
    Theory,
    Sweep,
    Crlb,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Simulate => Mode::Simulate,
            ModeArg::Analyze => Mode::Analyze,
            ModeArg::Theory => Mode::Theory,
            ModeArg::Sweep => Mode::Sweep,
            ModeArg::Crlb => Mode::Crlb,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "weakbeam", version, about = "Weak-measurement amplification of spontaneous-emission timing")]
struct Args {
    #[arg(value_enum)]
    mode: ModeArg,
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `out_dir`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// RNG seed, overriding `simulation.seed` and `sweep.seeds`.
    #[arg(long)]
    seed: Option<u64>,
    /// Postselection angle in rad, overriding `epsilon_rad`.
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// Suppress the summary line.
    #[arg(long)]
    quiet: bool,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

/// Exit status for an error family.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::ConfigParse { .. } => EXIT_PARSE,
        Error::Validation { .. } | Error::InvalidParameter { .. } => EXIT_VALIDATION,
        Error::Io { .. } | Error::Format { .. } => EXIT_IO,
        _ => EXIT_PIPELINE,
    }
}

fn resolve(args: &Args) -> Result<RunConfig> {
    let mut config = RunConfig::load(&args.config)?;
    config.mode = Some(args.mode.into());
    if let Some(dir) = &args.out_dir {
        config.output.out_dir = dir.clone();
    }
    if let Some(seed) = args.seed {
        config.simulation.seed = seed;
        config.sweep.seeds = vec![seed];
    }
    if let Some(e) = args.epsilon {
        config.physics.epsilon_rad = e;
    }
    config.validate()?;
    Ok(config)
}

fn execute(args: &Args) -> Result<Option<String>> {
    let config = resolve(args)?;
    if args.print_config {
        print!("{}", config.to_toml());
        return Ok(None);
    }
    let mode = Mode::from(args.mode);
    config.validate_for(mode)?;
    write_resolved_config(&config)?;
    let summary = match mode {
        Mode::Theory => cmd_theory(&config)?,
        Mode::Simulate => cmd_simulate(&config)?,
        Mode::Analyze => cmd_analyze(&config)?,
        Mode::Sweep => cmd_sweep(&config)?,
        Mode::Crlb => cmd_crlb(&config)?,
    };
    Ok((!args.quiet).then_some(summary))
}

/// Parses `argv`, runs the command and returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { 0 };
        }
    };
    match execute(&args) {
        Ok(summary) => {
            if let Some(s) = summary {
                println!("{s}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
