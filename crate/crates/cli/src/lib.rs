//! Command-line front end for the `cbsel` node-selection simulator.
//!
//! Every config-driven command writes `manifest.toml` next to its outputs.
//! Passing that file back with `--config` reruns the experiment and
//! reproduces the outputs byte for byte.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod input;
pub mod output;
pub mod presets;

use commands::{AppendixSettings, SweepKind};
use output::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "cbsel", version, about = "Node selection for sidelobe control in collaborative beamforming")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select nodes and write the selected, random-set and average beampatterns.
    Beampattern(Common),
    /// Run one node selection and write its trial log.
    Select(Common),
    /// Mean number of trials over a sweep.
    SweepTrials(Common),
    /// Mean INR at the first unintended BS over a sweep.
    SweepInr(Common),
    /// Empirical CCDF of the total INR over a sweep.
    Ccdf(Common),
    /// Beampattern with four unintended BSs (preset `case1` by default).
    Case1(Common),
    /// One cluster per BS, each protecting the others (preset `case2`).
    Case2(Common),
    /// Beampattern protecting an angular region (preset `case3`).
    Case3(Common),
    /// Unintended BSs at the average beampattern's sidelobe peaks (preset `case4`).
    Case4(Common),
    /// Monte Carlo checks of the phase-difference moments and the mean trial count.
    ValidateAppendix(AppendixArgs),
    /// List the built-in presets.
    Presets,
}

/// Where the configuration comes from.
#[derive(Debug, Clone, Default, Args)]
pub struct Source {
    /// TOML configuration file.
    #[arg(long, short = 'c', conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in preset (see `cbsel presets`).
    #[arg(long, short = 'p')]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[command(flatten)]
    pub source: Source,
    /// Override a config value, e.g. `--set scenario.inr_threshold_db=5`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, short = 'o', default_value = "out")]
    pub output_dir: PathBuf,
    /// Output format; overrides `output.format`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct AppendixArgs {
    /// Phase-difference samples.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    /// Simulated trial sequences.
    #[arg(long, default_value_t = 100_000)]
    pub sequences: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, short = 'o', default_value = "out")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    NonConvergence(String),
    Validation(String),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Config(_) => 2,
            Failure::NonConvergence(_) => 3,
            Failure::Validation(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e:#}"),
            Failure::NonConvergence(m) => write!(f, "selection did not converge: {m}"),
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
            Failure::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for Failure {}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Beampattern(_) => "beampattern",
            Command::Select(_) => "select",
            Command::SweepTrials(_) => "sweep-trials",
            Command::SweepInr(_) => "sweep-inr",
            Command::Ccdf(_) => "ccdf",
            Command::Case1(_) => "case1",
            Command::Case2(_) => "case2",
            Command::Case3(_) => "case3",
            Command::Case4(_) => "case4",
            Command::ValidateAppendix(_) => "validate-appendix",
            Command::Presets => "presets",
        }
    }

    /// Preset used when neither `--config` nor `--preset` is given.
    fn default_preset(&self) -> Option<&'static str> {
        match self {
            Command::Case1(_) => Some("case1"),
            Command::Case2(_) => Some("case2"),
            Command::Case3(_) => Some("case3"),
            Command::Case4(_) => Some("case4"),
            _ => None,
        }
    }
}

/// Runs a parsed command. Returns the files written.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>, Failure> {
    let command = &cli.command;
    let common = match command {
        Command::Presets => {
            for name in presets::names() {
                println!("{name:<8} {}", presets::summary(presets::lookup(name).unwrap_or("")));
            }
            return Ok(Vec::new());
        }
        Command::ValidateAppendix(a) => {
            let mut out = OutputDir::create(&a.output_dir)?;
            let settings = AppendixSettings {
                samples: a.samples,
                sequences: a.sequences,
                seed: a.seed,
            };
            commands::validate_appendix(&settings, &mut out)?;
            return Ok(out.written().to_vec());
        }
        Command::Beampattern(c)
        | Command::Select(c)
        | Command::SweepTrials(c)
        | Command::SweepInr(c)
        | Command::Ccdf(c)
        | Command::Case1(c)
        | Command::Case2(c)
        | Command::Case3(c)
        | Command::Case4(c) => c,
    };

    let text = input::read_source(&common.source, command.default_preset())?;
    let mut overrides = common.overrides.clone();
    if let Some(f) = common.format {
        let value = match f {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        overrides.push(format!("output.format=\"{value}\""));
    }
    let experiment = input::resolve(&text, &overrides)?;
    let mut out = OutputDir::create(&common.output_dir)?;
    out.text("manifest.toml", &experiment.manifest(command.name())?)?;

    let name = command.name();
    let result = match command {
        Command::Beampattern(_) | Command::Case1(_) | Command::Case3(_) => {
            commands::beampattern(&experiment, &mut out, name)
        }
        Command::Case4(_) => commands::case4(&experiment, &mut out),
        Command::Case2(_) => commands::case2(&experiment, &mut out),
        Command::Select(_) => commands::select(&experiment, &mut out),
        Command::SweepTrials(_) => commands::sweep(&experiment, &mut out, SweepKind::Trials),
        Command::SweepInr(_) => commands::sweep(&experiment, &mut out, SweepKind::Inr),
        Command::Ccdf(_) => commands::sweep(&experiment, &mut out, SweepKind::Ccdf),
        Command::Presets | Command::ValidateAppendix(_) => Ok(()),
    };
    result.map(|_| out.written().to_vec())
}
