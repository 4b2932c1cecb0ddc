//! Command-line front end: `spdc <command> <config.json> [flags]`.
//!
//! Exit status: 0 success, 1 usage, 2 invalid configuration or input,
//! 3 solver failure, 4 file-system failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use spdc_core::montecarlo::Polarizer;
use spdc_core::Execution;

use commands::{Context, Outcome};
use config::ExperimentConfig;
use error::{CliError, CliResult};
use io::{Format, Manifest};

#[derive(Debug, Parser)]
#[command(name = "spdc", version, about = "Type-II SPDC source, EPMF and fiber-spectrometer simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ExecutionArg {
    #[default]
    Parallel,
    Sequential,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment configuration (JSON).
    pub config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (defaults to outputs.directory of the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format of tabular outputs.
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    #[arg(long, value_enum, default_value_t)]
    pub execution: ExecutionArg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Central o/e wavelengths against internal pump–axis angle.
    TuningCurve {
        #[command(flatten)]
        common: Common,
    },
    /// Pump–axis angle for degenerate emission at twice the pump wavelength.
    Degeneracy {
        #[command(flatten)]
        common: Common,
    },
    /// Sampled effective phase-matching function.
    EpmfGrid {
        #[command(flatten)]
        common: Common,
        /// Grid size as SIGNALxIDLER points, e.g. 256x256.
        #[arg(long, value_parser = parse_grid)]
        grid: Option<(usize, usize)>,
    },
    /// Joint spectra along CW energy-conservation lines.
    CwSlice {
        #[command(flatten)]
        common: Common,
        /// Pump wavelength in nm; repeat for several (defaults to the config list).
        #[arg(long = "pump")]
        pumps: Vec<f64>,
    },
    /// Correlation metrics of the pulsed-pump joint spectrum.
    Metrics {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_grid)]
        grid: Option<(usize, usize)>,
        /// Pump intensity FWHM in nm (required when the configured pump is CW).
        #[arg(long)]
        bandwidth: Option<f64>,
    },
    /// Pump bandwidth that removes the spectral correlation.
    DecorrelationScan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_grid)]
        grid: Option<(usize, usize)>,
    },
    /// Spectrometer wavelength resolution.
    Resolution {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        wavelength: Option<f64>,
        /// Replace both fiber lengths, in m.
        #[arg(long)]
        fiber_length_m: Option<f64>,
    },
    /// Monte Carlo time-tag stream.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Polarizer in front of the trigger coupler: e, o or none.
        #[arg(long)]
        polarizer: Option<String>,
        /// Acquisition time in s.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Histogram of gated-minus-trigger delays from a time-tag file.
    Histogram {
        #[command(flatten)]
        common: Common,
        /// Time-tag file (defaults to timetags.<format> in the output directory).
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        bin_width: Option<i64>,
        /// Delay window LO:HI in ps.
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Option<(i64, i64)>,
    },
    /// Fit the delay-to-wavelength map from reference lines.
    Calibrate {
        #[command(flatten)]
        common: Common,
    },
    /// Turn a delay histogram into a spectrum.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Validate a configuration and print it in canonical form.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NxM, got '{s}'"))?;
    let n = a.trim().parse().map_err(|e| format!("grid rows: {e}"))?;
    let m = b.trim().parse().map_err(|e| format!("grid columns: {e}"))?;
    Ok((n, m))
}

fn parse_window(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got '{s}'"))?;
    let lo = a.trim().parse().map_err(|e| format!("window start: {e}"))?;
    let hi = b.trim().parse().map_err(|e| format!("window end: {e}"))?;
    Ok((lo, hi))
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::TuningCurve { .. } => "tuning-curve",
            Command::Degeneracy { .. } => "degeneracy",
            Command::EpmfGrid { .. } => "epmf-grid",
            Command::CwSlice { .. } => "cw-slice",
            Command::Metrics { .. } => "metrics",
            Command::DecorrelationScan { .. } => "decorrelation-scan",
            Command::Resolution { .. } => "resolution",
            Command::Simulate { .. } => "simulate",
            Command::Histogram { .. } => "histogram",
            Command::Calibrate { .. } => "calibrate",
            Command::Reconstruct { .. } => "reconstruct",
            Command::Validate { .. } => "validate",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::TuningCurve { common }
            | Command::Degeneracy { common }
            | Command::EpmfGrid { common, .. }
            | Command::CwSlice { common, .. }
            | Command::Metrics { common, .. }
            | Command::DecorrelationScan { common, .. }
            | Command::Resolution { common, .. }
            | Command::Simulate { common, .. }
            | Command::Histogram { common, .. }
            | Command::Calibrate { common }
            | Command::Reconstruct { common, .. }
            | Command::Validate { common } => common,
        }
    }
}

fn load_context(common: &Common) -> CliResult<Context> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let out_dir = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.outputs.directory));
    Ok(Context {
        config,
        out_dir,
        format: common.format,
        exec: match common.execution {
            ExecutionArg::Parallel => Execution::Parallel,
            ExecutionArg::Sequential => Execution::Sequential,
        },
    })
}

fn dispatch(command: &Command, ctx: &Context) -> CliResult<Outcome> {
    match command {
        Command::TuningCurve { .. } => commands::tuning(ctx),
        Command::Degeneracy { .. } => commands::degeneracy(ctx),
        Command::EpmfGrid { grid, .. } => commands::epmf(ctx, *grid),
        Command::CwSlice { pumps, .. } => commands::cw_slices(ctx, pumps),
        Command::Metrics { grid, bandwidth, .. } => commands::joint_metrics(ctx, *grid, *bandwidth),
        Command::DecorrelationScan { grid, .. } => commands::decorrelation(ctx, *grid),
        Command::Resolution {
            wavelength,
            fiber_length_m,
            ..
        } => commands::resolution_budget(ctx, *wavelength, *fiber_length_m),
        Command::Simulate { polarizer, duration, .. } => {
            let polarizer = polarizer.as_deref().map(str::parse::<Polarizer>).transpose()?;
            commands::run_simulation(ctx, polarizer, *duration)
        }
        Command::Histogram {
            input, bin_width, window, ..
        } => commands::timing_histogram(ctx, input.as_deref(), *bin_width, *window),
        Command::Calibrate { .. } => commands::calibration(ctx),
        Command::Reconstruct {
            histogram, calibration, ..
        } => commands::reconstruction(ctx, histogram.as_deref(), calibration.as_deref()),
        Command::Validate { .. } => Ok(Outcome {
            lines: vec![ctx.config.canonical_json().trim_end().to_string()],
            ..Outcome::default()
        }),
    }
}

fn manifest(command: &Command, args: &[String], ctx: &Context, outputs: &[PathBuf]) -> Manifest {
    Manifest {
        command: command.name().to_string(),
        arguments: args.to_vec(),
        config_path: command.common().config.display().to_string(),
        config_sha256: ctx.config.sha256(),
        config: serde_json::to_value(&ctx.config).expect("config serializes"),
        seed: ctx.config.seed,
        execution: format!("{:?}", ctx.exec).to_lowercase(),
        tool: env!("CARGO_PKG_NAME").to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        core_version: spdc_core::VERSION.to_string(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    }
}

fn execute(cli: &Cli, args: &[String]) -> CliResult<Outcome> {
    let ctx = load_context(cli.command.common())?;
    let mut outcome = dispatch(&cli.command, &ctx)?;
    if !matches!(cli.command, Command::Validate { .. }) {
        let path = ctx.out_dir.join(format!("{}.manifest.json", cli.command.name()));
        let m = manifest(&cli.command, args, &ctx, &outcome.outputs);
        io::write_atomic(&path, io::to_json(&m).as_bytes())?;
        outcome.outputs.push(path);
    }
    Ok(outcome)
}

/// Parse `args` (program name first), run, print, and return the exit status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let informational = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if informational { 0 } else { CliError::EXIT_USAGE };
        }
    };
    let printable: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli, &printable) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for line in &outcome.lines {
                println!("{line}");
            }
            for p in &outcome.outputs {
                eprintln!("wrote {}", display(p));
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
