//! `gyronet`: reproduce, optimize and verify gyroscope-network sensitivities.

mod commands;
mod output;
mod spec;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Flag;
use spec::{CommandKind, Format, RunSpec, SeedingArg, SpecFile, TopologyArg};

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Io(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Io(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Io(m) | Failure::Numerical(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "gyronet",
    version,
    about = "Phase sensitivity of distributed optical-gyroscope networks",
    long_about = None
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Optimized sensitivities over an (M, N, eta) grid.
    Sweep,
    /// Optimal operating points with stationarity residuals.
    Optimize,
    /// Optimized two-sensor QCRBs and the four-way ordering table.
    Qcrb,
    /// Monte Carlo homodyne check of the closed forms.
    McVerify,
    /// Photon number at which the separable/entangled ratio peaks.
    RatioPeak,
    /// Side-by-side summary of both topologies.
    Report,
}

impl From<Command> for CommandKind {
    fn from(c: Command) -> Self {
        match c {
            Command::Sweep => CommandKind::Sweep,
            Command::Optimize => CommandKind::Optimize,
            Command::Qcrb => CommandKind::Qcrb,
            Command::McVerify => CommandKind::McVerify,
            Command::RatioPeak => CommandKind::RatioPeak,
            Command::Report => CommandKind::Report,
        }
    }
}

#[derive(Args)]
struct Opts {
    /// Sensor counts, comma separated.
    #[arg(long = "M", value_delimiter = ',', global = true)]
    m: Option<Vec<usize>>,
    /// Mean photons per sensor, comma separated.
    #[arg(long = "N", value_delimiter = ',', global = true)]
    n: Option<Vec<f64>>,
    /// Channel transmissivities, comma separated.
    #[arg(long, value_delimiter = ',', global = true)]
    eta: Option<Vec<f64>>,
    /// Restrict to one topology (default: both).
    #[arg(long, global = true)]
    topology: Option<TopologyArg>,
    #[arg(long, global = true)]
    seeding: Option<SeedingArg>,
    /// Output file; defaults to `<command>.<format>` in GYRONET_OUT_DIR, or stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    format: Option<Format>,
    /// Base seed for Monte Carlo runs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run-spec file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Squeezing grid for mc-verify, comma separated.
    #[arg(long, value_delimiter = ',', global = true)]
    r: Option<Vec<f64>>,
    /// Seed amplitude for mc-verify.
    #[arg(long, global = true)]
    amp: Option<f64>,
    /// Samples per Monte Carlo estimate.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Photon-number interval for ratio-peak, as `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2, global = true)]
    n_range: Option<Vec<f64>>,
    /// Default output directory.
    #[arg(long, env = "GYRONET_OUT_DIR", global = true, hide_env_values = true)]
    out_dir: Option<PathBuf>,
}

fn resolve(command: CommandKind, opts: Opts) -> Result<(RunSpec, Option<PathBuf>), Failure> {
    let mut spec = RunSpec::defaults(command);
    if let Some(path) = &opts.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
        let file: SpecFile = serde_json::from_str(&text).map_err(|e| {
            Failure::Validation(format!("invalid run spec {}: {e}", path.display()))
        })?;
        spec.apply_file(file);
    }
    if let Some(v) = opts.m {
        spec.m = v;
    }
    if let Some(v) = opts.n {
        spec.n = v;
    }
    if let Some(v) = opts.eta {
        spec.eta = v;
    }
    if let Some(v) = opts.topology {
        spec.topology = vec![v];
    }
    if let Some(v) = opts.seeding {
        spec.seeding = v;
    }
    if let Some(v) = opts.format {
        spec.format = v;
    }
    if let Some(v) = opts.seed {
        spec.seed = v;
    }
    if let Some(v) = opts.r {
        spec.r = v;
    }
    if let Some(v) = opts.amp {
        spec.amp = v;
    }
    if let Some(v) = opts.samples {
        spec.samples = v;
    }
    if let Some(v) = opts.n_range {
        spec.n_range = [v[0], v[1]];
    }
    if opts.out.is_some() {
        spec.out = opts.out;
    }
    spec.validate()?;
    let target = spec.out.clone().or_else(|| {
        opts.out_dir.map(|dir| {
            dir.join(format!(
                "{}.{}",
                spec.command.name(),
                spec.format.extension()
            ))
        })
    });
    Ok((spec, target))
}

fn emit(text: &str, target: Option<&PathBuf>) -> Result<(), Failure> {
    match target {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)
                    .map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
            }
            fs::write(path, text)
                .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(format!("cannot write to stdout: {e}"))),
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let (spec, target) = resolve(cli.command.into(), cli.opts)?;
    let outcome = commands::run(&spec);
    emit(&outcome.table.render(&spec), target.as_ref())?;
    let flagged = outcome.flags.len();
    match outcome.flags.iter().max() {
        None => Ok(()),
        Some(Flag::Numerical) => Err(Failure::Numerical(format!(
            "{flagged} row(s) flagged; see the status column"
        ))),
        Some(Flag::Verification) => Err(Failure::Validation(format!(
            "{flagged} row(s) failed verification; see the status column"
        ))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gyronet: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
