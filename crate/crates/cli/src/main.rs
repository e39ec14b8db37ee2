//! `nvfid` — pipeline driver for the NV-center dephasing simulation suite.
//!
//! Subcommands: `bath` (draw a nuclear configuration), `plan` (partition it
//! into backend-sized groups), `run` (produce per-group and combined φ(t)
//! series), `cher` (frequency quasi-distribution of a series), `figure`
//! (canned multi-field scenarios).
//!
//! Exit codes: 0 success, 2 configuration error, 3 backend failure, 4 I/O
//! error.

mod commands;
mod config;
mod figures;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Backend(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Backend(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Backend(m) | Failure::Io(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(name = "nvfid", version, about = "NV-center dephasing simulation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the pipeline subcommands; each one overrides the
/// matching config-file field.
#[derive(Args)]
struct Overrides {
    /// Run configuration JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bath sampling / shot seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Magnetic fields in G, comma separated.
    #[arg(long, value_delimiter = ',')]
    bz: Option<Vec<f64>>,
    /// Inner polarization: none | z | x | ztheta:θ | xz:θ1,θ2.
    #[arg(long)]
    pol: Option<String>,
    /// analytic | exact-circuit | shots | noisy.
    #[arg(long)]
    backend: Option<String>,
    /// Simulator profile (builtin name or JSON path).
    #[arg(long)]
    profile: Option<String>,
    /// Device profile for the controllable groups.
    #[arg(long)]
    device_profile: Option<String>,
    /// Placement name for the noisy backend.
    #[arg(long)]
    placement: Option<String>,
    /// Pre-generated bath JSON.
    #[arg(long)]
    bath: Option<PathBuf>,
    /// Shots per tomography basis pair (shots backend).
    #[arg(long)]
    shots: Option<u64>,
    /// Last time point (µs).
    #[arg(long)]
    tmax: Option<f64>,
    /// Number of time points.
    #[arg(long)]
    tsteps: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    jobs: Option<usize>,
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
            cfg.lattice.seed = v;
        }
        if let Some(v) = &self.bz {
            cfg.bz = v.clone();
        }
        if let Some(v) = &self.pol {
            cfg.pol = v.clone();
        }
        if let Some(v) = &self.backend {
            cfg.backend = v.clone();
        }
        if let Some(v) = &self.profile {
            cfg.simulator_profile = v.clone();
        }
        if let Some(v) = &self.device_profile {
            cfg.device_profile = v.clone();
        }
        if let Some(v) = &self.placement {
            cfg.placement = v.clone();
        }
        if let Some(v) = &self.bath {
            cfg.bath_file = Some(v.clone());
        }
        if let Some(v) = self.shots {
            cfg.shots = v;
        }
        if let Some(v) = self.tmax {
            cfg.tmax = v;
        }
        if let Some(v) = self.tsteps {
            cfg.tsteps = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v;
        }
        if cfg.jobs > 0 {
            // ignore the error if a pool already exists (e.g. repeated calls)
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.jobs)
                .build_global();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw a ¹³C bath configuration and write it as JSON.
    Bath {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Partition the bath into backend-sized groups.
    Plan {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Produce per-group and combined dephasing series.
    Run {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Frequency quasi-distribution (and negativity) of a φ(t) series.
    Cher {
        /// Series CSV produced by `run`.
        input: PathBuf,
        /// Number of frequency bins.
        #[arg(long, default_value_t = 2048)]
        freqs: usize,
        /// none | gaussian:SIGMA.
        #[arg(long, default_value = "none")]
        window: String,
        /// Output directory (default: next to the input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Canned scenario: fig5 | fig6 | fig7 | fig8.
    Figure {
        name: String,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Bath { overrides } => commands::cmd_bath(&overrides.resolve()?),
        Command::Plan { overrides } => commands::cmd_plan(&overrides.resolve()?),
        Command::Run { overrides } => commands::cmd_run(&overrides.resolve()?).map(|_| ()),
        Command::Cher {
            input,
            freqs,
            window,
            out,
        } => commands::cmd_cher(&input, freqs, config::parse_window(&window)?, out.as_deref()),
        Command::Figure { name, overrides } => {
            figures::cmd_figure(&overrides.resolve()?, &name)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
