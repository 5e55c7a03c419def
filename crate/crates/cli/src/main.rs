use std::path::PathBuf;
use std::process::ExitCode;

use armsim_cli::commands::{calibrate, compare, simulate};
use armsim_cli::config::RunConfig;
use armsim_cli::presets::{preset, NAMES};
use armsim_cli::CliError;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "armsim", version, about = "Complete and average reduced models of wall heat and moisture transfer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one model and write fields, fluxes and a metadata sidecar.
    Simulate(Common),
    /// Fit fluctuation-model parameters against a complete-model reference.
    Calibrate(Common),
    /// Sweep steps and averaging periods against a fine-step reference.
    Compare(Common),
    /// Print a preset as a config file.
    Preset {
        #[arg(value_parser = NAMES)]
        name: String,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped configuration.
    #[arg(long, value_parser = NAMES)]
    preset: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for calibration.
    #[arg(long)]
    jobs: Option<usize>,
    /// Selects the reduced model for `simulate`.
    #[arg(long)]
    arm: bool,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => return Err(CliError::Config("pass --config <path> or --preset <name>".into())),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(jobs) = self.jobs {
            if jobs == 0 {
                return Err(CliError::Config("--jobs must be at least 1".into()));
            }
            cfg.jobs = jobs;
        }
        if self.arm {
            cfg.model = armsim_cli::config::ModelKind::Arm;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = c.load()?;
            let (files, _) = simulate(&cfg, &c.out)?;
            println!("wrote {}", files.trajectory.display());
            println!("wrote {}", files.flux.display());
            println!("wrote {}", files.final_state.display());
            println!("wrote {}", files.metadata.display());
        }
        Command::Calibrate(c) => {
            let cfg = c.load()?;
            let (files, _) = calibrate(&cfg, &c.out)?;
            for (_, path) in &files.tables {
                println!("wrote {}", path.display());
            }
            println!("wrote {}", files.metadata.display());
        }
        Command::Compare(c) => {
            let cfg = c.load()?;
            let out = compare(&cfg, &c.out)?;
            println!("wrote {}", out.errors.display());
            if let Some(p) = &out.loads {
                println!("wrote {}", p.display());
            }
            println!("wrote {}", out.metadata.display());
        }
        Command::Preset { name } => print!("{}", preset(&name)?.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("armsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
