use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use percap::oracle::EnumerationInput;
use percap::runner::{exit_code, run_to_dir, sweep_to_dir, write_atomic, ExperimentConfig, GridAxis};
use percap::Error;

#[derive(Parser)]
#[command(name = "percap", version, about = "Critical percolation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a config over a grid of one or two parameters.
    Sweep {
        config: PathBuf,
        /// `name=v1,v2,...`; give once or twice.
        #[arg(long, required = true)]
        grid: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Exact oracles on tiny graphs.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Enumerate all 2^E bond configurations (E <= 24).
    Enumerate {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path, common: &Common) -> Result<ExperimentConfig, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if common.workers.is_some() {
        cfg.workers = common.workers;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main_inner(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, common } => {
            let cfg = load(&config, &common)?;
            let (_, w) = run_to_dir(&cfg, &common.out)?;
            println!("{}", w.csv.display());
            println!("{}", w.json.display());
        }
        Command::Sweep { config, grid, common } => {
            let cfg = load(&config, &common)?;
            let grid = grid
                .iter()
                .map(|g| g.parse::<GridAxis>())
                .collect::<Result<Vec<_>, _>>()?;
            let (records, w) = sweep_to_dir(&cfg, &grid, &common.out)?;
            eprintln!("{} runs", records.len());
            println!("{}", w.csv.display());
            println!("{}", w.json.display());
        }
        Command::Oracle {
            command: OracleCommand::Enumerate { input, out },
        } => {
            let text = fs::read_to_string(&input)
                .map_err(|e| Error::Config(format!("{}: {e}", input.display())))?;
            let inp: EnumerationInput =
                serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            let mut json = serde_json::to_string_pretty(&inp.run()?)?;
            json.push('\n');
            match out {
                Some(p) => write_atomic(&p, json.as_bytes())?,
                None => print!("{json}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
