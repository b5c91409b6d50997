use clap::{Parser, Subcommand, ValueEnum};
use gbam::cli::{self, CliError};
use gbam::sim::EngineKind;
use std::path::PathBuf;
use std::process::ExitCode;

/// Single-link multi-class bandwidth admission control: configurable
/// allocation models, workload simulation and model-equivalence checks.
#[derive(Parser)]
#[command(name = "gbam", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EngineArg {
    Gbam,
    Mam,
    Rdm,
    Alloctc,
}

impl From<EngineArg> for EngineKind {
    fn from(value: EngineArg) -> EngineKind {
        match value {
            EngineArg::Gbam => EngineKind::Gbam,
            EngineArg::Mam => EngineKind::Mam,
            EngineArg::Rdm => EngineKind::Rdm,
            EngineArg::Alloctc => EngineKind::AllocTc,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a scenario file and print its derived parameter table
    Validate { file: PathBuf },
    /// Simulate a scenario and export load.csv, summary.csv and meta.csv
    Run {
        file: PathBuf,
        /// Admission engine to drive
        #[arg(long, value_enum, default_value_t = EngineArg::Gbam)]
        engine: EngineArg,
        /// Override the scenario's seed
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for the CSV files
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Replay identical workloads through configured engines and oracles and
    /// diff their decision sequences
    Compare {
        file: PathBuf,
        /// Comma-separated pairs, e.g. gbam:rdm=rdm
        #[arg(long, default_value = "gbam:mam=mam,gbam:rdm=rdm,gbam:alloctc=alloctc")]
        pairs: String,
        /// Number of seeds per pair, starting at the scenario's seed
        #[arg(long, default_value_t = 20)]
        seeds: u64,
    },
    /// Print the derived configuration tables for the reference BC set
    Tables,
}

fn dispatch(command: Command) -> Result<String, CliError> {
    match command {
        Command::Validate { file } => cli::cmd_validate(&file),
        Command::Run { file, engine, seed, out } => {
            cli::cmd_run(&file, engine.into(), seed, &out)
        }
        Command::Compare { file, pairs, seeds } => {
            let pairs = cli::parse_pairs(&pairs)?;
            cli::cmd_compare(&file, &pairs, seeds)
        }
        Command::Tables => Ok(cli::render_tables()),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match dispatch(args.command) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
