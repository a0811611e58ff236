use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod run;

use config::Config;

#[derive(Parser, Debug)]
#[command(name = "migdet", version, about = "Matrix information geometry detection experiments")]
struct Cli {
    /// TOML configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// False-alarm probability for `detect`.
    #[arg(long, global = true)]
    pfa: Option<f64>,
    /// Main trial count of the subcommand: Pd trials for `detect`, repeats for
    /// `robustness` and `influence`, sets for `mean`, pairs for
    /// `divergence-table`, grid points per axis for `isosurface`.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads, 0 = all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Divergences between random HPD pairs.
    DivergenceTable,
    /// Means of random HPD sets with convergence diagnostics.
    Mean,
    /// Offset error of each mean against the true covariance.
    Robustness,
    /// Influence of outliers on each mean.
    Influence,
    /// Threshold calibration and Pd-vs-SCR curves.
    Detect,
    /// Points on a divergence ball around a diagonal center.
    Isosurface,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::DivergenceTable => "divergence-table",
            Self::Mean => "mean",
            Self::Robustness => "robustness",
            Self::Influence => "influence",
            Self::Detect => "detect",
            Self::Isosurface => "isosurface",
        }
    }
}

const EXIT_IO: u8 = 1;
const EXIT_SCHEMA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn load_config(cli: &Cli) -> Result<Config, (u8, String)> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| (EXIT_IO, format!("cannot read {}: {e}", path.display())))?;
            Config::parse(&text).map_err(|e| (EXIT_SCHEMA, format!("{}: {e}", path.display())))?
        }
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(threads) = cli.threads {
        config.threads = threads;
    }
    if let Some(pfa) = cli.pfa {
        config.detect.pfa = pfa;
    }
    if let Some(n) = cli.trials {
        match cli.command {
            Command::DivergenceTable => config.divergence_table.pairs = n,
            Command::Mean => config.mean.sets = n,
            Command::Robustness => config.robustness.repeats = n,
            Command::Influence => config.influence.repeats = n,
            Command::Detect => config.detect.pd_trials = n,
            Command::Isosurface => config.isosurface.points = n,
        }
    }
    config
        .validate()
        .map_err(|e| (EXIT_SCHEMA, format!("invalid configuration: {e}")))?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(code);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(config.threads).build_global() {
        eprintln!("warning: thread pool already initialized: {e}");
    }
    match run::run(cli.command, &config, &cli.out) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(run::RunError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
        Err(run::RunError::Numeric(e)) => {
            eprintln!("error: {}: {e}", cli.command.name());
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}
