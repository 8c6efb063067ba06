use std::path::PathBuf;
use std::process::ExitCode;

use biortho_cli::{run, Command, ExperimentConfig, Overrides};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "biortho", version, about = "Biorthogonal families, bound certificates and control-cost experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` of the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Working precision in bits; overrides `options.precision_bits`.
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// Worker threads for parallel grid points.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Check the class hypotheses on a prefix.
    Classify,
    /// Minimal-norm biorthogonal families with bound certificates.
    Biortho,
    /// Paley–Wiener synthesis of q_k.
    Pw,
    /// Lower-bound formulas without observations.
    Bounds,
    /// Control cost K(T) over a T-grid.
    Cost,
    /// Cost over a parameter grid.
    Sweep,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Classify => Command::Classify,
            Sub::Biortho => Command::Biortho,
            Sub::Pw => Command::Pw,
            Sub::Bounds => Command::Bounds,
            Sub::Cost => Command::Cost,
            Sub::Sweep => Command::Sweep,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let path = cli.config.as_ref().ok_or_else(|| biortho_cli::CliError::ConfigInvalid("--config <path> is required".into()))?;
        let cfg = ExperimentConfig::from_file(path)?;
        let wanted = Command::from(cli.command);
        if cfg.command != wanted {
            return Err(biortho_cli::CliError::ConfigInvalid(format!("config is for `{}`, not `{}`", cfg.command.name(), wanted.name())));
        }
        let cfg = cfg.resolve(&Overrides { out: cli.out.clone(), precision: cli.precision })?;
        run(&cfg, cli.threads)
    })();
    match result {
        Ok(m) => {
            println!("{} finished; artifacts: {}", m.config.command.name(), m.artifacts.join(", "));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
