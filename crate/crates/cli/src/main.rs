use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use painscreen::{cmd_run, cmd_screen, cmd_simulate, cmd_stats, CliResult};

#[derive(Parser)]
#[command(name = "painscreen", version, about = "EMG pain-window screening and therapy simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic frame stream plus ground-truth labels
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        /// Overrides `seed` from the config file
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the full pipeline over a frame file
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Ground-truth `window_id,label` CSV
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Weight and screen an information-system CSV
    Screen {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Two-sample t-test or one-way ANOVA over a `group,value` CSV
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = ["ttest", "anova"])]
        test: String,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { config, output, seed } => cmd_simulate(config.as_deref(), &output, seed),
        Command::Run { config, input, output, truth } => {
            let out = cmd_run(config.as_deref(), &input, &output, truth.as_deref())?;
            eprintln!(
                "wrote {}, {}, {}",
                out.report.display(),
                out.weights.display(),
                out.commands.display()
            );
            Ok(())
        }
        Command::Screen { config, input, output } => {
            for object in cmd_screen(config.as_deref(), &input, &output)? {
                println!("{object}");
            }
            Ok(())
        }
        Command::Stats { input, test } => {
            println!("{}", cmd_stats(&input, &test)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("painscreen: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
