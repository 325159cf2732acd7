use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lambda_eit_cli::fit::{fit_table, FitModel, Selection};
use lambda_eit_cli::{parse_config, run_preset, CliError, CliResult, Preset, RunOptions};

/// Simulate and fit electromagnetically induced transparency in a flux-modulated transmon.
#[derive(Debug, Parser)]
#[command(name = "lambda-eit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment preset and write its tables and fits.
    Run {
        #[arg(long, value_enum)]
        preset: Preset,
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding `[output] directory`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render an SVG next to each CSV.
        #[arg(long)]
        plots: bool,
        /// Worker threads; 0 or absent uses all cores.
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Fit a transmission table and print the parameters as JSON.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        model: FitModel,
        /// Configuration supplying the fixed device and drive parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Keep only rows with `column=value`.
        #[arg(long)]
        select: Option<Selection>,
    },
    /// Parse and validate a configuration file.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run {
            preset,
            config,
            out,
            plots,
            parallel,
        } => {
            let cfg = parse_config(&config)?;
            let opts = RunOptions {
                out_dir: out,
                plots,
                parallel,
            };
            let manifest = run_preset(preset, &cfg, &opts)?;
            println!("{} files written to {}", manifest.files.len(), manifest.output_dir);
        }
        Command::Fit {
            input,
            model,
            config,
            select,
        } => {
            let cfg = config.as_deref().map(parse_config).transpose()?;
            let value = fit_table(&input, model, cfg.as_ref(), select.as_ref())?;
            println!("{}", serde_json::to_string_pretty(&value)?);
        }
        Command::Validate { config } => {
            let cfg = parse_config(&config)?;
            cfg.device.validate().map_err(CliError::from)?;
            cfg.drive.validate(&cfg.device).map_err(CliError::from)?;
            println!("{}: ok", config.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LAMBDA_EIT_LOG", "warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
