use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use helifb_cli::{
    exit_code, run_analyze, run_exact, run_reconstruct, run_solve, run_validate, status_code, Inputs, Log, RunConfig,
    EXIT_INPUT, EXIT_INTERNAL,
};

#[derive(Parser)]
#[command(name = "helifb", version, about = "Helical one-phase free boundary solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Suppress progress messages.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct FieldInputs {
    /// Stream function, defaults to `<out>/psi.csv`.
    #[arg(long, value_name = "PATH")]
    psi: Option<PathBuf>,
    /// Grid description, defaults to `<out>/grid.json`.
    #[arg(long, value_name = "PATH")]
    grid: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Minimise the energy and write psi.csv, grid.json, solve_report.json.
    Solve(Common),
    /// Free boundary diagnostics: diagnostics.json and fb_curve.csv.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: FieldInputs,
    },
    /// 3D velocity samples and residuals: field3d.csv and residuals.json.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: FieldInputs,
    },
    /// Sample the [exact] solution on the configured grid.
    Exact(Common),
    /// Check the config and profile without solving.
    Validate(Common),
}

fn run(cli: Cli) -> Result<u8, helifb_core::Error> {
    let (common, inputs) = match &cli.command {
        Command::Solve(c) | Command::Exact(c) | Command::Validate(c) => (c, None),
        Command::Analyze { common, inputs } | Command::Reconstruct { common, inputs } => (common, Some(inputs)),
    };
    let log = Log { quiet: common.quiet };
    let config = RunConfig::load(&common.config)?;
    let out = common.out.clone().unwrap_or_else(|| config.output.clone());
    let inputs = inputs.map(|i| {
        let d = Inputs::in_dir(&out);
        Inputs {
            psi: i.psi.clone().unwrap_or(d.psi),
            grid: i.grid.clone().unwrap_or(d.grid),
        }
    });
    let status = match cli.command {
        Command::Solve(_) => run_solve(&config, &out, log)?,
        Command::Analyze { .. } => run_analyze(&config, inputs.as_ref().unwrap(), &out, log)?,
        Command::Reconstruct { .. } => run_reconstruct(&config, inputs.as_ref().unwrap(), &out, log)?,
        Command::Exact(_) => run_exact(&config, &out, log)?,
        Command::Validate(_) => run_validate(&config, log)?,
    };
    Ok(status_code(status))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match panic::catch_unwind(|| run(cli)) {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
