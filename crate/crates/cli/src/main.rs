use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ske_cli::config::{BranchSpec, Command, Format, OrderSpec, RunConfig};
use ske_cli::{run, CliError, Overrides};

/// Subdynamics of a two-qubit exchange system coupled to a truncated bosonic bath.
#[derive(Debug, Parser)]
#[command(name = "ske", version)]
struct Args {
    /// Command to run; falls back to the config's `command` entry.
    #[arg(value_enum)]
    command: Option<Command>,
    /// Inner command for `sweep`.
    #[arg(value_enum)]
    inner: Option<Command>,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    order: Option<OrderSpec>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Grid such as `lambda=0.01:0.1:5` or `n_max=1:3:3`.
    #[arg(long)]
    sweep: Option<String>,
    /// Sign of the square root in the triangulating γ.
    #[arg(long, value_enum)]
    branch: Option<BranchSpec>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = RunConfig::load(&args.config).and_then(|cfg| {
        let to_stdout =
            args.out.is_none() && cfg.output.as_ref().and_then(|o| o.path.as_ref()).is_none();
        let text = run(
            cfg,
            Overrides {
                command: args.command,
                inner: args.inner,
                order: args.order,
                branch: args.branch,
                format: args.format,
                out: args.out,
                sweep: args.sweep,
            },
        )?;
        if to_stdout {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
