mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Output};
use commands::{CliError, CliResult, Outcome};

fn output_of(command: &Command) -> &Output {
    match command {
        Command::Solve(a) => &a.output,
        Command::Curve(a) => &a.output,
        Command::Profile(a) => &a.output,
        Command::Constants(a) => &a.output,
        Command::Verify(a) => &a.output,
    }
}

fn emit(output: &Output, body: &str) -> CliResult<()> {
    match &output.out {
        Some(path) => std::fs::write(path, body).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "stdout".to_owned(),
                    source,
                })
        }
    }
}

fn run(cli: &Cli) -> CliResult<u8> {
    let Outcome {
        body,
        note,
        exit_code,
    } = match &cli.command {
        Command::Solve(a) => commands::solve(a)?,
        Command::Curve(a) => commands::curve(a)?,
        Command::Profile(a) => commands::profile(a)?,
        Command::Constants(a) => commands::constants(a)?,
        Command::Verify(a) => commands::verify(a)?,
    };
    emit(output_of(&cli.command), &body)?;
    if let Some(note) = note {
        eprintln!("{note}");
    }
    Ok(exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
