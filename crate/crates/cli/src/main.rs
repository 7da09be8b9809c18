mod config;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use crate::commands::Cli;

// Exit codes: 0 success, 1 usage, 2 I/O, 3 format/dimension.
const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_FORMAT: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Keep clap's help/version on stdout with success status.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                commands::CliError::Usage(_) => EXIT_USAGE,
                commands::CliError::Core(lssbg::Error::Io { .. }) => EXIT_IO,
                commands::CliError::Core(_) => EXIT_FORMAT,
            })
        }
    }
}
