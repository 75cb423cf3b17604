use std::process::ExitCode;

use clap::Parser;
use signseg_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match signseg_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("signseg: {e}");
            ExitCode::FAILURE
        }
    }
}
