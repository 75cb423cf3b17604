//! The `signseg` command-line tool.

pub mod args;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;

use args::{Cli, Command};
use error::CliResult;

pub fn run(cli: &Cli) -> CliResult<()> {
    let train = match &cli.command {
        Command::Train(a) => Some(&a.settings),
        _ => None,
    };
    let settings = config::resolve(&cli.common, train)?;
    match &cli.command {
        Command::Segment(a) => commands::segment(a, &cli.command, &settings),
        Command::Train(a) => commands::train(a, &cli.command, &settings),
        Command::Tune(a) => commands::tune(a, &cli.command, &settings),
        Command::Eval(a) => commands::eval(a, &cli.command, &settings),
        Command::BioFidelity(a) => commands::bio_fidelity(a, &cli.command, &settings),
        Command::HandBench(a) => commands::hand_bench(a, &cli.command, &settings),
        Command::FlowDump(a) => commands::flow_dump(a, &cli.command, &settings),
    }
}
