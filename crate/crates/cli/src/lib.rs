//! Subcommands of the `liquidbench` binary, kept in a library so tests can
//! drive them without spawning processes.

pub mod args;
pub mod exit;
pub mod serve;
pub mod settings;
pub mod simulate;
pub mod skin;
pub mod study;

use anyhow::Result;

use args::{Cli, Command, StudyCommand};
use settings::Context;

pub fn run(cli: Cli) -> Result<()> {
    if cli.threads > 0 {
        // Fails only if a pool already exists, which is fine in tests.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let ctx = Context::from_cli(&cli)?;
    match cli.command {
        Command::Simulate(a) => simulate::run(&ctx, &a).map(|_| ()),
        Command::Skin(a) => skin::run(&ctx, &a),
        Command::Study(c) => match c {
            StudyCommand::Generate(a) => study::generate(&ctx, &a),
            StudyCommand::Serve(a) => serve::run(&ctx, &a),
            StudyCommand::Ingest(a) => study::ingest(&a),
            StudyCommand::Score(a) => study::score(&ctx, &a),
            StudyCommand::Correlate(a) => study::correlate(&a),
            StudyCommand::Simulate(a) => study::simulate(&ctx, &a),
        },
    }
}
