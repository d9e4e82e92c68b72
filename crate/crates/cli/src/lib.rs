//! Command-line front end for `langgram`.

pub mod args;
pub mod commands;
pub mod server;

use std::process::ExitCode;

use anyhow::Result;

use args::{Cli, Command};

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train(a) => commands::train(&a),
        Command::Classify(a) => commands::classify_cmd(&a),
        Command::Evaluate(a) => commands::evaluate_cmd(&a),
        Command::Inspect(a) => commands::inspect(&a),
        Command::Preprocess(a) => commands::preprocess(&a),
        Command::Serve(a) => {
            let model = langgram::model_file::ModelFile::load(&a.model.model)?.model;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(server::serve(model, a.bind))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
