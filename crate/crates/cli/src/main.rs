mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use log::{error, info};

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(
        env_logger::Env::default().default_filter_or(if cli.quiet { "warn" } else { "info" }),
    )
    .format_timestamp(None)
    .init();

    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            error!("could not size the thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let seed = cli.seed.unwrap_or_else(rand::random);
    info!(
        "multida {} command={} seed={seed} threads={}",
        env!("CARGO_PKG_VERSION"),
        command_name(&cli.command),
        rayon::current_num_threads()
    );
    info!("resolved arguments: {:?}", cli.command);

    let result = match &cli.command {
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Cv(a) => commands::cv(a, seed),
        Command::Simulate(a) => commands::simulate(a, seed),
        Command::Partitions(a) => commands::partitions(a),
        Command::Filter(a) => commands::filter(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Train(_) => "train",
        Command::Predict(_) => "predict",
        Command::Cv(_) => "cv",
        Command::Simulate(_) => "simulate",
        Command::Partitions(_) => "partitions",
        Command::Filter(_) => "filter",
    }
}
