// `!(x > 0.0)` is how NaN gets rejected along with the rest
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod energy;
mod model;
mod plan;
mod presets;
mod simulate;
mod table;

#[derive(Parser)]
#[command(
    name = "dsme-lora",
    version,
    about = "DSME over LoRa: simulator, queueing model and planning tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a built-in preset and write CSV metrics.
    Simulate(simulate::Args),
    /// Evaluate the GTS queueing model.
    Model(model::Args),
    /// Duty-cycle limited rates for a star of sources.
    Plan(plan::Args),
    /// Energy breakdown, power and battery lifetime.
    Energy(energy::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Model(a) => model::run(a),
        Command::Plan(a) => plan::run(a),
        Command::Energy(a) => energy::run(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        // output piped into e.g. `head`
        Err(e)
            if e.chain().any(|c| {
                c.downcast_ref::<std::io::Error>()
                    .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            }) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
