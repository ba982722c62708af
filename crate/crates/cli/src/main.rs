use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use confine::builtin::{resolve, BUILTIN};
use confine::scenario::{Scenario, SCHEMA};
use confine::{run, RunOptions};

#[derive(Parser)]
#[command(name = "confine", version, about = "Stiff-confinement quantization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or built-in scenario.
    Run {
        scenario: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// List built-in scenarios.
    ListScenarios,
    /// Validate a scenario and print it with defaults filled in.
    Validate {
        scenario: String,
        /// Also print the documented keys.
        #[arg(long)]
        schema: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            threads,
        } => {
            let sc = match resolve(&scenario) {
                Ok(sc) => sc,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            match run(&sc, &RunOptions { out, seed, threads }) {
                Ok(report) => {
                    print!("{}", report.render());
                    ExitCode::from(report.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::ListScenarios => {
            for (name, text) in BUILTIN {
                match Scenario::parse(text) {
                    Ok(sc) => println!("{name:<22} {:<20} {}", sc.kind.label(), sc.description),
                    Err(e) => println!("{name:<22} invalid: {e}"),
                }
            }
            ExitCode::SUCCESS
        }
        Command::Validate { scenario, schema } => match resolve(&scenario) {
            Ok(sc) => {
                print!("{}", sc.to_toml());
                if schema {
                    println!();
                    for (key, doc) in SCHEMA {
                        println!("# {key:<36} {doc}");
                    }
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}
