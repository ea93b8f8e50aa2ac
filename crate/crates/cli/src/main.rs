use std::process::ExitCode;

use clap::Parser;
use mixphase_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli);
    print!("{}", outcome.stdout);
    match outcome.error {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("mixphase: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
