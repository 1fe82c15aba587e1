use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = bbc::cli::Cli::parse();
    match bbc::cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code as u8)
        }
    }
}
