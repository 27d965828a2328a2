use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = rcp_cli::Cli::parse();
    match rcp_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
