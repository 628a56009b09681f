use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = splpo_cli::Cli::parse();
    match splpo_cli::run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(splpo_cli::exit_code(&e) as u8)
        }
    }
}
