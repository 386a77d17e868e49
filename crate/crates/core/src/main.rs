use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = amrmul::cli::Cli::parse();
    let stdout = std::io::stdout();
    match amrmul::cli::run(&cli, &mut stdout.lock()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
