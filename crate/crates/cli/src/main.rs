use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use so5_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(outcome.stdout.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(1);
            }
            ExitCode::from(outcome.code as u8)
        }
        Err((code, msg)) => {
            eprintln!("{}", msg);
            ExitCode::from(code as u8)
        }
    }
}
