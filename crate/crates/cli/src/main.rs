use clap::Parser;

use fel1d_cli::run::{execute, Cli};
use fel1d_cli::CliError;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = execute(&cli) {
        if !matches!(err, CliError::CompareFailed) {
            eprintln!("error: {err}");
        }
        std::process::exit(err.exit_code());
    }
}
