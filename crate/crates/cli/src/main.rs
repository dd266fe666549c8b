use clap::Parser;

use photon_maxent_cli::cli::{execute, Cli};
use photon_maxent_cli::exit;

fn main() {
    let cli = Cli::parse();
    let code = match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit::ERROR
        }
    };
    std::process::exit(code);
}
