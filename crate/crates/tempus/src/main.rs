use clap::Parser;
use tempus::cli::Cli;

fn main() {
    if let Err(e) = Cli::parse().run() {
        eprintln!("tempus: {e}");
        std::process::exit(e.exit_code());
    }
}
