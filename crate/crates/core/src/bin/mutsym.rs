use clap::Parser;

use mutsym::cli::{run_cli, Cli};

fn main() {
    match run_cli(Cli::parse()) {
        Ok(text) => print!("{text}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
