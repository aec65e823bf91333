use clap::Parser;
use leaky_spectra::cli::{main_with, Cli};

fn main() {
    let cli = Cli::parse();
    std::process::exit(main_with(cli));
}
