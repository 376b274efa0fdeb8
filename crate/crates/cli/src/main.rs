use clap::Parser;

fn main() {
    std::process::exit(phasequant_cli::run(phasequant_cli::Cli::parse()));
}
