use clap::Parser;

fn main() {
    std::process::exit(confinv_cli::run(confinv_cli::Cli::parse()));
}
