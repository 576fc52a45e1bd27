use clap::Parser;

fn main() {
    let cli = causality_cli::Cli::parse();
    std::process::exit(causality_cli::run(&cli));
}
