use clap::Parser;

fn main() {
    let cli = leray_cli::Cli::parse();
    std::process::exit(leray_cli::run(&cli));
}
